"""Extraction adapter: bridges transformer checkpoints to the tensor-dump
file contracts consumed by the diffrank metrics engine.

Everything here is inference-only; the single exception is the untrained-twin
builder, which materializes a freshly initialized copy of a checkpoint's
architecture under a fixed seed.
"""

from ._errors import AdapterError, DatasetError, UnsupportedArchitecture
from .datasets import load_sentences, sample_dataset
from .hidden import ExtractionJob, extract_hidden_states, extract_logprobs
from .mm import MmExtractionJob, extract_mm_stages
from .twin import make_untrained_twin

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AdapterError",
    "DatasetError",
    "UnsupportedArchitecture",
    "ExtractionJob",
    "MmExtractionJob",
    "extract_hidden_states",
    "extract_logprobs",
    "extract_mm_stages",
    "load_sentences",
    "make_untrained_twin",
    "sample_dataset",
]
