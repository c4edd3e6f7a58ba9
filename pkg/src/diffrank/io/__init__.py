"""On-disk contracts: tensor files, dump manifests, and metric reports."""

from .manifest import DumpManifest, ManifestEntry, Sampling, load_manifest, write_manifest
from .npyio import TensorFile, read_tensor, read_tensor_header, tensor_file, write_tensor
from .report import (
    InputDigest,
    MetricsReport,
    MmReport,
    ModelReport,
    PairReport,
    SentenceRow,
    SkippedSentence,
    canonical_json,
    load_report,
    sha256_file,
    write_report,
)

__all__ = [
    "DumpManifest",
    "ManifestEntry",
    "Sampling",
    "load_manifest",
    "write_manifest",
    "TensorFile",
    "read_tensor",
    "read_tensor_header",
    "tensor_file",
    "write_tensor",
    "InputDigest",
    "MetricsReport",
    "MmReport",
    "ModelReport",
    "PairReport",
    "SentenceRow",
    "SkippedSentence",
    "canonical_json",
    "load_report",
    "sha256_file",
    "write_report",
]
