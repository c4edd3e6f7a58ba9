"""Effective-rank metrics for language-model hidden representations.

Computes matrix entropy and effective rank of token-representation
covariances, untrained-vs-trained effective-rank differences (per sentence
and per dataset), reduced cross-entropy loss, and modality-alignment ratios
for vision-language models, working from tensor dumps indexed by manifests.
"""

from ._version import __version__
from .exceptions import (
    DataError,
    DegenerateInput,
    DiffRankError,
    DuplicateSentenceId,
    EmptySequence,
    FormatError,
    MalformedHeader,
    NonFiniteInput,
    SchemaViolation,
    SentenceSetMismatch,
    ShapeMismatch,
    SpectrumDivergence,
    TruncatedPayload,
    ZeroMatrix,
)
from .metrics import (
    ModelDatasetSummary,
    MultimodalERanks,
    SentenceEntropyRecord,
    SequenceLogProbs,
    cross_entropy_loss,
    dataset_diff_erank_a,
    dataset_diff_erank_b,
    diff_erank_sentence,
    image_reduction_ratio,
    image_text_alignment,
    reduced_loss,
    sentence_record,
    summarize,
)
from .spectral import (
    CovarianceMatrix,
    Spectrum,
    build_covariance,
    covariance_spectrum,
    erank_general,
    erank_of_covariance,
    matrix_entropy,
    representation_spectrum,
)

def __getattr__(name):
    # The sklearn-backed estimator loads lazily so the CLI does not pay the
    # sklearn import cost for pure metric runs.
    if name == "EffectiveRank":
        from .estimator import EffectiveRank

        return EffectiveRank
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "__version__",
    "EffectiveRank",
    "DiffRankError",
    "DataError",
    "NonFiniteInput",
    "DegenerateInput",
    "SpectrumDivergence",
    "ZeroMatrix",
    "EmptySequence",
    "SentenceSetMismatch",
    "FormatError",
    "MalformedHeader",
    "ShapeMismatch",
    "TruncatedPayload",
    "SchemaViolation",
    "DuplicateSentenceId",
    "CovarianceMatrix",
    "Spectrum",
    "build_covariance",
    "covariance_spectrum",
    "representation_spectrum",
    "matrix_entropy",
    "erank_of_covariance",
    "erank_general",
    "SentenceEntropyRecord",
    "ModelDatasetSummary",
    "SequenceLogProbs",
    "MultimodalERanks",
    "sentence_record",
    "summarize",
    "diff_erank_sentence",
    "dataset_diff_erank_a",
    "dataset_diff_erank_b",
    "cross_entropy_loss",
    "reduced_loss",
    "image_reduction_ratio",
    "image_text_alignment",
]
