"""Named metrics assembled from the spectral kernel.

Per sentence: matrix entropy and effective rank of the token-representation
covariance, and the effective-rank difference between an untrained and a
trained model on the same sentence.

Per dataset, two aggregations of that difference:

* algorithm (a): exp of the mean per-sentence entropy, differenced between
  models (the default);
* algorithm (b): mean of the per-sentence effective ranks, differenced.

Prediction-side metrics: mean negative log-probability of a token sequence
(cross-entropy loss, nats) and the untrained-minus-trained reduced loss.

Modality-alignment scores for vision-language models, from five effective
ranks measured at fixed pipeline stages (post vision encoder, post connector,
and LLM output for image-only, text-only, and image+text inputs):

* image reduction ratio  (e1 - e2) / e1
* image-text alignment   mean(e3, e4, e5) / max(e3, e4, e5)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DataError, DegenerateInput, SentenceSetMismatch
from .spectral import (
    erank_of_covariance,
    matrix_entropy,
    representation_spectrum,
)
from .validation import check_logprobs

__all__ = [
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


@dataclass(frozen=True)
class SentenceEntropyRecord:
    """Spectral summary of one sentence under one model."""

    sentence_id: str
    token_count: int
    entropy: float
    erank: float
    dropped_rows: int = 0

    def __post_init__(self):
        expected = math.exp(self.entropy)
        if abs(self.erank - expected) > 1e-10 * max(1.0, abs(expected)):
            raise DataError(
                f"record {self.sentence_id!r}: erank {self.erank!r} is not "
                f"exp(entropy) = {expected!r}"
            )


@dataclass(frozen=True)
class ModelDatasetSummary:
    """One model's spectral aggregates over a dataset.

    ``erank_a`` is exp of the mean entropy; ``erank_b`` is the mean of the
    per-sentence effective ranks. Jensen's inequality puts erank_b >= erank_a,
    with equality exactly when all per-sentence entropies agree.
    """

    model_id: str
    layer: int
    records: tuple[SentenceEntropyRecord, ...]
    mean_entropy: float
    erank_a: float
    erank_b: float


def sentence_record(sentence_id: str, reps, *, route: str = "auto") -> SentenceEntropyRecord:
    """Compute the spectral summary of one sentence's representations."""
    reps = np.asarray(reps, dtype=np.float64)
    spectrum, dropped = representation_spectrum(reps, route=route)
    entropy = matrix_entropy(spectrum)
    return SentenceEntropyRecord(
        sentence_id=sentence_id,
        token_count=int(reps.shape[0]),
        entropy=entropy,
        erank=math.exp(entropy),
        dropped_rows=dropped,
    )


def summarize(model_id: str, layer: int,
              records: Sequence[SentenceEntropyRecord]) -> ModelDatasetSummary:
    """Aggregate per-sentence records into a dataset summary.

    Records are reduced in the order given, so callers that fan work out to
    threads must pass them back in manifest order.
    """
    if not records:
        raise DataError("cannot summarize an empty record list")
    entropies = np.array([r.entropy for r in records], dtype=np.float64)
    eranks = np.array([r.erank for r in records], dtype=np.float64)
    mean_entropy = float(np.mean(entropies))
    return ModelDatasetSummary(
        model_id=model_id,
        layer=layer,
        records=tuple(records),
        mean_entropy=mean_entropy,
        erank_a=math.exp(mean_entropy),
        erank_b=float(np.mean(eranks)),
    )


def _erank_tagged(reps, which: str, route: str) -> float:
    try:
        return erank_of_covariance(representation_spectrum(reps, route=route)[0])
    except DegenerateInput as exc:
        raise DegenerateInput(f"{which} representations: {exc}") from exc


def diff_erank_sentence(reps_untrained, reps_trained, *, route: str = "auto") -> float:
    """Effective-rank drop from the untrained to the trained model on one sentence.

    May be negative for individual sentences; only the dataset-level trend is
    expected to be positive.
    """
    e0 = _erank_tagged(reps_untrained, "untrained", route)
    e1 = _erank_tagged(reps_trained, "trained", route)
    return e0 - e1


def _require_matching_ids(summary0: ModelDatasetSummary, summary1: ModelDatasetSummary) -> None:
    ids0 = {r.sentence_id for r in summary0.records}
    ids1 = {r.sentence_id for r in summary1.records}
    if ids0 != ids1:
        raise SentenceSetMismatch(ids0 - ids1, ids1 - ids0)


def dataset_diff_erank_a(summary0: ModelDatasetSummary,
                         summary1: ModelDatasetSummary) -> float:
    """Dataset-level difference of exp-mean-entropy effective ranks (algorithm a)."""
    _require_matching_ids(summary0, summary1)
    return summary0.erank_a - summary1.erank_a


def dataset_diff_erank_b(summary0: ModelDatasetSummary,
                         summary1: ModelDatasetSummary) -> float:
    """Dataset-level difference of mean per-sentence effective ranks (algorithm b)."""
    _require_matching_ids(summary0, summary1)
    return summary0.erank_b - summary1.erank_b


@dataclass(frozen=True)
class SequenceLogProbs:
    """Per-token conditional log-probabilities (nats) of one sentence."""

    sentence_id: str
    logprobs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "logprobs", check_logprobs(self.logprobs))


def cross_entropy_loss(seq) -> float:
    """Mean negative log-probability (nats) of a token sequence.

    Accepts a :class:`SequenceLogProbs` or a bare 1-D array of log-probs.
    """
    values = seq.logprobs if isinstance(seq, SequenceLogProbs) else check_logprobs(seq)
    return float(-np.mean(values))


def reduced_loss(loss0: float, loss1: float) -> float:
    """Untrained-model loss minus trained-model loss on the same text."""
    for name, value in (("loss0", loss0), ("loss1", loss1)):
        if not math.isfinite(value) or value < 0:
            raise DataError(f"{name} must be a finite non-negative loss, got {value!r}")
    return loss0 - loss1


def _check_erank_scalar(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 1.0:
        raise DataError(f"{name} must be a finite effective rank >= 1, got {value!r}")
    return value


def image_reduction_ratio(e1: float, e2: float) -> float:
    """Relative effective-rank drop across the connector: (e1 - e2) / e1."""
    e1 = _check_erank_scalar("e1", e1)
    e2 = _check_erank_scalar("e2", e2)
    return (e1 - e2) / e1


def image_text_alignment(e3: float, e4: float, e5: float) -> float:
    """Closeness of the three LLM-output effective ranks: mean over max.

    Always in (1/3, 1]; equals 1 exactly when all three ranks coincide.
    Permutation- and scale-invariant in its arguments.
    """
    values = [_check_erank_scalar(n, v) for n, v in (("e3", e3), ("e4", e4), ("e5", e5))]
    top = max(values)
    # Dividing each rank by the max before averaging keeps the equal-ranks
    # case exactly 1.0 and the result never above 1.
    return (values[0] / top + values[1] / top + values[2] / top) / 3.0


@dataclass(frozen=True)
class MultimodalERanks:
    """Effective ranks at the five measurement points of a vision-language model.

    1: image rows after the vision encoder; 2: after the connector;
    3/4/5: LLM output rows for image-only, text-only, and image+text input.
    """

    erank1: float
    erank2: float
    erank3: float
    erank4: float
    erank5: float

    def __post_init__(self):
        for i in range(1, 6):
            _check_erank_scalar(f"erank{i}", getattr(self, f"erank{i}"))

    @property
    def reduction_ratio(self) -> float:
        return image_reduction_ratio(self.erank1, self.erank2)

    @property
    def alignment(self) -> float:
        return image_text_alignment(self.erank3, self.erank4, self.erank5)
