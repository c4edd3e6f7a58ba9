"""Manifest-driven evaluation: fan sentences out to a worker pool, reduce in
manifest order, and assemble reports.

Per-sentence work (tensor load, eigendecomposition) runs on a thread pool;
numpy releases the GIL inside the solvers, so threads scale. All reductions
consume results in manifest order, which keeps report bytes independent of
both thread count and completion order.

Skip policy: a sentence whose representations are degenerate (too few usable
token vectors) is excluded and counted, not fatal; ``strict`` turns the first
such sentence into an error. In pair evaluation a sentence skipped for either
model is excluded from both models' aggregates, so the dataset-level
difference always compares identical sentence sets.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ._version import __version__
from .exceptions import DataError, DegenerateInput, SentenceSetMismatch
from .io.manifest import DumpManifest, ManifestEntry, load_manifest
from .io.npyio import read_tensor
from .io.report import (
    InputDigest,
    MetricsReport,
    MmReport,
    ModelReport,
    PairReport,
    SentenceRow,
    SkippedSentence,
    sha256_file,
)
from .metrics import (
    ModelDatasetSummary,
    MultimodalERanks,
    SentenceEntropyRecord,
    cross_entropy_loss,
    dataset_diff_erank_a,
    dataset_diff_erank_b,
    reduced_loss,
    sentence_record,
    summarize,
)

__all__ = [
    "evaluate_manifest",
    "ModelEvaluation",
    "single_report",
    "reps_report",
    "pair_report",
    "loss_report",
    "mm_report_from_values",
    "mm_report_from_manifests",
]

ALGORITHMS = ("a", "b", "both")


@dataclass(frozen=True)
class SentenceOutcome:
    entry: ManifestEntry
    record: SentenceEntropyRecord | None
    loss: float | None
    skip_reason: str | None = None


@dataclass(frozen=True)
class ModelEvaluation:
    manifest: DumpManifest
    outcomes: tuple[SentenceOutcome, ...]

    def skipped_ids(self) -> set[str]:
        return {o.entry.sentence_id for o in self.outcomes if o.skip_reason is not None}

    def outcome_by_id(self) -> dict[str, SentenceOutcome]:
        return {o.entry.sentence_id: o for o in self.outcomes}

    def skipped_sentences(self) -> tuple[SkippedSentence, ...]:
        return tuple(
            SkippedSentence(o.entry.sentence_id, o.skip_reason)
            for o in self.outcomes
            if o.skip_reason is not None
        )


def _worker_count(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return threads


def _pool_map(fn: Callable, items: Sequence, threads: int | None) -> list:
    workers = _worker_count(threads)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def evaluate_manifest(manifest: DumpManifest, *, route: str = "auto",
                      threads: int | None = None, strict: bool = False,
                      need_spectra: bool = True,
                      need_losses: bool = True) -> ModelEvaluation:
    """Evaluate every manifest entry; outcomes come back in manifest order."""

    def one(entry: ManifestEntry) -> SentenceOutcome:
        record = None
        skip_reason = None
        if need_spectra:
            reps = read_tensor(manifest.resolve(entry.reps_path)).data
            try:
                record = sentence_record(entry.sentence_id, reps, route=route)
            except DegenerateInput as exc:
                return SentenceOutcome(entry, None, None, skip_reason=str(exc))
        loss = None
        if need_losses and entry.logprobs_path is not None:
            loss = cross_entropy_loss(read_tensor(manifest.resolve(entry.logprobs_path)).data)
        return SentenceOutcome(entry, record, loss, skip_reason)

    outcomes = _pool_map(one, manifest.entries, threads)
    if strict:
        for outcome in outcomes:
            if outcome.skip_reason is not None:
                raise DegenerateInput(
                    f"sentence {outcome.entry.sentence_id!r}: {outcome.skip_reason}"
                )
    return ModelEvaluation(manifest, tuple(outcomes))


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return float(np.mean(np.asarray(values, dtype=np.float64)))


def _rows(outcomes: Iterable[SentenceOutcome]) -> tuple[SentenceRow, ...]:
    rows = []
    for o in outcomes:
        if o.skip_reason is not None:
            continue
        if o.record is not None:
            rows.append(SentenceRow(
                sentence_id=o.entry.sentence_id,
                token_count=o.record.token_count,
                entropy=o.record.entropy,
                erank=o.record.erank,
                dropped_rows=o.record.dropped_rows,
                loss=o.loss,
            ))
        else:
            rows.append(SentenceRow(
                sentence_id=o.entry.sentence_id,
                token_count=o.entry.token_count,
                entropy=None,
                erank=None,
                dropped_rows=None,
                loss=o.loss,
            ))
    return tuple(rows)


def _model_report(evaluation: ModelEvaluation,
                  keep_ids: set[str] | None = None) -> tuple[ModelReport, ModelDatasetSummary | None]:
    """Build one model's block; ``keep_ids`` restricts aggregation (pair mode)."""
    manifest = evaluation.manifest
    usable = [
        o for o in evaluation.outcomes
        if o.skip_reason is None and (keep_ids is None or o.entry.sentence_id in keep_ids)
    ]
    summary = None
    mean_entropy = erank_a = erank_b = None
    if any(o.record is not None for o in usable):
        summary = summarize(manifest.model_id, manifest.layer,
                            [o.record for o in usable if o.record is not None])
        mean_entropy, erank_a, erank_b = summary.mean_entropy, summary.erank_a, summary.erank_b
    losses = [o.loss for o in usable if o.loss is not None]
    mean_loss = _mean(losses) if len(losses) == len(usable) and usable else None
    report = ModelReport(
        model_id=manifest.model_id,
        layer=manifest.layer,
        records=_rows(usable),
        mean_entropy=mean_entropy,
        erank_a=erank_a,
        erank_b=erank_b,
        mean_loss=mean_loss,
        skipped=evaluation.skipped_sentences(),
    )
    return report, summary


def _digest(role: str, path) -> InputDigest:
    return InputDigest(role=role, path=str(path), sha256=sha256_file(path))


def single_report(manifest_path, *, route: str = "auto", threads: int | None = None,
                  strict: bool = False) -> MetricsReport:
    """Per-sentence entropy/eRank report for one manifest."""
    manifest = load_manifest(manifest_path)
    evaluation = evaluate_manifest(manifest, route=route, threads=threads, strict=strict)
    model, _ = _model_report(evaluation)
    if not model.records:
        raise DegenerateInput("every sentence in the manifest was skipped")
    return MetricsReport(
        tool_version=__version__,
        inputs=(_digest("manifest", manifest_path),),
        models=(model,),
    )


def reps_report(reps_path, *, route: str = "auto") -> MetricsReport:
    """Entropy/eRank report for a single bare tensor file."""
    reps_path = Path(reps_path)
    reps = read_tensor(reps_path).data
    record = sentence_record(reps_path.stem, reps, route=route)
    row = SentenceRow(record.sentence_id, record.token_count, record.entropy,
                      record.erank, record.dropped_rows)
    model = ModelReport(
        model_id=reps_path.stem,
        layer=-1,
        records=(row,),
        mean_entropy=record.entropy,
        erank_a=record.erank,
        erank_b=record.erank,
        mean_loss=None,
    )
    return MetricsReport(
        tool_version=__version__,
        inputs=(_digest("reps", reps_path),),
        models=(model,),
    )


def _matched_manifests(untrained: DumpManifest, trained: DumpManifest) -> None:
    ids0 = set(untrained.sentence_ids())
    ids1 = set(trained.sentence_ids())
    if ids0 != ids1:
        raise SentenceSetMismatch(ids0 - ids1, ids1 - ids0)


def pair_report(untrained_path, trained_path, *, algorithm: str = "a",
                route: str = "auto", threads: int | None = None,
                strict: bool = False) -> MetricsReport:
    """Dataset-level difference report between an untrained and a trained model.

    Emits the Diff-eRank for the selected algorithm(s) and, when both
    manifests carry log-probs for every sentence, the reduced loss.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    untrained = load_manifest(untrained_path)
    trained = load_manifest(trained_path)
    _matched_manifests(untrained, trained)

    eval0 = evaluate_manifest(untrained, route=route, threads=threads, strict=strict)
    eval1 = evaluate_manifest(trained, route=route, threads=threads, strict=strict)

    skipped = eval0.skipped_ids() | eval1.skipped_ids()
    keep = [sid for sid in untrained.sentence_ids() if sid not in skipped]
    if not keep:
        raise DegenerateInput("no sentence is usable for both models")
    keep_set = set(keep)

    model0, summary0 = _model_report(eval0, keep_set)
    model1, summary1 = _model_report(eval1, keep_set)

    diff_a = diff_b = None
    if algorithm in ("a", "both"):
        diff_a = dataset_diff_erank_a(summary0, summary1)
    if algorithm in ("b", "both"):
        diff_b = dataset_diff_erank_b(summary0, summary1)

    delta_loss = None
    if model0.mean_loss is not None and model1.mean_loss is not None \
            and untrained.has_complete_logprobs() and trained.has_complete_logprobs():
        delta_loss = reduced_loss(model0.mean_loss, model1.mean_loss)

    return MetricsReport(
        tool_version=__version__,
        inputs=(_digest("untrained", untrained_path), _digest("trained", trained_path)),
        models=(model0, model1),
        pair=PairReport(diff_erank_a=diff_a, diff_erank_b=diff_b, reduced_loss=delta_loss),
    )


def loss_report(untrained_path, trained_path, *, threads: int | None = None) -> MetricsReport:
    """Reduced-loss report; reads only log-prob tensors."""
    untrained = load_manifest(untrained_path)
    trained = load_manifest(trained_path)
    _matched_manifests(untrained, trained)
    for name, manifest in (("untrained", untrained), ("trained", trained)):
        if not manifest.has_complete_logprobs():
            raise DataError(f"{name} manifest lacks logprobs_path for some sentences")

    eval0 = evaluate_manifest(untrained, threads=threads, need_spectra=False)
    eval1 = evaluate_manifest(trained, threads=threads, need_spectra=False)
    model0, _ = _model_report(eval0)
    model1, _ = _model_report(eval1)
    delta = reduced_loss(model0.mean_loss, model1.mean_loss)
    return MetricsReport(
        tool_version=__version__,
        inputs=(_digest("untrained", untrained_path), _digest("trained", trained_path)),
        models=(model0, model1),
        pair=PairReport(reduced_loss=delta),
    )


def mm_report_from_values(e1: float, e2: float, e3: float, e4: float, e5: float) -> MetricsReport:
    """Modality-alignment report from five already-computed effective ranks."""
    ranks = MultimodalERanks(e1, e2, e3, e4, e5)
    mm = MmReport(
        erank1=ranks.erank1, erank2=ranks.erank2, erank3=ranks.erank3,
        erank4=ranks.erank4, erank5=ranks.erank5,
        reduction_ratio=ranks.reduction_ratio, alignment=ranks.alignment,
    )
    return MetricsReport(tool_version=__version__, mm=mm)


def mm_report_from_manifests(stage_paths: Sequence, *, route: str = "auto",
                             threads: int | None = None,
                             strict: bool = False) -> MetricsReport:
    """Modality-alignment report from five stage manifests.

    Each stage's effective rank is exp of the mean per-sample matrix entropy,
    the same aggregation used for datasets elsewhere.
    """
    if len(stage_paths) != 5:
        raise DataError(f"expected 5 stage manifests, got {len(stage_paths)}")
    stage_eranks = []
    models = []
    digests = []
    for i, path in enumerate(stage_paths, start=1):
        manifest = load_manifest(path)
        evaluation = evaluate_manifest(manifest, route=route, threads=threads,
                                       strict=strict, need_losses=False)
        model, summary = _model_report(evaluation)
        if summary is None:
            raise DegenerateInput(f"stage {i}: every sample was skipped")
        stage_eranks.append(summary.erank_a)
        models.append(model)
        digests.append(_digest(f"stage{i}", path))
    ranks = MultimodalERanks(*stage_eranks)
    mm = MmReport(
        erank1=ranks.erank1, erank2=ranks.erank2, erank3=ranks.erank3,
        erank4=ranks.erank4, erank5=ranks.erank5,
        reduction_ratio=ranks.reduction_ratio, alignment=ranks.alignment,
    )
    return MetricsReport(
        tool_version=__version__,
        inputs=tuple(digests),
        models=tuple(models),
        mm=mm,
    )
