"""Metric reports and their canonical serialization.

JSON output is canonical: object keys sorted, floats rendered with 17
significant digits, no incidental whitespace. Two runs over the same inputs
therefore produce byte-identical reports, whatever the thread count.

CSV output holds one row per sentence; aggregates (and pair and multimodal
blocks) go to a ``<name>.aggregates.csv`` sidecar next to the main file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..exceptions import SchemaViolation

__all__ = [
    "SentenceRow",
    "SkippedSentence",
    "ModelReport",
    "PairReport",
    "MmReport",
    "InputDigest",
    "MetricsReport",
    "canonical_json",
    "write_report",
    "load_report",
    "sha256_file",
]

REPORT_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class SentenceRow:
    sentence_id: str
    token_count: int
    entropy: float | None
    erank: float | None
    dropped_rows: int | None
    loss: float | None = None


@dataclass(frozen=True)
class SkippedSentence:
    sentence_id: str
    reason: str


@dataclass(frozen=True)
class ModelReport:
    model_id: str
    layer: int
    records: tuple[SentenceRow, ...]
    mean_entropy: float | None
    erank_a: float | None
    erank_b: float | None
    mean_loss: float | None
    skipped: tuple[SkippedSentence, ...] = ()


@dataclass(frozen=True)
class PairReport:
    diff_erank_a: float | None = None
    diff_erank_b: float | None = None
    reduced_loss: float | None = None


@dataclass(frozen=True)
class MmReport:
    erank1: float
    erank2: float
    erank3: float
    erank4: float
    erank5: float
    reduction_ratio: float
    alignment: float


@dataclass(frozen=True)
class InputDigest:
    role: str
    path: str
    sha256: str


@dataclass(frozen=True)
class MetricsReport:
    tool_version: str
    inputs: tuple[InputDigest, ...] = ()
    models: tuple[ModelReport, ...] = ()
    pair: PairReport | None = None
    mm: MmReport | None = None
    schema_version: str = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "inputs": [vars(d).copy() for d in self.inputs],
            "models": [_model_dict(m) for m in self.models],
            "pair": vars(self.pair).copy() if self.pair is not None else None,
            "mm": vars(self.mm).copy() if self.mm is not None else None,
        }


def _model_dict(model: ModelReport) -> dict[str, Any]:
    return {
        "model_id": model.model_id,
        "layer": model.layer,
        "mean_entropy": model.mean_entropy,
        "erank_a": model.erank_a,
        "erank_b": model.erank_b,
        "mean_loss": model.mean_loss,
        "records": [vars(r).copy() for r in model.records],
        "skipped": [vars(s).copy() for s in model.skipped],
    }


def _float17(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"reports must not contain non-finite numbers, got {value!r}")
    return format(value, ".17g")


def _canon(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _float17(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            parts.append(json.dumps(key, ensure_ascii=False) + ":" + _canon(value[key]))
        return "{" + ",".join(parts) + "}"
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def canonical_json(document) -> str:
    """Render a report document as canonical JSON (sorted keys, 17-digit floats)."""
    return _canon(document) + "\n"


def _atomic_write_bytes(blob: bytes, path: Path) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def aggregates_sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".aggregates" + (path.suffix or ".csv"))


def write_report(report: MetricsReport, path, format: str = "json") -> None:
    """Serialize a report; JSON is canonical, CSV is rows plus a sidecar."""
    path = Path(path)
    if format == "json":
        _atomic_write_bytes(canonical_json(report.to_dict()).encode("utf-8"), path)
    elif format == "csv":
        _write_csv(report, path)
    else:
        raise ValueError(f"unknown report format {format!r}; expected 'json' or 'csv'")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return _float17(value)
    return str(value)


def _write_csv(report: MetricsReport, path: Path) -> None:
    import io as _io

    main = _io.StringIO()
    writer = csv.writer(main, lineterminator="\n")
    writer.writerow(["model_id", "sentence_id", "token_count", "entropy",
                     "erank", "dropped_rows", "loss"])
    for model in report.models:
        for row in model.records:
            writer.writerow([model.model_id, row.sentence_id, row.token_count,
                             _cell(row.entropy), _cell(row.erank),
                             row.dropped_rows, _cell(row.loss)])
    _atomic_write_bytes(main.getvalue().encode("utf-8"), path)

    side = _io.StringIO()
    writer = csv.writer(side, lineterminator="\n")
    writer.writerow(["scope", "key", "value"])
    writer.writerow(["report", "schema_version", report.schema_version])
    writer.writerow(["report", "tool_version", report.tool_version])
    for model in report.models:
        scope = f"model:{model.model_id}"
        writer.writerow([scope, "mean_entropy", _cell(model.mean_entropy)])
        writer.writerow([scope, "erank_a", _cell(model.erank_a)])
        writer.writerow([scope, "erank_b", _cell(model.erank_b)])
        writer.writerow([scope, "mean_loss", _cell(model.mean_loss)])
        writer.writerow([scope, "skipped_count", len(model.skipped)])
    if report.pair is not None:
        for key, value in vars(report.pair).items():
            writer.writerow(["pair", key, _cell(value)])
    if report.mm is not None:
        for key, value in vars(report.mm).items():
            writer.writerow(["mm", key, _cell(value)])
    _atomic_write_bytes(side.getvalue().encode("utf-8"), aggregates_sidecar_path(path))


def load_report(path) -> dict[str, Any]:
    """Parse a JSON report back into a plain dict, checking the version tag."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise SchemaViolation("/schema_version", "missing or unsupported report version")
    return doc


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
