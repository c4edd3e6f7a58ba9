"""Dump manifests: the on-disk index tying sentence ids to tensor files for
one (model, dataset, layer) triple.

The schema is strict: unknown fields anywhere are rejected, and violations
carry a JSON-pointer-style path to the offending field. Relative tensor paths
resolve against the manifest file's directory.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..exceptions import DuplicateSentenceId, SchemaViolation
from .npyio import read_tensor_header

__all__ = ["Sampling", "ManifestEntry", "DumpManifest", "load_manifest", "write_manifest"]

SCHEMA_VERSION = "1"

_TOP_REQUIRED = {"schema_version", "model_id", "dataset_id", "hidden_dim", "entries"}
_TOP_ALLOWED = _TOP_REQUIRED | {"layer", "sampling"}
_ENTRY_REQUIRED = {"sentence_id", "reps_path", "token_count"}
_ENTRY_ALLOWED = _ENTRY_REQUIRED | {"logprobs_path"}
_SAMPLING_REQUIRED = {"seed"}
_SAMPLING_ALLOWED = _SAMPLING_REQUIRED | {"subset_size"}


@dataclass(frozen=True)
class Sampling:
    seed: int
    subset_size: int | None = None


@dataclass(frozen=True)
class ManifestEntry:
    sentence_id: str
    reps_path: str
    token_count: int
    logprobs_path: str | None = None


@dataclass(frozen=True)
class DumpManifest:
    model_id: str
    dataset_id: str
    layer: int
    hidden_dim: int
    entries: tuple[ManifestEntry, ...]
    sampling: Sampling | None = None
    root: Path = Path(".")
    schema_version: str = SCHEMA_VERSION

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.root / path

    def sentence_ids(self) -> tuple[str, ...]:
        return tuple(entry.sentence_id for entry in self.entries)

    def has_complete_logprobs(self) -> bool:
        return all(entry.logprobs_path is not None for entry in self.entries)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "schema_version": self.schema_version,
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "layer": self.layer,
            "hidden_dim": self.hidden_dim,
            "entries": [],
        }
        for entry in self.entries:
            item: dict[str, Any] = {
                "sentence_id": entry.sentence_id,
                "reps_path": entry.reps_path,
                "token_count": entry.token_count,
            }
            if entry.logprobs_path is not None:
                item["logprobs_path"] = entry.logprobs_path
            doc["entries"].append(item)
        if self.sampling is not None:
            sampling: dict[str, Any] = {"seed": self.sampling.seed}
            if self.sampling.subset_size is not None:
                sampling["subset_size"] = self.sampling.subset_size
            doc["sampling"] = sampling
        return doc


def _require_keys(obj: dict, allowed: set, required: set, pointer: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SchemaViolation(f"{pointer}/{key}", "unknown field")
    for key in sorted(required - obj.keys()):
        raise SchemaViolation(f"{pointer}/{key}", "required field is missing")


def _expect(condition: bool, pointer: str, message: str) -> None:
    if not condition:
        raise SchemaViolation(pointer, message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _nonempty_str(value) -> bool:
    return isinstance(value, str) and len(value) > 0


def load_manifest(path, *, check_tensors: bool = True) -> DumpManifest:
    """Load and validate a manifest.

    With ``check_tensors`` (the default), every referenced tensor file must
    exist and its header must agree with the entry's token_count and the
    manifest's hidden_dim; only headers are read, so this stays cheap even
    for very large manifests.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"not valid JSON: {exc}") from exc

    _expect(isinstance(doc, dict), "", "manifest must be a JSON object")
    _require_keys(doc, _TOP_ALLOWED, _TOP_REQUIRED, "")
    _expect(doc["schema_version"] == SCHEMA_VERSION, "/schema_version",
            f"unsupported schema_version {doc['schema_version']!r}; expected {SCHEMA_VERSION!r}")
    _expect(_nonempty_str(doc["model_id"]), "/model_id", "must be a non-empty string")
    _expect(_nonempty_str(doc["dataset_id"]), "/dataset_id", "must be a non-empty string")
    layer = doc.get("layer", -1)
    _expect(_is_int(layer), "/layer", "must be an integer")
    _expect(_is_int(doc["hidden_dim"]) and doc["hidden_dim"] >= 1,
            "/hidden_dim", "must be a positive integer")
    _expect(isinstance(doc["entries"], list) and len(doc["entries"]) > 0,
            "/entries", "must be a non-empty list")

    sampling = None
    if "sampling" in doc:
        raw = doc["sampling"]
        _expect(isinstance(raw, dict), "/sampling", "must be an object")
        _require_keys(raw, _SAMPLING_ALLOWED, _SAMPLING_REQUIRED, "/sampling")
        _expect(_is_int(raw["seed"]), "/sampling/seed", "must be an integer")
        subset_size = raw.get("subset_size")
        if subset_size is not None:
            _expect(_is_int(subset_size) and subset_size >= 1,
                    "/sampling/subset_size", "must be a positive integer")
        sampling = Sampling(seed=raw["seed"], subset_size=subset_size)

    root = path.parent
    entries = []
    seen: dict[str, int] = {}
    header_cache: dict[Path, tuple[str, tuple[int, ...]]] = {}

    for i, raw in enumerate(doc["entries"]):
        pointer = f"/entries/{i}"
        _expect(isinstance(raw, dict), pointer, "must be an object")
        _require_keys(raw, _ENTRY_ALLOWED, _ENTRY_REQUIRED, pointer)
        sid = raw["sentence_id"]
        _expect(_nonempty_str(sid), f"{pointer}/sentence_id", "must be a non-empty string")
        if sid in seen:
            raise DuplicateSentenceId(
                f"{pointer}/sentence_id",
                f"sentence_id {sid!r} already used at /entries/{seen[sid]}",
            )
        seen[sid] = i
        _expect(_nonempty_str(raw["reps_path"]), f"{pointer}/reps_path",
                "must be a non-empty string")
        _expect(_is_int(raw["token_count"]) and raw["token_count"] >= 1,
                f"{pointer}/token_count", "must be a positive integer")
        logprobs_path = raw.get("logprobs_path")
        if logprobs_path is not None:
            _expect(_nonempty_str(logprobs_path), f"{pointer}/logprobs_path",
                    "must be a non-empty string")
        entry = ManifestEntry(
            sentence_id=sid,
            reps_path=raw["reps_path"],
            token_count=raw["token_count"],
            logprobs_path=logprobs_path,
        )
        if check_tensors:
            _check_entry_tensors(entry, root, doc["hidden_dim"], pointer, header_cache)
        entries.append(entry)

    return DumpManifest(
        model_id=doc["model_id"],
        dataset_id=doc["dataset_id"],
        layer=layer,
        hidden_dim=doc["hidden_dim"],
        entries=tuple(entries),
        sampling=sampling,
        root=root,
        schema_version=doc["schema_version"],
    )


def _check_entry_tensors(entry: ManifestEntry, root: Path, hidden_dim: int,
                         pointer: str,
                         cache: dict[Path, tuple[str, tuple[int, ...]]]) -> None:
    reps = Path(entry.reps_path)
    reps = reps if reps.is_absolute() else root / reps
    _expect(reps.is_file(), f"{pointer}/reps_path", f"referenced file does not exist: {reps}")
    if reps not in cache:
        cache[reps] = read_tensor_header(reps)
    _, shape = cache[reps]
    _expect(len(shape) == 2, f"{pointer}/reps_path",
            f"representations must be rank 2, got shape {shape}")
    _expect(shape[0] == entry.token_count, f"{pointer}/token_count",
            f"token_count {entry.token_count} does not match tensor rows {shape[0]}")
    _expect(shape[1] == hidden_dim, f"{pointer}/reps_path",
            f"tensor width {shape[1]} does not match hidden_dim {hidden_dim}")
    if entry.logprobs_path is not None:
        lp = Path(entry.logprobs_path)
        lp = lp if lp.is_absolute() else root / lp
        _expect(lp.is_file(), f"{pointer}/logprobs_path",
                f"referenced file does not exist: {lp}")
        if lp not in cache:
            cache[lp] = read_tensor_header(lp)
        _expect(len(cache[lp][1]) == 1, f"{pointer}/logprobs_path",
                f"log-probs must be rank 1, got shape {cache[lp][1]}")


def write_manifest(manifest: DumpManifest, path) -> None:
    """Serialize a manifest with sorted keys; atomic replace on rename."""
    path = Path(path)
    text = json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
