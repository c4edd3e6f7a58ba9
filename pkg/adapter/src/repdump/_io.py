"""Adapter-side file writing for the shared dump contracts.

Tensors go through numpy's own NPY v1.0 writer (little-endian, C order, the
layout the metrics engine validates bit-exactly). Manifests and sidecars are
plain JSON written to a temp file and renamed, so a manifest never references
tensors that are not fully on disk yet.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def write_array(array: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.save(fh, array)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_json(doc, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
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


def manifest_doc(*, model_id: str, dataset_id: str, layer: int, hidden_dim: int,
                 entries: list[dict], sampling: dict | None = None) -> dict:
    doc = {
        "schema_version": "1",
        "model_id": model_id,
        "dataset_id": dataset_id,
        "layer": layer,
        "hidden_dim": hidden_dim,
        "entries": entries,
    }
    if sampling is not None:
        doc["sampling"] = sampling
    return doc
