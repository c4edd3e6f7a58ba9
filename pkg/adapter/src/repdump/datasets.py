"""Sentence sources: plain text (one sentence per line) and JSONL with a
field selector, plus seeded subsampling."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ._errors import DatasetError


def load_sentences(path, *, text_field: str | None = None) -> list[tuple[str, str]]:
    """Read sentences as (sentence_id, text) pairs.

    ``.jsonl`` files need ``text_field`` to pick the input column (for
    instruction datasets this is typically the context or chosen field);
    any other extension is treated as plain text, one sentence per line.
    Blank lines are dropped. Ids encode the original line number, so
    subsampling stays stable across runs.
    """
    path = Path(path)
    sentences: list[tuple[str, str]] = []
    if path.suffix == ".jsonl":
        if not text_field:
            raise DatasetError(f"{path}: JSONL datasets require a text field selector")
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                row = json.loads(line)
                if text_field not in row:
                    raise DatasetError(f"{path}: line {i} has no field {text_field!r}")
                text = str(row[text_field]).strip()
                if text:
                    sentences.append((f"s{i:06d}", text))
    else:
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                text = line.strip()
                if text:
                    sentences.append((f"s{i:06d}", text))
    if not sentences:
        raise DatasetError(f"{path}: no non-empty sentences")
    return sentences


def load_triplets(path) -> list[tuple[str, dict]]:
    """Read multimodal JSONL triplets: image path, instruction, response."""
    path = Path(path)
    triplets = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            row = json.loads(line)
            for key in ("image", "instruction", "response"):
                if key not in row:
                    raise DatasetError(f"{path}: line {i} has no field {key!r}")
            triplets.append((f"s{i:06d}", row))
    if not triplets:
        raise DatasetError(f"{path}: no triplets")
    return triplets


def sample_dataset(items: list, subset_size: int | None, seed: int) -> list:
    """Uniform sample without replacement, reproducible by seed.

    Selected items keep their original order. ``subset_size`` equal to the
    dataset size (or None) returns the full list unchanged.
    """
    if subset_size is None or subset_size == len(items):
        return list(items)
    if not 1 <= subset_size <= len(items):
        raise DatasetError(
            f"subset_size {subset_size} out of range for dataset of {len(items)}")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(items), size=subset_size, replace=False)
    return [items[i] for i in sorted(picked.tolist())]
