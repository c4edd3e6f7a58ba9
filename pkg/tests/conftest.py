from __future__ import annotations

import math

import numpy as np
import pytest

from diffrank.io import (
    DumpManifest,
    ManifestEntry,
    tensor_file,
    write_manifest,
    write_tensor,
)


def random_reps(rng, n_tokens, dim, scale=1.0):
    return rng.normal(size=(n_tokens, dim)) * scale


def write_corpus(root, model_id, reps_by_id, *, hidden_dim, layer=-1,
                 logprobs_by_id=None, dataset_id="synthetic", dtype="f32",
                 manifest_name="manifest.json"):
    """Materialize a dump directory + manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for sid in reps_by_id:
        reps = np.asarray(reps_by_id[sid], dtype=np.float64)
        reps_rel = f"{sid}.reps.npy"
        write_tensor(tensor_file(reps, dtype=dtype), root / reps_rel)
        logprobs_rel = None
        if logprobs_by_id is not None:
            logprobs_rel = f"{sid}.logprobs.npy"
            write_tensor(tensor_file(logprobs_by_id[sid], dtype="f64"), root / logprobs_rel)
        entries.append(ManifestEntry(
            sentence_id=sid,
            reps_path=reps_rel,
            token_count=int(reps.shape[0]),
            logprobs_path=logprobs_rel,
        ))
    manifest = DumpManifest(
        model_id=model_id,
        dataset_id=dataset_id,
        layer=layer,
        hidden_dim=hidden_dim,
        entries=tuple(entries),
        root=root,
    )
    path = root / manifest_name
    write_manifest(manifest, path)
    return path


def synthetic_corpus(seed, n_sentences, dim, *, token_range=(6, 20), loss_scale=None):
    """Random per-sentence representations (and optional log-probs)."""
    rng = np.random.default_rng(seed)
    reps = {}
    logprobs = {} if loss_scale is not None else None
    for i in range(n_sentences):
        sid = f"s{i:04d}"
        n_tokens = int(rng.integers(*token_range))
        reps[sid] = rng.normal(size=(n_tokens, dim))
        if logprobs is not None:
            logprobs[sid] = -rng.exponential(loss_scale, size=n_tokens - 1)
    return reps, logprobs


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)


def assert_close(actual, expected, tol, label=""):
    assert math.isfinite(actual), f"{label}: non-finite value {actual!r}"
    assert abs(actual - expected) <= tol, (
        f"{label}: {actual!r} deviates from {expected!r} by "
        f"{abs(actual - expected):.3e} (tol {tol:g})"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "xfailed", "xpassed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::", 1)[-1]
            verdict = {"passed": "PASS", "xfailed": "XFAIL (known defect)",
                       "xpassed": "XPASS", "failed": "FAIL", "error": "ERROR"}[status]
            lines.append(f"[{verdict}] {name}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
