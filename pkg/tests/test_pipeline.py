import json
import math

import numpy as np
import pytest

from diffrank import (
    DataError,
    DegenerateInput,
    SentenceSetMismatch,
    sentence_record,
)
from diffrank.io import load_manifest, write_report
from diffrank.pipeline import (
    evaluate_manifest,
    loss_report,
    mm_report_from_manifests,
    mm_report_from_values,
    pair_report,
    reps_report,
    single_report,
)

from conftest import synthetic_corpus, write_corpus


@pytest.fixture
def corpus_pair(tmp_path):
    reps0, logprobs0 = synthetic_corpus(1, 6, 5, loss_scale=3.0)
    reps1, logprobs1 = synthetic_corpus(2, 6, 5, loss_scale=1.0)
    path0 = write_corpus(tmp_path / "m0", "untrained", reps0, hidden_dim=5,
                         logprobs_by_id=logprobs0)
    path1 = write_corpus(tmp_path / "m1", "trained", reps1, hidden_dim=5,
                         logprobs_by_id=logprobs1)
    return path0, path1, (reps0, logprobs0), (reps1, logprobs1)


def _as_dumped(reps):
    # Fixtures dump f32 tensors; the core promotes them back to f64,
    # so the reference computation must see the same rounded values.
    return np.asarray(reps).astype(np.float32).astype(np.float64)


def test_single_report_matches_direct_records(tmp_path):
    reps, _ = synthetic_corpus(7, 4, 6)
    path = write_corpus(tmp_path / "m", "model", reps, hidden_dim=6)
    report = single_report(path)
    model = report.models[0]
    assert model.model_id == "model"
    for row in model.records:
        expected = sentence_record(row.sentence_id, _as_dumped(reps[row.sentence_id]))
        assert row.entropy == pytest.approx(expected.entropy, abs=1e-12)
        assert row.erank == pytest.approx(expected.erank, abs=1e-12)
    entropies = [r.entropy for r in model.records]
    assert model.mean_entropy == pytest.approx(np.mean(entropies), abs=1e-12)
    assert model.erank_a == pytest.approx(math.exp(model.mean_entropy), abs=1e-12)


def test_thread_count_does_not_change_results(tmp_path):
    reps, logprobs = synthetic_corpus(3, 12, 4, loss_scale=2.0)
    path = write_corpus(tmp_path / "m", "model", reps, hidden_dim=4,
                        logprobs_by_id=logprobs)
    reports = [single_report(path, threads=t) for t in (1, 2, 8)]
    blobs = set()
    for i, report in enumerate(reports):
        out = tmp_path / f"r{i}.json"
        write_report(report, out, format="json")
        blobs.add(out.read_bytes())
    assert len(blobs) == 1


def test_pair_report_full(corpus_pair):
    path0, path1, (reps0, logprobs0), (reps1, logprobs1) = corpus_pair
    report = pair_report(path0, path1, algorithm="both")
    model0, model1 = report.models
    assert model0.model_id == "untrained" and model1.model_id == "trained"
    assert report.pair.diff_erank_a == pytest.approx(
        model0.erank_a - model1.erank_a, abs=1e-12)
    assert report.pair.diff_erank_b == pytest.approx(
        model0.erank_b - model1.erank_b, abs=1e-12)
    ids = sorted(reps0)
    mean0 = np.mean([-np.mean(logprobs0[sid]) for sid in ids])
    mean1 = np.mean([-np.mean(logprobs1[sid]) for sid in ids])
    assert report.pair.reduced_loss == pytest.approx(mean0 - mean1, abs=1e-12)


def test_pair_report_algorithm_selection(corpus_pair):
    path0, path1, _, _ = corpus_pair
    only_a = pair_report(path0, path1, algorithm="a")
    assert only_a.pair.diff_erank_a is not None
    assert only_a.pair.diff_erank_b is None
    only_b = pair_report(path0, path1, algorithm="b")
    assert only_b.pair.diff_erank_a is None
    assert only_b.pair.diff_erank_b is not None


def test_pair_skips_union_across_models(tmp_path):
    reps0, _ = synthetic_corpus(11, 5, 4)
    reps1, _ = synthetic_corpus(12, 5, 4)
    reps1["s0002"] = np.ones((6, 4))  # degenerate for the trained model only
    path0 = write_corpus(tmp_path / "m0", "untrained", reps0, hidden_dim=4)
    path1 = write_corpus(tmp_path / "m1", "trained", reps1, hidden_dim=4)
    report = pair_report(path0, path1)
    model0, model1 = report.models
    kept = {row.sentence_id for row in model0.records}
    assert kept == {row.sentence_id for row in model1.records}
    assert "s0002" not in kept
    assert [s.sentence_id for s in model1.skipped] == ["s0002"]
    assert model0.skipped == ()
    # Aggregates cover exactly the surviving common set.
    entropies = [r.entropy for r in model0.records]
    assert model0.mean_entropy == pytest.approx(np.mean(entropies), abs=1e-12)


def test_strict_mode_raises_on_degenerate(tmp_path):
    reps, _ = synthetic_corpus(13, 4, 4)
    reps["s0001"] = np.zeros((5, 4))
    path = write_corpus(tmp_path / "m", "model", reps, hidden_dim=4)
    report = single_report(path)  # default: skip and count
    assert [s.sentence_id for s in report.models[0].skipped] == ["s0001"]
    with pytest.raises(DegenerateInput, match="s0001"):
        single_report(path, strict=True)


def test_mismatched_manifests_rejected(tmp_path):
    reps0, _ = synthetic_corpus(21, 3, 4)
    reps1 = {f"other{i}": reps for i, reps in enumerate(reps0.values())}
    path0 = write_corpus(tmp_path / "m0", "untrained", reps0, hidden_dim=4)
    path1 = write_corpus(tmp_path / "m1", "trained", reps1, hidden_dim=4)
    with pytest.raises(SentenceSetMismatch):
        pair_report(path0, path1)


def test_loss_report_requires_complete_logprobs(tmp_path):
    reps0, logprobs0 = synthetic_corpus(31, 4, 4, loss_scale=2.0)
    reps1, _ = synthetic_corpus(32, 4, 4)
    path0 = write_corpus(tmp_path / "m0", "untrained", reps0, hidden_dim=4,
                         logprobs_by_id=logprobs0)
    path1 = write_corpus(tmp_path / "m1", "trained", reps1, hidden_dim=4)
    with pytest.raises(DataError, match="lacks logprobs"):
        loss_report(path0, path1)


def test_loss_report_values(tmp_path):
    vocab = 11
    uniform = {f"s{i}": np.full(6, -math.log(vocab)) for i in range(5)}
    perfect = {sid: np.zeros(6) for sid in uniform}
    reps, _ = synthetic_corpus(33, 5, 4)
    reps = dict(zip(uniform, reps.values()))
    path0 = write_corpus(tmp_path / "m0", "untrained", reps, hidden_dim=4,
                         logprobs_by_id=uniform)
    path1 = write_corpus(tmp_path / "m1", "trained", reps, hidden_dim=4,
                         logprobs_by_id=perfect)
    report = loss_report(path0, path1)
    assert report.models[0].mean_loss == pytest.approx(math.log(vocab), abs=1e-12)
    assert report.models[1].mean_loss == 0.0
    assert report.pair.reduced_loss == pytest.approx(math.log(vocab), abs=1e-12)


def test_reps_report_two_point(tmp_path):
    from diffrank.io import tensor_file, write_tensor

    path = tmp_path / "pair.npy"
    write_tensor(tensor_file(np.array([[1.0, 0.0], [0.0, 1.0]]), dtype="f64"), path)
    report = reps_report(path)
    row = report.models[0].records[0]
    assert row.erank == pytest.approx(1.0, abs=1e-12)
    assert report.models[0].model_id == "pair"


def test_mm_from_values_matches_formulas():
    report = mm_report_from_values(18.34, 11.28, 45.62, 74.21, 76.34)
    assert report.mm.reduction_ratio == pytest.approx(0.384951, abs=1e-6)
    assert report.mm.alignment == pytest.approx(0.856563, abs=1e-6)
    assert report.models == ()


def test_mm_from_manifests_aggregates_like_dataset_erank(tmp_path):
    stage_paths = []
    stage_eranks = []
    for stage in range(1, 6):
        reps, _ = synthetic_corpus(40 + stage, 4, 5)
        path = write_corpus(tmp_path / f"stage{stage}", f"stage{stage}", reps, hidden_dim=5)
        stage_paths.append(path)
        records = [sentence_record(sid, _as_dumped(reps[sid])) for sid in reps]
        stage_eranks.append(math.exp(np.mean([r.entropy for r in records])))
    report = mm_report_from_manifests(stage_paths)
    for i, expected in enumerate(stage_eranks, start=1):
        assert getattr(report.mm, f"erank{i}") == pytest.approx(expected, abs=1e-10)
    assert report.mm.reduction_ratio == pytest.approx(
        (stage_eranks[0] - stage_eranks[1]) / stage_eranks[0], abs=1e-10)
    assert len(report.models) == 5
    assert [d.role for d in report.inputs] == [f"stage{i}" for i in range(1, 6)]


def test_mm_from_manifests_requires_five(tmp_path):
    with pytest.raises(DataError, match="5"):
        mm_report_from_manifests([tmp_path / "one.json"] * 3)


def test_evaluate_manifest_preserves_order(tmp_path):
    reps, _ = synthetic_corpus(50, 8, 4)
    path = write_corpus(tmp_path / "m", "model", reps, hidden_dim=4)
    manifest = load_manifest(path)
    evaluation = evaluate_manifest(manifest, threads=4)
    assert [o.entry.sentence_id for o in evaluation.outcomes] == list(manifest.sentence_ids())
