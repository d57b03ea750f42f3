import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wamm import evaluate
from wamm.corpus import AttackClass as A, Dataset, LabeledRecord
from wamm.errors import EmptyMatrix, InsufficientIterations, LengthMismatch, NoAttackSamples, UnknownLabel
from wamm.evaluate import block_rate_table, confusion, latency_bench, metrics, render_block_rates
from wamm.features import FeaturePipeline
from wamm.fingerprints import default_bank
from wamm.gbdt import TrainConfig, train


def brute_force(true, pred, classes):
    out = {}
    n = len(true)
    for c in classes:
        tp = sum(1 for t, p in zip(true, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(true, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(true, pred) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[c] = (prec, rec, f1, tp + fn)
    acc = sum(1 for t, p in zip(true, pred) if t == p) / n
    return acc, out


def test_confusion_examples():
    cm = confusion([0] * 50 + [1] * 50, [0] * 50 + [1] * 50, [0, 1])
    assert cm.counts.tolist() == [[50, 0], [0, 50]]
    cm = confusion([0, 1, 2, 1], [0, 0, 0, 0], [0, 1, 2])
    assert cm.counts[:, 0].sum() == 4 and cm.counts[:, 1:].sum() == 0


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        confusion([0], [0, 1], [0, 1])
    with pytest.raises(UnknownLabel):
        confusion([0], [5], [0, 1])


def test_binary_example():
    cm = confusion(["p"] * 10 + ["n"] * 90, ["p"] * 8 + ["n"] * 2 + ["p"] * 2 + ["n"] * 88, ["p", "n"])
    rep = metrics(cm)
    m = rep.per_class["p"]
    assert (m.precision, m.recall, m.f1) == pytest.approx((0.8, 0.8, 0.8))
    assert rep.accuracy == pytest.approx(0.96)


def test_perfect_and_zero_division():
    rep = metrics(confusion([0, 1, 2], [0, 1, 2], [0, 1, 2]))
    assert rep.accuracy == rep.macro_f1 == rep.macro_precision == 1.0
    rep = metrics(confusion([0, 0], [0, 0], [0, 1]))
    assert rep.per_class[1].precision == 0.0 and rep.per_class[1].f1 == 0.0
    with pytest.raises(EmptyMatrix):
        metrics(confusion([], [], [0, 1]))
    assert "denominator" in rep.render()


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(10, 300), st.integers(0, 10_000))
def test_metric_oracle(k, n, seed):
    rng = np.random.default_rng(seed)
    true = rng.integers(0, k, n).tolist()
    pred = [t if rng.random() < 0.6 else int(rng.integers(0, k)) for t in true]
    classes = list(range(k))
    rep = metrics(confusion(true, pred, classes))
    acc, ref = brute_force(true, pred, classes)
    assert abs(rep.accuracy - acc) <= 1e-12
    assert abs(rep.accuracy - (1 - sum(t != p for t, p in zip(true, pred)) / n)) <= 1e-12
    for c in classes:
        m = rep.per_class[c]
        assert max(abs(m.precision - ref[c][0]), abs(m.recall - ref[c][1]), abs(m.f1 - ref[c][2])) <= 1e-12
        assert m.support == ref[c][3]
    assert abs(rep.macro_f1 - np.mean([ref[c][2] for c in classes])) <= 1e-12
    shuffled = list(rng.permutation(classes))
    assert metrics(confusion(true, pred, shuffled)).macro_f1 == pytest.approx(rep.macro_f1, abs=1e-12)


def _ds(items):
    return Dataset(tuple(LabeledRecord(t, A.parse(c), i) for i, (t, c) in enumerate(items)))


def test_block_rate_rows():
    items = [(f"id={i} UNION SELECT 1", "SQLi") for i in range(100)]
    items += [(f"<script>alert({i})</script>", "XSS") for i in range(10)]
    items += [("GET /", "Normal")]
    ds = _ds(items)
    preds = [A.SQLI] * 97 + [A.NORMAL] * 3 + [A.XSS] * 5 + [A.SQLI] * 5
    rows = block_rate_table(ds, default_bank(), None, predictions=preds)
    assert [r.capec_id for r in rows] == [66, 79]
    sqli, xss = rows
    assert (sqli.samples, sqli.rule_rate, sqli.model_rate) == (100, 100.0, 97.0)
    assert xss.model_rate == 100.0 and xss.model_rate_strict == 50.0
    for r in rows:
        assert r.delta == r.model_rate - r.rule_rate
        assert 0 <= r.rule_rate <= 100 and 0 <= r.model_rate <= 100
    lines = render_block_rates(rows).splitlines()
    assert lines[0].split() == ["ID", "Name", "samples", "rule", "model", "Δ"]
    assert lines[1].split()[:4] == ["66", "SQL", "Injection", "100"]


def test_block_rate_no_attacks():
    with pytest.raises(NoAttackSamples):
        block_rate_table(_ds([("GET /", "Normal")]), default_bank(), None, predictions=[])


@pytest.fixture(scope="module")
def zero_round_model():
    texts = ["GET /a", "GET /b?x=1", "id=1 UNION SELECT 1", "<script>x</script>"]
    pipe = FeaturePipeline.fit(texts)
    labels = [A.NORMAL, A.NORMAL, A.SQLI, A.SQLI]
    model, _ = train(pipe.matrix(texts), labels, None, TrainConfig(max_rounds=0, early_stopping_patience=0), pipe)
    return model


def test_latency_contract(zero_round_model):
    rep = latency_bench(zero_round_model, ["GET /a?x=1", "id=2 OR 1=1"], warmup=10, iters=1000)
    assert rep.samples == 1000 and rep.logical_cpus >= 1
    for s in (rep.normalize, rep.featurize, rep.predict, rep.end_to_end):
        assert 0 < s.p50_us <= s.p99_us
    stages = rep.normalize.mean_us + rep.featurize.mean_us + rep.predict.mean_us
    assert stages <= rep.end_to_end.mean_us + 5.0
    row = rep.summary_row("GBDT", 0.99)
    assert set(row) == {"model", "accuracy", "inference_time_ms"}


def test_latency_min_iters(zero_round_model):
    with pytest.raises(InsufficientIterations):
        latency_bench(zero_round_model, ["GET /"], iters=10)


def test_latency_mean_stable(zero_round_model):
    reqs = ["GET /a?x=1"]
    a = latency_bench(zero_round_model, reqs, warmup=200, iters=1000)
    b = latency_bench(zero_round_model, reqs, warmup=200, iters=2000)
    sigma = max(a.end_to_end.std_us, b.end_to_end.std_us)
    assert abs(a.end_to_end.mean_us - b.end_to_end.mean_us) <= 3 * sigma
