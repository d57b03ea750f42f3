import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wamm.corpus import AttackClass, Dataset, LabeledRecord
from wamm.curation import (EMPTY_SENTINEL, LshParams, MinHasher, apply_corrections,
                           flag_mislabeled, jaccard, lsh_dedupe, minhash, shingle)
from wamm.errors import InvalidParams, UnknownClass, UnknownRecordId
from wamm.fingerprints import default_bank


def test_shingle_examples():
    assert shingle("abcd", 3) == {"abc", "bcd"}
    assert shingle("ab", 5) == {"ab"}
    assert shingle("aaaa", 2) == {"aa"}


def test_exact_jaccard_example():
    a, b = shingle("abcdef", 3), shingle("abcdeg", 3)
    assert jaccard(a, b) == pytest.approx(3 / 5)
    est = minhash(a).jaccard(minhash(b))
    assert abs(est - 0.6) <= 0.15


def test_identical_and_empty():
    s = shingle("GET /index.html?page=2", 5)
    assert minhash(s).jaccard(minhash(s)) == 1.0
    empty = minhash(set())
    assert len(empty.hashes) == 128 and np.all(empty.hashes == EMPTY_SENTINEL)


def test_num_perm_floor():
    with pytest.raises(InvalidParams):
        MinHasher(8)


def test_disjoint_sets():
    h = MinHasher(128, seed=5)
    a = {f"a{i}" for i in range(40)}
    b = {f"b{i}" for i in range(40)}
    assert h.signature(a).jaccard(h.signature(b)) <= 0.15


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(0, 200), min_size=10, max_size=80),
       st.sets(st.integers(0, 200), min_size=10, max_size=80), st.integers(0, 1000))
def test_estimator_accuracy(a, b, seed):
    a, b = {str(x) for x in a}, {str(x) for x in b}
    if len(a | b) < 20:
        return
    h = MinHasher(128, seed)
    j = jaccard(a, b)
    est = h.signature(a).jaccard(h.signature(b))
    # 4 sigma: a per-example bound that essentially never flakes; the 99% rate is checked in acceptance
    assert abs(est - j) <= max(4 * math.sqrt(j * (1 - j) / 128), 0.02)


def _rec(text, label, i):
    return LabeledRecord(text, AttackClass.parse(label), i)


def test_identical_normals():
    ds = Dataset((_rec("GET /a?x=1", "Normal", 0), _rec("GET /a?x=1", "Normal", 1)))
    out, rep = lsh_dedupe(ds)
    assert [r.record_id for r in out.records] == [0]
    assert rep.clusters[0].kept == 0 and rep.clusters[0].jaccard == [1.0]


def test_cross_label_untouched():
    ds = Dataset((_rec("id=1 UNION SELECT 1", "Normal", 0), _rec("id=1 UNION SELECT 1", "SQLi", 1)))
    out, rep = lsh_dedupe(ds)
    assert len(out) == 2 and rep.removed_total == 0


def test_params_validation():
    with pytest.raises(InvalidParams):
        LshParams(bands=10, rows=8).validate()
    with pytest.raises(InvalidParams):
        LshParams(jaccard_threshold=0).validate()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_dedupe_properties(seed):
    rng = random.Random(seed)
    recs = []
    for i in range(60):
        base = "GET /p/" + "".join(rng.choice("abcdefgh") for _ in range(rng.randint(10, 60)))
        if recs and rng.random() < 0.4:
            src = rng.choice(recs).full_request
            base = src[:-1] + rng.choice("xyz") if rng.random() < 0.5 else src
        label = "Normal" if rng.random() < 0.7 else "XSS"
        recs.append(_rec(base, label, i))
    ds = Dataset(tuple(recs))
    params = LshParams(jaccard_threshold=0.8)
    out, rep = lsh_dedupe(ds, params, seed=seed)
    kept = {r.record_id for r in out.records}
    by_id = {r.record_id: r for r in ds.records}
    assert not (rep.removed_ids & kept)
    for c in rep.clusters:
        assert c.kept in kept
        for rid, j in zip(c.removed, c.jaccard):
            exact = jaccard(shingle(by_id[rid].full_request, 5), shingle(by_id[c.kept].full_request, 5))
            assert exact >= params.jaccard_threshold and exact == pytest.approx(j)
            assert by_id[rid].label is AttackClass.NORMAL
    attacks = [r for r in ds.records if r.label.is_attack]
    assert attacks == [r for r in out.records if r.label.is_attack]
    again, _ = lsh_dedupe(ds, params, seed=seed)
    assert again.records == out.records


def test_flag_mislabeled():
    bank = default_bank()
    recs = [_rec(f"GET /shop/item/{i}?color=blue", "Normal", i) for i in range(100)]
    recs += [_rec(f"GET /q?id={i} UNION SELECT name FROM users", "Normal", 100 + i) for i in range(5)]
    recs += [_rec("id=1 UNION SELECT 1", "SQLi", 200)]
    ds = Dataset(tuple(recs))
    rep = flag_mislabeled(ds, bank)
    assert rep.total_flagged == 5 and rep.counts[AttackClass.SQLI] == 5
    assert rep.benign_total == 105
    assert {rid for rid, _ in rep.flagged} == set(range(100, 105))
    row = rep.table()[0]
    assert row["category"] == "SQLi" and row["percent"] == pytest.approx(100 * 5 / 105, abs=1e-3)
    assert flag_mislabeled(ds, bank).to_dict() == rep.to_dict()


def test_flag_counts_per_category():
    ds = Dataset((_rec("<script>x</script> UNION SELECT 1", "Normal", 0),))
    rep = flag_mislabeled(ds, default_bank())
    assert rep.total_flagged == 1
    assert rep.counts == {AttackClass.SQLI: 1, AttackClass.XSS: 1}


def test_apply_corrections(tmp_path):
    ds = Dataset(tuple(_rec(f"r{i}", "Normal", i) for i in range(10)))
    out = apply_corrections(ds, [(7, "SQLi")])
    assert out.records[7].label is AttackClass.SQLI and "corrections" in out.provenance
    p = tmp_path / "fix.csv"
    p.write_text("record_id,new_class\n")
    assert apply_corrections(ds, p).records == ds.records
    p.write_text("record_id,new_class\n3,XSS\n")
    assert apply_corrections(ds, p).records[3].label is AttackClass.XSS
    with pytest.raises(UnknownRecordId):
        apply_corrections(ds, [(99, "SQLi")])
    with pytest.raises(UnknownClass):
        apply_corrections(ds, [(1, "Smuggling")])
