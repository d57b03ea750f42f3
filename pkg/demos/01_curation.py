"""
Curating a labelled request corpus
==================================

Near-duplicate removal over benign traffic, then a signature screen that
surfaces benign-labelled rows which look like attacks.
"""

# %%
# The bundled seed corpus: synthetic requests over eight attack classes plus Normal.
import random

import wamm
from wamm import seedcorpus
from wamm.corpus import AttackClass, Dataset, LabeledRecord

ds = wamm.load_seed_corpus()
for cls, n in sorted(wamm.class_distribution(ds).items(), key=lambda kv: -kv[1]):
    print(f"{cls.value:<22} {n:5d}  capec={cls.capec_id}")

# %%
# MinHash turns a shingle set into 128 integers whose per-coordinate
# agreement estimates Jaccard similarity.
a = wamm.shingle("GET /search?q=running+shoes&page=2 HTTP/1.1", 5)
b = wamm.shingle("GET /search?q=running+shoes&page=3 HTTP/1.1", 5)
hasher = wamm.MinHasher(128, seed=1)
print("exact", round(wamm.jaccard(a, b), 3), "estimate", round(hasher.signature(a).jaccard(hasher.signature(b)), 3))

# %%
# Banded LSH (16 bands x 8 rows) proposes candidates, exact Jaccard confirms them.
# Only Normal rows are ever removed; the first occurrence of a cluster is kept.
deduped, report = wamm.lsh_dedupe(ds)
print(f"{len(ds)} -> {len(deduped)} records, {report.removed_total} removed "
      f"from {len(report.clusters)} clusters, {report.candidates_checked} candidate pairs verified")

# %%
# Plant a few SQL injections labelled Normal and screen the benign rows.
rng = random.Random(0)
planted = [seedcorpus.wrap_payload(seedcorpus.attack_payload(AttackClass.SQLI, rng), rng) for _ in range(5)]
start = max(r.record_id for r in deduped.records) + 1
noisy = Dataset(deduped.records + tuple(LabeledRecord(t, AttackClass.NORMAL, start + i)
                                        for i, t in enumerate(planted)))
flags = wamm.flag_mislabeled(noisy, wamm.default_bank())
for row in flags.table():
    print(row)
print("flagged ids:", sorted(rid for rid, _ in flags.flagged))

# %%
# Corrections come back as (record_id, new_class) pairs.
fixed = wamm.apply_corrections(noisy, [(rid, AttackClass.SQLI) for rid, _ in flags.flagged])
print(wamm.class_distribution(fixed)[AttackClass.SQLI], "SQLi rows after relabelling")
