"""Corpus curation: MinHash/LSH near-duplicate removal and mislabel screening."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import AttackClass, Dataset
from .errors import InvalidParams, UnknownRecordId
from .fingerprints import PatternBank, match_categories

MERSENNE_61 = np.uint64((1 << 61) - 1)
EMPTY_SENTINEL = np.uint64(np.iinfo(np.uint64).max)


def shingle(s: str, k: int) -> set[str]:
    if k < 1:
        raise ValueError("shingle size must be >= 1")
    if len(s) < k:
        return {s}
    return {s[i:i + k] for i in range(len(s) - k + 1)}


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _base_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8", "surrogatepass"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class MinHashSignature:
    record_id: int | None
    hashes: np.ndarray

    def jaccard(self, other: "MinHashSignature") -> float:
        return float(np.mean(self.hashes == other.hashes))


def _mulmod61(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exact ``a * x mod (2^61 - 1)`` for ``a < 2^61`` and ``x < 2^32`` in uint64."""
    a_hi, a_lo = a >> np.uint64(32), a & np.uint64(0xFFFFFFFF)
    lo = a_lo * x  # < 2^64
    lo = (lo & MERSENNE_61) + (lo >> np.uint64(61))
    hi = a_hi * x  # < 2^61; times 2^32 below, folded with 2^61 = 1 (mod p)
    hi = (hi >> np.uint64(29)) + ((hi & np.uint64((1 << 29) - 1)) << np.uint64(32))
    return (lo + hi) % MERSENNE_61


class MinHasher:
    """Seeded family h_i(x) = (a_i * x + b_i) mod (2^61 - 1) over 32-bit base hashes."""

    def __init__(self, num_perm: int = 128, seed: int = 1):
        if num_perm < 16:
            raise InvalidParams("num_perm must be >= 16")
        rng = np.random.default_rng(seed)
        self.num_perm = num_perm
        self.seed = seed
        self.a = rng.integers(1, int(MERSENNE_61), size=num_perm, dtype=np.uint64)
        self.b = rng.integers(0, int(MERSENNE_61), size=num_perm, dtype=np.uint64)

    def hashes(self, shingles) -> np.ndarray:
        if not shingles:
            return np.full(self.num_perm, EMPTY_SENTINEL, dtype=np.uint64)
        x = np.fromiter((_base_hash(s) for s in shingles), dtype=np.uint64, count=len(shingles))
        mixed = (_mulmod61(self.a[:, None], x[None, :]) + self.b[:, None]) % MERSENNE_61
        return mixed.min(axis=1)

    def signature(self, shingles, record_id=None) -> MinHashSignature:
        return MinHashSignature(record_id, self.hashes(shingles))


def minhash(shingles, num_perm: int = 128, seed: int = 1, record_id=None) -> MinHashSignature:
    return MinHasher(num_perm, seed).signature(shingles, record_id)


@dataclass(frozen=True)
class LshParams:
    k: int = 5
    num_perm: int = 128
    bands: int = 16
    rows: int = 8
    jaccard_threshold: float = 0.9

    def validate(self) -> None:
        if self.bands * self.rows != self.num_perm:
            raise InvalidParams(f"bands*rows = {self.bands * self.rows} != num_perm = {self.num_perm}")
        if not 0.0 < self.jaccard_threshold <= 1.0:
            raise InvalidParams("jaccard_threshold must be in (0, 1]")
        if self.k < 1:
            raise InvalidParams("k must be >= 1")


@dataclass
class DedupCluster:
    kept: int
    removed: list[int] = field(default_factory=list)
    jaccard: list[float] = field(default_factory=list)


@dataclass
class DedupReport:
    clusters: list[DedupCluster]
    params: LshParams
    candidates_checked: int = 0

    @property
    def removed_total(self) -> int:
        return sum(len(c.removed) for c in self.clusters)

    @property
    def removed_ids(self) -> set[int]:
        return {rid for c in self.clusters for rid in c.removed}

    def to_dict(self) -> dict:
        return {
            "params": vars(self.params),
            "removed_total": self.removed_total,
            "candidates_checked": self.candidates_checked,
            "clusters": [vars(c) for c in self.clusters],
        }


def lsh_dedupe(ds: Dataset, params: LshParams = LshParams(), seed: int = 1) -> tuple[Dataset, DedupReport]:
    """Drop benign records that near-duplicate an earlier kept benign record.

    Candidates come from banded LSH buckets and are confirmed with exact
    shingle Jaccard before removal. Attack records are never touched.
    """
    params.validate()
    hasher = MinHasher(params.num_perm, seed)

    normal_pos = [i for i, r in enumerate(ds.records) if r.label is AttackClass.NORMAL]
    shingles = {i: shingle(ds.records[i].full_request, params.k) for i in normal_pos}
    sigs = {i: hasher.hashes(shingles[i]) for i in normal_pos}

    buckets: list[dict[bytes, list[int]]] = [dict() for _ in range(params.bands)]
    clusters: dict[int, DedupCluster] = {}
    removed: set[int] = set()
    checked = 0
    for i in normal_pos:
        keys = [sigs[i][b * params.rows:(b + 1) * params.rows].tobytes() for b in range(params.bands)]
        candidates = sorted({j for b, key in enumerate(keys) for j in buckets[b].get(key, ())})
        match = None
        for j in candidates:
            checked += 1
            sim = jaccard(shingles[i], shingles[j])
            if sim >= params.jaccard_threshold:
                match = (j, sim)
                break
        if match is not None:
            j, sim = match
            keeper = ds.records[j].record_id
            cluster = clusters.setdefault(j, DedupCluster(keeper))
            cluster.removed.append(ds.records[i].record_id)
            cluster.jaccard.append(sim)
            removed.add(i)
            continue
        for b, key in enumerate(keys):
            buckets[b].setdefault(key, []).append(i)

    kept = [r for i, r in enumerate(ds.records) if i not in removed]
    report = DedupReport([clusters[j] for j in sorted(clusters)], params, checked)
    return ds.with_records(kept, f"{ds.provenance}|dedupe"), report


@dataclass
class MislabelReport:
    counts: dict[AttackClass, int]
    flagged: list[tuple[int, frozenset]]
    benign_total: int
    bank_version: str = ""

    @property
    def total_flagged(self) -> int:
        return len(self.flagged)

    def table(self) -> list[dict]:
        denom = max(self.benign_total, 1)
        return [
            {"category": c.value, "count": n, "percent": round(100.0 * n / denom, 3)}
            for c, n in self.counts.items()
        ]

    def to_dict(self) -> dict:
        return {
            "bank_version": self.bank_version,
            "benign_total": self.benign_total,
            "total_flagged": self.total_flagged,
            "table": self.table(),
            "flagged": [
                {"record_id": rid, "categories": sorted(c.value for c in cats)}
                for rid, cats in self.flagged
            ],
        }


def flag_mislabeled(ds: Dataset, bank: PatternBank) -> MislabelReport:
    """Screen Normal-labeled records against the signature bank.

    A record hitting several categories is flagged once but counted once per
    category.
    """
    counts = {c: 0 for c in AttackClass.attacks()}
    flagged = []
    benign = 0
    for r in ds.records:
        if r.label is not AttackClass.NORMAL:
            continue
        benign += 1
        report = match_categories(bank, r.full_request, r.record_id)
        if report.matched:
            flagged.append((r.record_id, report.matched_categories))
            for c in report.matched_categories:
                counts[c] += 1
    counts = {c: n for c, n in counts.items() if n}
    return MislabelReport(counts, flagged, benign, bank.version)


def read_corrections(path) -> list[tuple[int, AttackClass]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rid = row.get("record_id")
            label = row.get("new_class")
            if rid is None or label is None:
                raise InvalidParams("corrections file needs record_id,new_class columns")
            out.append((int(rid), AttackClass.parse(label)))
    return out


def apply_corrections(ds: Dataset, corrections) -> Dataset:
    """Relabel records from an external review (a CSV path or (id, class) pairs)."""
    source = "inline"
    if isinstance(corrections, (str, Path)):
        source = Path(corrections).name
        corrections = read_corrections(corrections)
    fixes: dict[int, AttackClass] = {}
    known = {r.record_id for r in ds.records}
    for rid, label in corrections:
        rid = int(rid)
        if rid not in known:
            raise UnknownRecordId(rid)
        fixes[rid] = AttackClass.parse(label)
    if not fixes:
        return ds
    records = [
        type(r)(r.full_request, fixes[r.record_id], r.record_id, r.aug) if r.record_id in fixes else r
        for r in ds.records
    ]
    return ds.with_records(records, f"{ds.provenance}|corrections:{source}")
