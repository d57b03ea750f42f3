"""Labeled request corpora: taxonomy, ingestion, splitting and class weighting."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ClassTooSmall, EmptyDataset, MalformedRow, UnknownClass


class AttackClass(Enum):
    """Request taxonomy. Values are the canonical label strings."""

    NORMAL = "Normal"
    SQLI = "SQLi"
    OS_COMMAND_INJECTION = "OS Command Injection"
    PATH_TRAVERSAL = "Path Traversal"
    XSS = "XSS"
    SSRF = "SSRF"
    COMMAND_INJECTION = "Command Injection"
    SSTI = "SSTI"
    CODE_INJECTION = "Code Injection"

    @property
    def capec_id(self) -> int | None:
        return _CAPEC[self]

    @property
    def is_attack(self) -> bool:
        return self is not AttackClass.NORMAL

    @property
    def key(self) -> str:
        """Compact identifier used in pattern bank files."""
        return _KEYS[self]

    @property
    def title(self) -> str:
        """Long display name used in block-rate tables."""
        return _TITLES[self]

    @classmethod
    def parse(cls, value) -> "AttackClass":
        if isinstance(value, AttackClass):
            return value
        text = str(value).strip()
        found = _ALIASES.get(text.lower())
        if found is None:
            raise UnknownClass(value)
        return found

    @classmethod
    def attacks(cls) -> list["AttackClass"]:
        return [c for c in cls if c.is_attack]


_CAPEC = {
    AttackClass.NORMAL: None,
    AttackClass.SQLI: 66,
    AttackClass.OS_COMMAND_INJECTION: 88,
    AttackClass.PATH_TRAVERSAL: 126,
    AttackClass.XSS: 79,
    AttackClass.SSRF: 918,
    AttackClass.COMMAND_INJECTION: 248,
    AttackClass.SSTI: 1336,
    AttackClass.CODE_INJECTION: 94,
}

_KEYS = {
    AttackClass.NORMAL: "Normal",
    AttackClass.SQLI: "SQLi",
    AttackClass.OS_COMMAND_INJECTION: "OsCommandInjection",
    AttackClass.PATH_TRAVERSAL: "PathTraversal",
    AttackClass.XSS: "Xss",
    AttackClass.SSRF: "Ssrf",
    AttackClass.COMMAND_INJECTION: "CommandInjection",
    AttackClass.SSTI: "Ssti",
    AttackClass.CODE_INJECTION: "CodeInjection",
}

_TITLES = {
    AttackClass.NORMAL: "Normal",
    AttackClass.SQLI: "SQL Injection",
    AttackClass.OS_COMMAND_INJECTION: "OS Command Injection",
    AttackClass.PATH_TRAVERSAL: "Path Traversal",
    AttackClass.XSS: "Cross-Site Scripting",
    AttackClass.SSRF: "SSRF",
    AttackClass.COMMAND_INJECTION: "Command Injection",
    AttackClass.SSTI: "SSTI",
    AttackClass.CODE_INJECTION: "Code Injection",
}

_ALIASES: dict[str, AttackClass] = {}
for _c in AttackClass:
    _ALIASES[_c.value.lower()] = _c
    _ALIASES[_c.key.lower()] = _c
    _ALIASES[_c.name.lower()] = _c
    if _c.capec_id is not None:
        _ALIASES[str(_c.capec_id)] = _c

# Labels from older dataset revisions that have no place in the current taxonomy.
LEGACY_LABELS = frozenset({"protocol manipulation"})


@dataclass(frozen=True)
class LabeledRecord:
    full_request: str
    label: AttackClass
    record_id: int
    aug: str | None = None

    def __post_init__(self):
        if not self.full_request.strip():
            raise ValueError("full_request must be non-empty after trimming")


@dataclass(frozen=True)
class Dataset:
    records: tuple[LabeledRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record_id values must be unique within a Dataset")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def texts(self) -> list[str]:
        return [r.full_request for r in self.records]

    @property
    def labels(self) -> list[AttackClass]:
        return [r.label for r in self.records]

    def with_records(self, records, provenance: str | None = None) -> "Dataset":
        return Dataset(tuple(records), self.provenance if provenance is None else provenance)


@dataclass
class Rejection:
    line: int
    reason: str
    value: str | None = None


@dataclass
class LoadReport:
    accepted: int = 0
    rejections: list[Rejection] = field(default_factory=list)
    legacy: Counter = field(default_factory=Counter)

    @property
    def rejected(self) -> int:
        return len(self.rejections)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "legacy": dict(self.legacy),
            "rejections": [vars(r) for r in self.rejections],
        }


def _decode(raw: bytes) -> str:
    return raw.decode("utf-8", errors="replace")


def _iter_jsonl(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, None, MalformedRow(lineno, f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(obj, dict):
            yield lineno, None, MalformedRow(lineno, "expected a JSON object")
            continue
        yield lineno, obj, None


def _iter_csv(text: str):
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        return
    cols = {name.strip().lower(): i for i, name in enumerate(header)}
    if "full_request" not in cols or "class" not in cols:
        raise MalformedRow(1, "CSV header must contain full_request and class columns")
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            yield lineno, None, MalformedRow(lineno, f"expected {len(header)} fields, got {len(row)}")
            continue
        obj = {name: row[i] for name, i in cols.items()}
        yield lineno, obj, None


def load_dataset(path, format: str | None = None) -> tuple[Dataset, LoadReport]:
    """Read a JSONL or CSV corpus.

    Rows with an empty request, an unknown class or a malformed shape are
    excluded and listed in the returned ``LoadReport``; legacy labels are
    excluded and tallied separately. Record ids come from the optional
    ``id`` column, falling back to the 0-based data row index.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    text = _decode(path.read_bytes())
    rows = _iter_jsonl(text) if format == "jsonl" else _iter_csv(text)

    report = LoadReport()
    records: list[LabeledRecord] = []
    seen: set[int] = set()
    for index, (lineno, obj, err) in enumerate(rows):
        if err is not None:
            report.rejections.append(Rejection(lineno, err.reason))
            continue
        if "full_request" not in obj or "class" not in obj:
            report.rejections.append(Rejection(lineno, "missing full_request or class field"))
            continue
        request = obj["full_request"]
        request = "" if request is None else str(request)
        label_text = str(obj["class"])
        if label_text.strip().lower() in LEGACY_LABELS:
            report.legacy[label_text.strip()] += 1
            continue
        if not request.strip():
            report.rejections.append(Rejection(lineno, "empty full_request"))
            continue
        try:
            label = AttackClass.parse(label_text)
        except UnknownClass:
            report.rejections.append(Rejection(lineno, "unknown class", label_text))
            continue
        raw_id = obj.get("id")
        try:
            record_id = index if raw_id in (None, "") else int(raw_id)
        except (TypeError, ValueError):
            report.rejections.append(Rejection(lineno, "non-integer id", str(raw_id)))
            continue
        if record_id in seen:
            report.rejections.append(Rejection(lineno, "duplicate id", str(record_id)))
            continue
        seen.add(record_id)
        aug = obj.get("aug") or None
        records.append(LabeledRecord(request, label, record_id, aug))

    report.accepted = len(records)
    return Dataset(tuple(records), provenance=f"file:{path.name}"), report


def save_dataset(ds: Dataset, path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in ds.records:
                obj = {"id": r.record_id, "full_request": r.full_request, "class": r.label.value}
                if r.aug:
                    obj["aug"] = r.aug
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "full_request", "class", "aug"])
            for r in ds.records:
                writer.writerow([r.record_id, r.full_request, r.label.value, r.aug or ""])


def class_distribution(ds: Dataset) -> dict[AttackClass, int]:
    counts = Counter(r.label for r in ds.records)
    return {c: counts[c] for c in AttackClass if counts[c] > 0}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Per-class seeded split. Each half keeps the original record order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    by_class: dict[AttackClass, list[int]] = {}
    for i, r in enumerate(ds.records):
        by_class.setdefault(r.label, []).append(i)
    for c in AttackClass:
        if c in by_class and len(by_class[c]) < 2:
            raise ClassTooSmall(c)

    counts = {c: len(idx) for c, idx in by_class.items()}
    n_train = {c: min(max(_round_half_up(train_fraction * n), 1), n - 1) for c, n in counts.items()}
    drift = _round_half_up(train_fraction * len(ds)) - sum(n_train.values())
    if drift and counts:
        largest = max(counts, key=lambda c: (counts[c], -list(AttackClass).index(c)))
        adjusted = n_train[largest] + max(-1, min(1, drift))
        if 1 <= adjusted <= counts[largest] - 1:
            n_train[largest] = adjusted

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    for c in AttackClass:
        if c not in by_class:
            continue
        idx = np.asarray(by_class[c])
        perm = rng.permutation(len(idx))
        train_idx.extend(idx[perm[: n_train[c]]].tolist())
    train_set = set(train_idx)
    train = [r for i, r in enumerate(ds.records) if i in train_set]
    test = [r for i, r in enumerate(ds.records) if i not in train_set]
    tag = f"split(seed={seed},f={train_fraction})"
    return (
        ds.with_records(train, f"{ds.provenance}|{tag}:train"),
        ds.with_records(test, f"{ds.provenance}|{tag}:test"),
    )


def class_weights(ds: Dataset) -> dict[AttackClass, float]:
    """Balanced weights N / (K * n_c) over the classes present in ``ds``."""
    if len(ds) == 0:
        raise EmptyDataset("cannot compute class weights of an empty dataset")
    counts = class_distribution(ds)
    n, k = len(ds), len(counts)
    return {c: n / (k * nc) for c, nc in counts.items()}
