"""Classification metrics, rule-vs-model block rates and latency benchmarks."""

from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import AttackClass, Dataset
from .errors import (EmptyMatrix, InsufficientIterations, LengthMismatch,
                     NoAttackSamples, UnknownLabel)
from .fingerprints import PatternBank, rule_block
from .normalize import parse_request

ZERO_DIVISION_NOTE = "precision, recall and F1 are reported as 0 when their denominator is 0"


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple
    counts: np.ndarray  # rows: true class, columns: predicted class

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {"classes": [_name(c) for c in self.classes], "counts": self.counts.tolist()}


def _name(c) -> str:
    return c.value if isinstance(c, AttackClass) else str(c)


def confusion(true, pred, classes) -> ConfusionMatrix:
    true, pred, classes = list(true), list(pred), tuple(classes)
    if len(true) != len(pred):
        raise LengthMismatch(f"{len(true)} true labels but {len(pred)} predictions")
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    try:
        ti = np.fromiter((index[t] for t in true), dtype=np.int64, count=len(true))
        pi = np.fromiter((index[p] for p in pred), dtype=np.int64, count=len(pred))
    except KeyError as exc:
        raise UnknownLabel(f"label {exc.args[0]!r} is not in the class list") from None
    counts = np.bincount(ti * k + pi, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(classes, counts)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    accuracy: float
    per_class: dict
    macro_precision: float
    macro_recall: float
    macro_f1: float
    total: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "per_class": {_name(c): asdict(m) for c, m in self.per_class.items()},
            "note": ZERO_DIVISION_NOTE,
        }

    def render(self) -> str:
        width = max([len(_name(c)) for c in self.per_class] + [9])
        lines = [f"{'class':<{width}}  precision  recall     f1  support"]
        for c, m in self.per_class.items():
            lines.append(f"{_name(c):<{width}}  {m.precision:9.4f}  {m.recall:6.4f}  {m.f1:6.4f}  {m.support:7d}")
        lines.append(f"{'macro':<{width}}  {self.macro_precision:9.4f}  {self.macro_recall:6.4f}  {self.macro_f1:6.4f}  {self.total:7d}")
        lines.append(f"accuracy {self.accuracy:.4f}")
        lines.append(f"({ZERO_DIVISION_NOTE})")
        return "\n".join(lines)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EmptyMatrix("confusion matrix holds no samples")
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    per_class = {}
    for i, c in enumerate(cm.classes):
        p = _ratio(tp[i], tp[i] + fp[i])
        r = _ratio(tp[i], tp[i] + fn[i])
        f = _ratio(2 * p * r, p + r)
        per_class[c] = ClassMetrics(p, r, f, int(tp[i] + fn[i]))
    k = len(cm.classes)
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        per_class=per_class,
        macro_precision=sum(m.precision for m in per_class.values()) / k,
        macro_recall=sum(m.recall for m in per_class.values()) / k,
        macro_f1=sum(m.f1 for m in per_class.values()) / k,
        total=int(total),
    )


# -- block rates -------------------------------------------------------------

@dataclass
class BlockRateRow:
    capec_id: int | None
    name: str
    samples: int
    rule_rate: float
    model_rate: float
    model_rate_strict: float

    @property
    def delta(self) -> float:
        return self.model_rate - self.rule_rate

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta"] = self.delta
        return d


def block_rate_table(ds_test: Dataset, bank: PatternBank, model, raw_only: bool = False,
                     predictions=None) -> list[BlockRateRow]:
    """Per attack class: share blocked by the rules and by the model.

    The model blocks a request when it predicts any non-Normal class;
    ``model_rate_strict`` only counts predictions of the correct class.
    """
    attacks = [r for r in ds_test.records if r.label.is_attack]
    if not attacks:
        raise NoAttackSamples("test set has no attack records")
    if predictions is None:
        pipe = model.pipeline
        predictions = model.predict(pipe.matrix([r.full_request for r in attacks]))
    groups: dict[AttackClass, list[tuple[bool, AttackClass]]] = {}
    for rec, pred in zip(attacks, predictions):
        blocked, _ = rule_block(bank, rec.full_request, rec.record_id, raw_only)
        groups.setdefault(rec.label, []).append((blocked, pred))
    rows = []
    for cls in AttackClass.attacks():
        if cls not in groups:
            continue
        g = groups[cls]
        n = len(g)
        rows.append(BlockRateRow(
            cls.capec_id, cls.title, n,
            100.0 * sum(b for b, _ in g) / n,
            100.0 * sum(p is not AttackClass.NORMAL for _, p in g) / n,
            100.0 * sum(p is cls for _, p in g) / n,
        ))
    rows.sort(key=lambda r: -r.samples)
    return rows


def render_block_rates(rows) -> str:
    header = f"{'ID':>5}  {'Name':<22} {'samples':>8} {'rule':>7} {'model':>7} {'Δ':>7}"
    lines = [header]
    for r in rows:
        cid = "" if r.capec_id is None else str(r.capec_id)
        lines.append(f"{cid:>5}  {r.name:<22} {r.samples:>8d} {r.rule_rate:7.2f} {r.model_rate:7.2f} {r.delta:7.2f}")
    return "\n".join(lines)


# -- latency -------------------------------------------------------------------

@dataclass
class StageStats:
    mean_us: float
    p50_us: float
    p99_us: float
    std_us: float = 0.0

    @classmethod
    def of(cls, ns: np.ndarray) -> "StageStats":
        us = ns / 1000.0
        return cls(float(us.mean()), float(np.percentile(us, 50)), float(np.percentile(us, 99)),
                   float(us.std()))


@dataclass
class LatencyReport:
    normalize: StageStats
    featurize: StageStats
    predict: StageStats
    end_to_end: StageStats
    samples: int
    warmup: int
    logical_cpus: int

    def to_dict(self) -> dict:
        return asdict(self)

    def summary_row(self, model_name: str = "GBDT", accuracy: float | None = None) -> dict:
        return {"model": model_name, "accuracy": accuracy,
                "inference_time_ms": self.end_to_end.mean_us / 1000.0}


def latency_bench(model, requests, warmup: int = 100, iters: int = 1000,
                  min_iters: int = 1000) -> LatencyReport:
    """Time normalize, featurize and predict for single requests, one at a time."""
    if iters < min_iters:
        raise InsufficientIterations(f"need at least {min_iters} iterations, got {iters}")
    requests = list(requests)
    if not requests:
        raise ValueError("no requests to benchmark")
    pipe = model.pipeline
    clock = time.perf_counter_ns
    stages = np.zeros((iters, 4), dtype=np.int64)
    for i in range(warmup + iters):
        text = requests[i % len(requests)]
        t0 = clock()
        req = parse_request(text)
        t1 = clock()
        fv = pipe.featurize(req)
        t2 = clock()
        model.predict_proba(fv)
        t3 = clock()
        if i >= warmup:
            stages[i - warmup] = (t1 - t0, t2 - t1, t3 - t2, t3 - t0)
    return LatencyReport(
        StageStats.of(stages[:, 0]), StageStats.of(stages[:, 1]),
        StageStats.of(stages[:, 2]), StageStats.of(stages[:, 3]),
        iters, warmup, os.cpu_count() or 1,
    )
