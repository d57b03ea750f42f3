"""Label-preserving encoding and obfuscation operators."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .corpus import AttackClass, Dataset, LabeledRecord

OP_NAMES = (
    "url_encode_all",
    "double_url_encode",
    "case_toggle",
    "sql_inline_comment",
    "whitespace_substitute",
    "html_entity_encode",
)

_SAFE = frozenset(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789")
_BETWEEN_WORDS = re.compile(r"(?<=[A-Za-z])\s+(?=[A-Za-z])")
_WS_SUBSTITUTES = ("/**/", "%09", "%0a")
_ENTITIES = {"&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&apos;"}


def url_encode_all(s: str) -> str:
    data = s.encode("utf-8", "surrogatepass")
    return "".join(chr(b) if b in _SAFE else f"%{b:02X}" for b in data)


def double_url_encode(s: str) -> str:
    return url_encode_all(url_encode_all(s))


def case_toggle(s: str, seed: int = 0) -> str:
    rng = random.Random(seed)
    return "".join(ch.swapcase() if ch.isalpha() and rng.random() < 0.5 else ch for ch in s)


def sql_inline_comment(s: str) -> str:
    return _BETWEEN_WORDS.sub("/**/", s)


def whitespace_substitute(s: str) -> str:
    out = []
    k = 0
    for ch in s:
        if ch == " ":
            out.append(_WS_SUBSTITUTES[k % len(_WS_SUBSTITUTES)])
            k += 1
        else:
            out.append(ch)
    return "".join(out)


def html_entity_encode(s: str) -> str:
    return "".join(_ENTITIES.get(ch, ch) for ch in s)


_OPS = {
    "url_encode_all": url_encode_all,
    "double_url_encode": double_url_encode,
    "sql_inline_comment": sql_inline_comment,
    "whitespace_substitute": whitespace_substitute,
    "html_entity_encode": html_entity_encode,
}


@dataclass(frozen=True)
class AugmentOp:
    name: str
    seed: int = 0

    def __post_init__(self):
        if self.name not in OP_NAMES:
            raise ValueError(f"unknown augment op {self.name!r}; choose from {', '.join(OP_NAMES)}")

    def __call__(self, s: str) -> str:
        return apply(self, s)


def apply(op: AugmentOp | str, s: str) -> str:
    if isinstance(op, str):
        op = AugmentOp(op)
    if op.name == "case_toggle":
        return case_toggle(s, op.seed)
    return _OPS[op.name](s)


def expand_dataset(ds: Dataset, ops, per_record_variants: int = 1, seed: int = 0,
                   include_normal: bool = False) -> Dataset:
    """Append transformed copies of every attack record right after it.

    Each attack record gets ``per_record_variants`` distinct ops drawn with a
    seeded RNG; Normal records pass through unless ``include_normal`` is set.
    Encoding only the attacks teaches a model that encoding itself means
    attack, so encoded benign traffic gets blocked; ``include_normal`` avoids
    that. New ids continue past the current maximum id.
    """
    ops = [AugmentOp(o) if isinstance(o, str) else o for o in ops]
    if per_record_variants > len(ops):
        raise ValueError("per_record_variants cannot exceed the number of ops")
    if per_record_variants <= 0 or not ops:
        return ds
    rng = random.Random(seed)
    next_id = max((r.record_id for r in ds.records), default=-1) + 1
    out: list[LabeledRecord] = []
    for r in ds.records:
        out.append(r)
        if r.label is AttackClass.NORMAL and not include_normal:
            continue
        for op in rng.sample(ops, per_record_variants):
            if op.name == "case_toggle":
                op = AugmentOp(op.name, rng.randrange(1 << 31))
            text = apply(op, r.full_request)
            out.append(LabeledRecord(text, r.label, next_id, f"augmented:{op.name}"))
            next_id += 1
    tag = f"augment(seed={seed},n={per_record_variants}{',normal' if include_normal else ''})"
    return ds.with_records(out, f"{ds.provenance}|{tag}")
