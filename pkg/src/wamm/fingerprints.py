"""Regex fingerprint bank and the rule-based blocking baseline."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import AttackClass
from .errors import InvalidPatternBank, UnknownClass
from .normalize import NormalizedRequest, parse_request

REQUIRED_CATEGORIES = frozenset({
    AttackClass.SQLI, AttackClass.XSS, AttackClass.PATH_TRAVERSAL,
    AttackClass.OS_COMMAND_INJECTION, AttackClass.SSTI, AttackClass.SSRF,
})


@dataclass(frozen=True)
class PatternEntry:
    category: AttackClass
    pattern_id: str
    source: str
    regex: re.Pattern


@dataclass(frozen=True)
class MatchReport:
    record_id: int | None
    matched_categories: frozenset
    matched_pattern_ids: tuple[str, ...]

    @property
    def matched(self) -> bool:
        return bool(self.matched_categories)


class PatternBank:
    """An immutable, versioned list of compiled signatures."""

    def __init__(self, entries, version: str = "0.0.0", require_coverage: bool = True):
        self.entries: tuple[PatternEntry, ...] = tuple(entries)
        self.version = version
        ids = [e.pattern_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise InvalidPatternBank("pattern ids must be unique")
        if require_coverage:
            missing = REQUIRED_CATEGORIES - self.categories
            if missing:
                names = ", ".join(sorted(c.key for c in missing))
                raise InvalidPatternBank(f"bank does not cover: {names}")
        self._category_of = {e.pattern_id: e.category for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def categories(self) -> frozenset:
        return frozenset(e.category for e in self.entries)

    def category_of(self, pattern_id: str) -> AttackClass:
        return self._category_of[pattern_id]

    def count_by_category(self) -> dict[AttackClass, int]:
        out: dict[AttackClass, int] = {}
        for e in self.entries:
            out[e.category] = out.get(e.category, 0) + 1
        return out

    def with_pattern(self, category, pattern_id: str, source: str) -> "PatternBank":
        entry = _compile(AttackClass.parse(category), pattern_id, source)
        return PatternBank(self.entries + (entry,), self.version, require_coverage=False)

    @classmethod
    def from_text(cls, text: str, require_coverage: bool = True) -> "PatternBank":
        version = "0.0.0"
        entries = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if line.startswith("!version"):
                version = line.split(None, 1)[1].strip()
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InvalidPatternBank(f"line {lineno}: expected 3 tab-separated fields")
            category, pattern_id, source = parts
            try:
                cls_ = AttackClass.parse(category)
            except UnknownClass:
                raise InvalidPatternBank(f"line {lineno}: unknown category {category!r}") from None
            entries.append(_compile(cls_, pattern_id.strip(), source, lineno))
        return cls(entries, version, require_coverage)

    @classmethod
    def load(cls, path=None) -> "PatternBank":
        if path is None:
            return default_bank()
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _compile(category, pattern_id, source, lineno=None) -> PatternEntry:
    if category is AttackClass.NORMAL:
        raise InvalidPatternBank(f"pattern {pattern_id}: Normal is not an attack category")
    try:
        regex = re.compile(source, re.IGNORECASE)
    except re.error as exc:
        where = f"line {lineno}: " if lineno else ""
        raise InvalidPatternBank(f"{where}pattern {pattern_id} does not compile: {exc}") from None
    return PatternEntry(category, pattern_id, source, regex)


_DEFAULT: PatternBank | None = None


def default_bank() -> PatternBank:
    """The bundled signature bank (loaded once)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("wamm").joinpath("data/patterns.txt").read_text(encoding="utf-8")
        _DEFAULT = PatternBank.from_text(text)
    return _DEFAULT


def match_categories(bank: PatternBank, req: NormalizedRequest | str, record_id=None,
                     raw_only: bool = False) -> MatchReport:
    """Report every pattern that fires on any decoded view of ``req``.

    With ``raw_only`` the decoded views are skipped, which is how a naive
    signature engine without normalization behaves.
    """
    if isinstance(req, str):
        req = parse_request(req)
    if raw_only:
        texts = (req.raw,)
    else:
        texts = tuple(dict.fromkeys(req.variants))
    hits = [e for e in bank.entries if any(e.regex.search(t) for t in texts)]
    return MatchReport(
        record_id,
        frozenset(e.category for e in hits),
        tuple(e.pattern_id for e in hits),
    )


def rule_block(bank: PatternBank, req: NormalizedRequest | str, record_id=None,
               raw_only: bool = False) -> tuple[bool, MatchReport]:
    report = match_categories(bank, req, record_id, raw_only)
    return report.matched, report
