"""Handcrafted payload statistics plus TF-IDF character n-grams."""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import astuple, dataclass, fields
from importlib import resources

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCorpus, NotFitted
from .normalize import NormalizedRequest, parse_request

SCHEMA_VERSION = "wamm-features/1"

SPECIAL_CHARS = ("<", ">", '"', "'", ";")
_DIGITS = frozenset("0123456789")
_PCT = re.compile(r"%[0-9A-Fa-f]{2}")


def _load_keywords() -> tuple[str, ...]:
    text = resources.files("wamm").joinpath("data/sql_keywords.txt").read_text(encoding="utf-8")
    return tuple(line.strip().lower() for line in text.splitlines() if line.strip())


SQL_KEYWORDS = _load_keywords()


def shannon_entropy(s: str) -> float:
    """Character-level Shannon entropy in bits."""
    return _entropy(Counter(s), len(s))


def _entropy(counts: Counter, n: int) -> float:
    if n == 0:
        return 0.0
    h = 0.0
    for count in counts.values():
        p = count / n
        h -= p * math.log2(p)
    return h


@dataclass(frozen=True)
class HandcraftedFeatures:
    payload_length: int
    lt_count: int
    gt_count: int
    dquote_count: int
    squote_count: int
    semicolon_count: int
    special_char_ratio: float
    digit_count: int
    digit_ratio: float
    percent_encoded_count: int
    shannon_entropy: float
    url_depth: int
    unique_char_count: int
    word_count: int
    sql_keyword_flag: int
    traversal_flag: int

    def as_array(self) -> np.ndarray:
        return np.asarray(astuple(self), dtype=np.float64)


HANDCRAFTED_SCHEMA: tuple[str, ...] = tuple(f.name for f in fields(HandcraftedFeatures))
DENSE_WIDTH = len(HANDCRAFTED_SCHEMA)


def extract_handcrafted(req: NormalizedRequest | str) -> HandcraftedFeatures:
    if isinstance(req, str):
        req = parse_request(req)
    raw = req.raw
    n = len(raw)
    denom = max(n, 1)
    counts = Counter(raw)
    digits = sum(c for ch, c in counts.items() if ch in _DIGITS)
    # special = printable punctuation / symbols: not alphanumeric, not whitespace
    special = sum(c for ch, c in counts.items() if not ch.isalnum() and not ch.isspace())
    lowered = raw.lower()
    traversal = any(t in text for text in (raw, req.decoded_once) for t in ("../", "..\\"))
    return HandcraftedFeatures(
        payload_length=n,
        lt_count=counts["<"],
        gt_count=counts[">"],
        dquote_count=counts['"'],
        squote_count=counts["'"],
        semicolon_count=counts[";"],
        special_char_ratio=special / denom,
        digit_count=digits,
        digit_ratio=digits / denom,
        percent_encoded_count=len(_PCT.findall(raw)),
        shannon_entropy=_entropy(counts, n),
        url_depth=req.url_depth,
        unique_char_count=len(counts),
        word_count=len(raw.split()),
        sql_keyword_flag=int(any(k in lowered for k in SQL_KEYWORDS)),
        traversal_flag=int(traversal),
    )


def char_ngrams(s: str, n_range: tuple[int, int] = (1, 2)) -> Counter:
    lo, hi = n_range
    grams: Counter = Counter()
    for n in range(lo, hi + 1):
        if n == 1:
            grams.update(s)
        elif n == 2:
            grams.update(map(str.__add__, s, s[1:]))
        else:
            grams.update(s[i:i + n] for i in range(len(s) - n + 1))
    return grams


def corpus_fingerprint(corpus) -> str:
    h = hashlib.sha256()
    for doc in corpus:
        data = doc.encode("utf-8", "surrogatepass")
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return h.hexdigest()


class TfidfVectorizer:
    """Character n-gram TF-IDF with smoothed idf and L2 row normalization.

    Vocabulary columns follow document-frequency rank (descending), ties
    broken by ascending n-gram.
    """

    def __init__(self, max_features: int = 2000, n_range: tuple[int, int] = (1, 2)):
        self.max_features = max_features
        self.n_range = tuple(n_range)
        self.vocabulary: dict[str, int] | None = None
        self.idf: np.ndarray | None = None
        self.fitted_on: str = ""
        self.n_docs = 0

    @property
    def fitted(self) -> bool:
        return self.vocabulary is not None

    @property
    def terms(self) -> list[str]:
        self._check()
        return list(self.vocabulary)

    def __len__(self) -> int:
        return 0 if self.vocabulary is None else len(self.vocabulary)

    def fit(self, corpus) -> "TfidfVectorizer":
        corpus = list(corpus)
        if not corpus:
            raise EmptyCorpus("cannot fit a vectorizer on an empty corpus")
        df: Counter = Counter()
        for doc in corpus:
            df.update(char_ngrams(doc, self.n_range).keys())
        ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[: self.max_features]
        n = len(corpus)
        self.vocabulary = {term: i for i, (term, _) in enumerate(ranked)}
        self.idf = np.array([math.log((1 + n) / (1 + d)) + 1.0 for _, d in ranked], dtype=np.float64)
        self.fitted_on = corpus_fingerprint(corpus)
        self.n_docs = n
        return self

    @classmethod
    def from_terms(cls, terms, idf, n_range=(1, 2), max_features=2000, fitted_on="", n_docs=0):
        v = cls(max_features, n_range)
        v.vocabulary = {t: i for i, t in enumerate(terms)}
        v.idf = np.asarray(idf, dtype=np.float64)
        v.fitted_on = fitted_on
        v.n_docs = n_docs
        return v

    def _check(self):
        if self.vocabulary is None:
            raise NotFitted("vectorizer has not been fitted")

    def transform_one(self, s: str) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(column indices, weights)`` sorted by column."""
        self._check()
        lookup = self.vocabulary.get
        idx, tf = [], []
        for gram, count in char_ngrams(s, self.n_range).items():
            col = lookup(gram)
            if col is not None:
                idx.append(col)
                tf.append(count)
        if not idx:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        idx = np.array(idx, dtype=np.int64)
        order = np.argsort(idx, kind="stable")
        idx = idx[order]
        w = np.array(tf, dtype=np.float64)[order] * self.idf[idx]
        return idx, w / np.sqrt(np.dot(w, w))

    def transform(self, corpus) -> sp.csr_matrix:
        self._check()
        rows = [self.transform_one(s) for s in corpus]
        return _stack_rows(rows, len(self))


def _stack_rows(rows, width: int) -> sp.csr_matrix:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum([len(i) for i, _ in rows], out=indptr[1:])
    if rows and indptr[-1]:
        indices = np.concatenate([i for i, _ in rows])
        data = np.concatenate([w for _, w in rows])
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), width))


def fit_vectorizer(corpus, max_features: int = 2000, n_range=(1, 2)) -> TfidfVectorizer:
    return TfidfVectorizer(max_features, n_range).fit(corpus)


def transform(v: TfidfVectorizer, s: str) -> tuple[np.ndarray, np.ndarray]:
    return v.transform_one(s)


@dataclass(frozen=True)
class FeatureVector:
    dense: np.ndarray
    sparse_index: np.ndarray
    sparse_value: np.ndarray
    width: int
    schema_version: str = SCHEMA_VERSION

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.width, dtype=np.float64)
        out[: len(self.dense)] = self.dense
        out[len(self.dense) + self.sparse_index] = self.sparse_value
        return out


class FeaturePipeline:
    """Fitted featurizer: handcrafted block followed by the TF-IDF block."""

    def __init__(self, vectorizer: TfidfVectorizer):
        self.vectorizer = vectorizer
        self.schema = HANDCRAFTED_SCHEMA

    @classmethod
    def fit(cls, texts, max_features: int = 2000, n_range=(1, 2)) -> "FeaturePipeline":
        return cls(fit_vectorizer(texts, max_features, n_range))

    @property
    def width(self) -> int:
        return DENSE_WIDTH + len(self.vectorizer)

    @property
    def feature_names(self) -> list[str]:
        return list(self.schema) + [f"tfidf[{t!r}]" for t in self.vectorizer.terms]

    def featurize(self, req: NormalizedRequest | str) -> FeatureVector:
        if isinstance(req, str):
            req = parse_request(req)
        dense = extract_handcrafted(req).as_array()
        idx, w = self.vectorizer.transform_one(req.raw)
        return FeatureVector(dense, idx, w, self.width)

    def matrix(self, texts) -> sp.csr_matrix:
        """Feature matrix (CSR) for many raw requests."""
        rows = []
        for s in texts:
            fv = self.featurize(s)
            nz = np.flatnonzero(fv.dense)
            rows.append((np.concatenate([nz, DENSE_WIDTH + fv.sparse_index]),
                         np.concatenate([fv.dense[nz], fv.sparse_value])))
        return _stack_rows(rows, self.width)


def featurize(pipeline: FeaturePipeline, req: NormalizedRequest | str) -> FeatureVector:
    if pipeline is None or not pipeline.vectorizer.fitted:
        raise NotFitted("feature pipeline is not fitted")
    return pipeline.featurize(req)
