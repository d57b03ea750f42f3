"""Versioned binary container for trained models (``.wamm`` files).

Layout (all integers little-endian)::

    magic      8 bytes   b"WAMMGBDT"
    major      u16
    minor      u16
    length     u64       byte length of the section payload
    payload    length    sequence of sections
    checksum   32 bytes  SHA-256 of the payload

Each section is ``tag (4 ASCII bytes) | u64 size | body``. See
docs/model_format.md for the section bodies.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import CorruptFile, VersionMismatch
from .features import TfidfVectorizer
from .gbdt import FORMAT_VERSION, GbdtModel, TrainConfig, Tree

MAGIC = b"WAMMGBDT"
_HEADER = struct.Struct("<8sHHQ")


def _section(tag: bytes, body: bytes) -> bytes:
    return tag + struct.pack("<Q", len(body)) + body


def _meta(model: GbdtModel) -> bytes:
    meta = {
        "classes": [c.value for c in model.classes],
        "learning_rate": model.learning_rate,
        "n_features": model.n_features,
        "feature_schema": list(model.feature_schema),
        "completed_rounds": model.completed_rounds,
        "config": asdict(model.config) if model.config is not None else None,
    }
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _vocab(v: TfidfVectorizer) -> bytes:
    out = io.BytesIO()
    fp = v.fitted_on.encode("ascii").ljust(64, b"\0")[:64]
    out.write(struct.pack("<IIIQ", v.n_range[0], v.n_range[1], v.max_features, v.n_docs))
    out.write(fp)
    terms = v.terms
    out.write(struct.pack("<I", len(terms)))
    for term, idf in zip(terms, v.idf):
        data = term.encode("utf-8", "surrogatepass")
        out.write(struct.pack("<I", len(data)))
        out.write(data)
        out.write(struct.pack("<d", float(idf)))
    return out.getvalue()


def _trees(trees) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack("<I", len(trees)))
    for t in trees:
        out.write(struct.pack("<I", len(t)))
        out.write(np.asarray(t.feature, dtype="<i4").tobytes())
        out.write(np.asarray(t.threshold, dtype="<f8").tobytes())
        out.write(np.asarray(t.left, dtype="<i4").tobytes())
        out.write(np.asarray(t.right, dtype="<i4").tobytes())
        out.write(np.asarray(t.value, dtype="<f8").tobytes())
    return out.getvalue()


def dumps(model: GbdtModel) -> bytes:
    payload = _section(b"META", _meta(model))
    payload += _section(b"BASE", np.asarray(model.base_score, dtype="<f8").tobytes())
    if model.vectorizer is not None:
        payload += _section(b"VOCB", _vocab(model.vectorizer))
    payload += _section(b"TREE", _trees(model.trees))
    major, minor = FORMAT_VERSION
    header = _HEADER.pack(MAGIC, major, minor, len(payload))
    return header + payload + hashlib.sha256(payload).digest()


def save_model(model: GbdtModel, path) -> None:
    Path(path).write_bytes(dumps(model))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptFile("unexpected end of section")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).astype(dt.newbyteorder("="))


def _read_vocab(body: bytes) -> TfidfVectorizer:
    r = _Reader(body)
    lo, hi, max_features, n_docs = r.unpack("<IIIQ")
    fitted_on = r.take(64).rstrip(b"\0").decode("ascii")
    (count,) = r.unpack("<I")
    terms, idf = [], []
    for _ in range(count):
        (size,) = r.unpack("<I")
        terms.append(r.take(size).decode("utf-8", "surrogatepass"))
        idf.append(r.unpack("<d")[0])
    return TfidfVectorizer.from_terms(terms, idf, (lo, hi), max_features, fitted_on, n_docs)


def _read_trees(body: bytes) -> list[Tree]:
    r = _Reader(body)
    (count,) = r.unpack("<I")
    trees = []
    for _ in range(count):
        (n,) = r.unpack("<I")
        trees.append(Tree(r.array("<i4", n), r.array("<f8", n), r.array("<i4", n),
                          r.array("<i4", n), r.array("<f8", n)))
    return trees


def loads(data: bytes) -> GbdtModel:
    if len(data) < _HEADER.size + 32:
        raise CorruptFile("file too short to be a model")
    magic, major, minor, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFile("bad magic bytes")
    if major != FORMAT_VERSION[0]:
        raise VersionMismatch(f"model format {major}.{minor} is not readable by format {FORMAT_VERSION[0]}.x")
    end = _HEADER.size + length
    if len(data) != end + 32:
        raise CorruptFile("payload length does not match file size")
    payload = data[_HEADER.size:end]
    if hashlib.sha256(payload).digest() != data[end:]:
        raise CorruptFile("checksum mismatch")

    sections: dict[bytes, bytes] = {}
    r = _Reader(payload)
    while r.pos < len(payload):
        tag = r.take(4)
        (size,) = r.unpack("<Q")
        sections[tag] = r.take(size)
    try:
        meta = json.loads(sections[b"META"].decode("utf-8"))
        base = np.frombuffer(sections[b"BASE"], dtype="<f8").astype(np.float64)
        trees = _read_trees(sections[b"TREE"])
        vectorizer = _read_vocab(sections[b"VOCB"]) if b"VOCB" in sections else None
        config = TrainConfig(**meta["config"]) if meta.get("config") else None
        model = GbdtModel(meta["classes"], trees, base, meta["learning_rate"], meta["n_features"],
                          vectorizer, meta["feature_schema"], config, (major, minor))
    except KeyError as exc:
        raise CorruptFile(f"missing field or section {exc.args[0]!r}") from None
    except CorruptFile:
        raise
    except (ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"invalid model contents: {exc}") from None
    if len(model.base_score) != model.n_classes:
        raise CorruptFile("base score length does not match the class count")
    if vectorizer is not None and model.n_features != len(model.feature_schema) + len(vectorizer):
        raise CorruptFile("feature width does not match schema plus vocabulary")
    return model


def load_model(path) -> GbdtModel:
    return loads(Path(path).read_bytes())
