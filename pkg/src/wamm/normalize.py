"""Best-effort request parsing and percent-decoding."""

from __future__ import annotations

import re
from dataclasses import dataclass

HTTP_METHODS = frozenset({"GET", "POST", "PUT", "DELETE", "PATCH", "HEAD", "OPTIONS", "TRACE", "CONNECT"})

_PCT_RUN = re.compile(r"(?:%[0-9A-Fa-f]{2})+")
_BLANK_LINE = re.compile(r"\r?\n[ \t]*\r?\n")


def _decode_run(match: re.Match) -> str:
    return bytes.fromhex(match.group().replace("%", "")).decode("utf-8", errors="replace")


def percent_decode(s: str) -> str:
    """Decode every ``%HH`` escape once. ``+`` is left alone.

    Adjacent escapes are decoded together so multi-byte UTF-8 sequences
    survive; invalid byte sequences become U+FFFD.
    """
    if "%" not in s:
        return s
    return _PCT_RUN.sub(_decode_run, s)


def url_depth(path: str) -> int:
    return sum(1 for seg in path.split("/") if seg)


@dataclass(frozen=True)
class NormalizedRequest:
    raw: str
    method: str | None
    path: str
    query: str
    body: str
    decoded_once: str
    decoded_twice: str

    @property
    def variants(self) -> tuple[str, str, str]:
        return (self.raw, self.decoded_once, self.decoded_twice)

    @property
    def url_depth(self) -> int:
        return url_depth(self.path)


def parse_request(raw: str | bytes) -> NormalizedRequest:
    """Split a request string into method, path, query and body.

    Anything that does not start with an HTTP method token is treated as an
    opaque payload: ``path`` holds the whole string.
    """
    if isinstance(raw, (bytes, bytearray)):
        raw = bytes(raw).decode("utf-8", errors="replace")
    once = percent_decode(raw)
    twice = percent_decode(once)

    head, body = raw, ""
    blank = _BLANK_LINE.search(raw)
    if blank:
        head, body = raw[: blank.start()], raw[blank.end():]

    tokens = head.split(None, 2)
    if not tokens or tokens[0] not in HTTP_METHODS:
        return NormalizedRequest(raw, None, raw, "", "", once, twice)

    method = tokens[0]
    uri = tokens[1] if len(tokens) > 1 else ""
    path, _, query = uri.partition("?")
    return NormalizedRequest(raw, method, path, query, body, once, twice)
