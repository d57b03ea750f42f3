from urllib.parse import quote, unquote

import pytest
from hypothesis import given, strategies as st

from wamm.normalize import parse_request, percent_decode, url_depth


@pytest.mark.parametrize("s,out", [
    ("%2e%2e%2f", "../"),
    ("abc", "abc"),
    ("%252e", "%2e"),
    ("100%", "100%"),
    ("%zz%4", "%zz%4"),
    ("a+b", "a+b"),
    ("%C3%A9", "é"),
    ("%ff", "�"),
])
def test_percent_decode(s, out):
    assert percent_decode(s) == out


def test_double_decode():
    assert percent_decode(percent_decode("%252e")) == "."


@given(st.text())
def test_decode_matches_stdlib(s):
    # stdlib unquote uses the same lossy UTF-8 convention
    assert percent_decode(s) == unquote(s, errors="replace")


@given(st.text())
def test_quote_roundtrip(s):
    assert percent_decode(quote(s, safe="")) == s


def test_parse_get():
    r = parse_request("GET /a/b?id=1")
    assert (r.method, r.path, r.query, r.body) == ("GET", "/a/b", "id=1", "")


def test_parse_opaque():
    r = parse_request("id=1' OR 1=1")
    assert r.method is None and r.path == "id=1' OR 1=1"


def test_parse_body():
    r = parse_request("POST /login HTTP/1.1\n\nuser=x")
    assert r.method == "POST" and r.path == "/login" and r.body == "user=x"


def test_parse_crlf_body():
    r = parse_request("POST /p?q=2 HTTP/1.1\r\nHost: h\r\n\r\na=b\n\nc")
    assert r.query == "q=2" and r.body == "a=b\n\nc"


def test_lowercase_method_is_opaque():
    assert parse_request("get /x").method is None


def test_bytes_input():
    r = parse_request(b"GET /\xff")
    assert r.path == "/�"


@pytest.mark.parametrize("path,depth", [("/a/b/c", 3), ("/", 0), ("//a//b", 2), ("", 0)])
def test_url_depth(path, depth):
    assert url_depth(path) == depth


@given(st.binary(max_size=300))
def test_parse_total(data):
    r = parse_request(data)
    assert r.raw == data.decode("utf-8", errors="replace")
    assert r.decoded_once == percent_decode(r.raw)
    assert r.decoded_twice == percent_decode(r.decoded_once)
    assert r.url_depth >= 0
    if r.method is None:
        assert r.path == r.raw


@given(st.text(max_size=300))
def test_raw_preserved(s):
    assert parse_request(s).raw == s
