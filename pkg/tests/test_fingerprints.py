import pytest
from hypothesis import given, settings, strategies as st

from wamm.augment import url_encode_all
from wamm.corpus import AttackClass
from wamm.errors import InvalidPatternBank
from wamm.fingerprints import REQUIRED_CATEGORIES, PatternBank, default_bank, match_categories, rule_block
from wamm.seedcorpus import load_seed_corpus

BANK = default_bank()
ATTACKS = [r.full_request for r in load_seed_corpus().records if r.label.is_attack][:400]


def test_bank_shape():
    counts = BANK.count_by_category()
    assert len(BANK) >= 60
    assert REQUIRED_CATEGORIES <= BANK.categories
    assert all(n >= 8 for n in counts.values())
    assert BANK.version == "1.0.0"


@pytest.mark.parametrize("text,cats", [
    ("1 UNION SELECT password FROM users--", {AttackClass.SQLI}),
    ("%2e%2e%2fetc%2fpasswd", {AttackClass.PATH_TRAVERSAL}),
    ("hello=world", set()),
    ("<script>alert(1)</script>", {AttackClass.XSS}),
])
def test_match_examples(text, cats):
    assert set(match_categories(BANK, text).matched_categories) == cats


def test_rule_block_examples():
    assert rule_block(BANK, "GET /index.html")[0] is False
    blocked, rep = rule_block(BANK, "<script>alert(1)</script>")
    assert blocked and AttackClass.XSS in rep.matched_categories


def test_double_encoded_only_decoded_twice_matches():
    payload = url_encode_all(url_encode_all("1 UNION SELECT 1"))
    assert payload.startswith("1%2520UNION")
    assert rule_block(BANK, payload)[0]
    assert not rule_block(BANK, payload, raw_only=True)[0]


def test_category_soundness():
    for text in ATTACKS[:100]:
        rep = match_categories(BANK, text, 1)
        assert {BANK.category_of(p) for p in rep.matched_pattern_ids} == set(rep.matched_categories)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(ATTACKS))
def test_decode_coverage(payload):
    # the invariant speaks of patterns that match the text itself
    if not rule_block(BANK, payload, raw_only=True)[0]:
        return
    assert rule_block(BANK, url_encode_all(payload))[0]
    assert rule_block(BANK, url_encode_all(url_encode_all(payload)))[0]


@settings(max_examples=50, deadline=None)
@given(st.text(max_size=60), st.sampled_from(ATTACKS))
def test_monotonic(extra_regex_seed, text):
    import re
    bigger = BANK.with_pattern("SQLi", "extra-001", re.escape(extra_regex_seed) or "x")
    before = rule_block(BANK, text)[0]
    after = rule_block(bigger, text)[0]
    assert after or not before


def test_bank_parsing_errors():
    with pytest.raises(InvalidPatternBank):
        PatternBank.from_text("SQLi\tonly-two-fields")
    with pytest.raises(InvalidPatternBank):
        PatternBank.from_text("SQLi\ts1\t(unclosed", require_coverage=False)
    with pytest.raises(InvalidPatternBank):
        PatternBank.from_text("Bogus\tb1\tx", require_coverage=False)
    with pytest.raises(InvalidPatternBank):
        PatternBank.from_text("SQLi\ts1\tx\nSQLi\ts1\ty", require_coverage=False)
    with pytest.raises(InvalidPatternBank):
        PatternBank.from_text("SQLi\ts1\tunion")  # coverage below the required six


def test_bank_file_roundtrip(tmp_path):
    text = "!version 2.1.0\n# comment\n" + "\n".join(
        f"{c.key}\t{c.key}-1\t{c.key.lower()}" for c in REQUIRED_CATEGORIES)
    p = tmp_path / "bank.txt"
    p.write_text(text)
    bank = PatternBank.load(p)
    assert bank.version == "2.1.0" and len(bank) == 6
