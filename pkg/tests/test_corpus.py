import pytest
from hypothesis import given, strategies as st

from ldner.corpus import (DEFAULT_CATEGORIES, BioTag, Dataset, Token, extract_spans, format_conll,
                          load_tagset, normalize_token, parse_conll, parse_tokens, split_dataset)
from ldner.errors import CorpusFormatError

B = lambda c: BioTag("B", c)  # noqa: E731
I = lambda c: BioTag("I", c)  # noqa: E731
O = BioTag("O")


def test_parse_minimal():
    d = parse_conll("Obama\tB-person\n\n")
    assert len(d) == 1 and len(d.sentences[0]) == 1
    assert d.sentences[0].tokens[0].tag == B("person")


def test_parse_two_tokens():
    d = parse_conll("visit\tO\nCordoba\tB-location\n\n")
    toks = d.sentences[0].tokens
    assert [t.text for t in toks] == ["visit", "Cordoba"]
    assert toks[1].tag == B("location")


def test_parse_trailing_block_without_blank_line():
    d = parse_conll("a\tO\n\nb\tB-group")
    assert len(d) == 2 and d.sentences[1].id == 1


def test_parse_missing_tag_reports_line():
    with pytest.raises(CorpusFormatError, match="line 1"):
        parse_conll("Obama\n\n")


def test_parse_unknown_category():
    with pytest.raises(CorpusFormatError, match="weapon"):
        parse_conll("x\tO\nglock\tB-weapon\n")


def test_parse_empty():
    with pytest.raises(CorpusFormatError, match="no sentences"):
        parse_conll("\n\n")


def test_parse_tokens_only():
    d = parse_tokens("I\nvisited\nMadrid\n\nhi\tB-person\n")
    assert [len(s) for s in d] == [3, 1]
    assert all(t.tag == O for s in d for t in s.tokens)


@pytest.mark.parametrize("raw,norm", [("Cordoba", "cordoba"), ("U.S.A!", "usa"), ("$$$", ""),
                                      ("AK-47", "ak47"), ("Córdoba", "córdoba")])
def test_normalize_token(raw, norm):
    assert normalize_token(raw) == norm


@given(st.text(min_size=1))
def test_normalized_is_lower_alnum(text):
    n = normalize_token(text)
    assert all(c.isalnum() for c in n)
    assert n == normalize_token(n)


@pytest.mark.parametrize("tags,expected", [
    ([B("person"), I("person"), O], [(0, 2, "person")]),
    ([O, I("location")], [(1, 2, "location")]),
    ([B("person"), B("person")], [(0, 1, "person"), (1, 2, "person")]),
    ([B("person"), I("location")], [(0, 1, "person"), (1, 2, "location")]),
    ([I("group"), I("group"), O, B("group")], [(0, 2, "group"), (3, 4, "group")]),
])
def test_extract_spans(tags, expected):
    words = [f"w{i}" for i in range(len(tags))]
    spans = extract_spans(tags, 7, words)
    assert [(s.start, s.end, s.category) for s in spans] == expected
    assert all(s.sentence_id == 7 for s in spans)
    assert all(s.surface == " ".join(words[s.start:s.end]) for s in spans)


tag_strategy = st.one_of(
    st.just(O),
    st.builds(BioTag, st.sampled_from(["B", "I"]), st.sampled_from(["person", "location", "group"])),
)


@given(st.lists(tag_strategy, max_size=30))
def test_spans_sorted_and_disjoint(tags):
    spans = extract_spans(tags, 0, ["w"] * len(tags))
    for s in spans:
        assert 0 <= s.start < s.end <= len(tags)
    for a, b in zip(spans, spans[1:]):
        assert a.end <= b.start
    # every entity token is covered exactly once
    covered = sum(s.end - s.start for s in spans)
    assert covered == sum(t.kind != "O" for t in tags)


words = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")),
                min_size=1, max_size=8).filter(lambda w: w.strip() == w and "\t" not in w)


@given(st.lists(st.lists(st.tuples(words, tag_strategy), min_size=1, max_size=6), min_size=1, max_size=5))
def test_round_trip(sentences):
    d = Dataset.from_sentences([[Token(w, t) for w, t in s] for s in sentences])
    assert parse_conll(format_conll(d)) == d


def _sized(n):
    return Dataset.from_sentences([[Token(f"s{i}", O)] for i in range(n)])


def _check_partition(d, a, b, frac):
    texts = [s.tokens[0].text for s in d]
    ta = [s.tokens[0].text for s in a]
    tb = [s.tokens[0].text for s in b]
    assert not set(ta) & set(tb)
    assert sorted(ta + tb) == sorted(texts)
    assert len(ta) == max(1, int(len(d) * frac))
    # original relative order kept
    assert ta == [t for t in texts if t in set(ta)]
    assert tb == [t for t in texts if t in set(tb)]


def test_split_ten():
    d = _sized(10)
    a, b = split_dataset(d, 0.8, 7)
    assert (len(a), len(b)) == (8, 2)
    _check_partition(d, a, b, 0.8)


def test_split_five_and_determinism():
    d = _sized(5)
    a, b = split_dataset(d, 0.8, 1)
    assert (len(a), len(b)) == (4, 1)
    assert split_dataset(d, 0.8, 1) == (a, b)


@given(n=st.integers(2, 60), frac=st.floats(0.01, 0.99), seed=st.integers(0, 2**31))
def test_split_properties(n, frac, seed):
    d = _sized(n)
    a, b = split_dataset(d, frac, seed)
    _check_partition(d, a, b, frac)


def test_split_errors():
    with pytest.raises(ValueError):
        split_dataset(_sized(1), 0.8, 0)
    with pytest.raises(ValueError):
        split_dataset(_sized(4), 1.0, 0)


def test_tagset_file(tmp_path):
    assert load_tagset() == DEFAULT_CATEGORIES
    p = tmp_path / "tags.txt"
    p.write_text("weapon\ndrug\n\n")
    cats = load_tagset(p)
    assert cats == ("weapon", "drug")
    d = parse_conll("glock\tB-weapon\n", cats)
    assert d.tagset == cats


def test_token_invariants():
    with pytest.raises(ValueError):
        Token("")
    assert Token("U.S.A!").normalized == "usa"
