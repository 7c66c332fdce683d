"""
Reading, writing and splitting BIO-tagged corpora in the W-NUT layout.

A corpus file holds one ``token<TAB>tag`` pair per line with a blank line
between sentences. Tags are ``O``, ``B-<category>`` or ``I-<category>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError

DEFAULT_CATEGORIES: tuple[str, ...] = (
    "corporation",
    "creative-work",
    "group",
    "location",
    "person",
    "product",
)


def load_tagset(path: str | Path | None = None) -> tuple[str, ...]:
    """Read a tag-set file (one category per line); ``None`` gives the default six."""
    if path is None:
        text = resources.files("ldner.data").joinpath("tagset.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    cats = []
    for line in text.splitlines():
        name = line.strip()
        if name and name not in cats:
            cats.append(name)
    if not cats:
        raise CorpusFormatError(f"tag-set file {path} lists no categories")
    return tuple(cats)


@dataclass(frozen=True)
class BioTag:
    kind: str
    category: str | None = None

    def __post_init__(self):
        if self.kind not in ("O", "B", "I"):
            raise ValueError(f"bad BIO kind {self.kind!r}")
        if (self.kind == "O") != (self.category is None):
            raise ValueError("category must be present iff kind is B or I")

    def __str__(self):
        return "O" if self.kind == "O" else f"{self.kind}-{self.category}"

    @classmethod
    def parse(cls, text: str, tagset: Iterable[str] | None = None) -> "BioTag":
        if text == "O":
            return OUTSIDE
        kind, sep, category = text.partition("-")
        if not sep or kind not in ("B", "I") or not category:
            raise CorpusFormatError(f"malformed tag {text!r}")
        if tagset is not None and category not in tagset:
            raise CorpusFormatError(f"unknown category {category!r}")
        return cls(kind, category)


OUTSIDE = BioTag("O")


def normalize_token(text: str) -> str:
    """Lowercase ``text`` and drop every character that is not a letter or digit.

    >>> normalize_token("U.S.A!")
    'usa'
    """
    return "".join(ch for ch in text.lower() if ch.isalnum())


@dataclass(frozen=True)
class Token:
    text: str
    tag: BioTag = OUTSIDE
    normalized: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")
        object.__setattr__(self, "normalized", normalize_token(self.text))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    id: int = 0

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")

    def __len__(self):
        return len(self.tokens)

    @property
    def tags(self) -> list[BioTag]:
        return [t.tag for t in self.tokens]

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass(frozen=True)
class Dataset:
    sentences: tuple[Sentence, ...]
    tagset: tuple[str, ...] = DEFAULT_CATEGORIES

    def __post_init__(self):
        for i, s in enumerate(self.sentences):
            if s.id != i:
                raise ValueError(f"sentence ids must be dense from 0; got {s.id} at {i}")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sequence[Token]], tagset=DEFAULT_CATEGORIES):
        return cls(
            tuple(Sentence(tuple(toks), i) for i, toks in enumerate(sentences)),
            tuple(tagset),
        )


@dataclass(frozen=True)
class EntitySpan:
    sentence_id: int
    start: int
    end: int
    category: str
    surface: str


def _blocks(text: str):
    """Yield ``(lineno, [(lineno, line), ...])`` for blank-line-separated blocks."""
    block = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip() == "":
            if block:
                yield block
                block = []
        else:
            block.append((lineno, line))
    if block:
        yield block


def parse_conll(text: str, tagset: Sequence[str] = DEFAULT_CATEGORIES) -> Dataset:
    """Parse corpus text into a :class:`Dataset`.

    Raises
    ------
    CorpusFormatError
        On a line without exactly two tab-separated fields, an unknown
        category, or input that contains no sentences.
    """
    cats = frozenset(tagset)
    sentences = []
    for block in _blocks(text):
        toks = []
        for lineno, line in block:
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 2 or not fields[0]:
                raise CorpusFormatError(
                    f"line {lineno}: expected 'token<TAB>tag', got {len(fields)} field(s)"
                )
            try:
                tag = BioTag.parse(fields[1].strip(), cats)
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from None
            toks.append(Token(fields[0], tag))
        sentences.append(toks)
    if not sentences:
        raise CorpusFormatError("no sentences")
    return Dataset.from_sentences(sentences, tagset)


def parse_tokens(text: str, tagset: Sequence[str] = DEFAULT_CATEGORIES) -> Dataset:
    """Read tokens-only input (or corpus input whose tags are ignored)."""
    sentences = []
    for block in _blocks(text):
        sentences.append([Token(line.split("\t")[0]) for _, line in block])
    if not sentences:
        raise CorpusFormatError("no sentences")
    return Dataset.from_sentences(sentences, tagset)


def format_conll(dataset: Dataset | Iterable[Sentence], tags=None) -> str:
    """Render sentences in corpus layout, optionally replacing gold tags with ``tags``."""
    out = []
    for i, sent in enumerate(dataset):
        sent_tags = sent.tags if tags is None else tags[i]
        for tok, tag in zip(sent.tokens, sent_tags):
            out.append(f"{tok.text}\t{tag}\n")
        out.append("\n")
    return "".join(out)


def read_conll(path: str | Path, tagset: Sequence[str] = DEFAULT_CATEGORIES) -> Dataset:
    return parse_conll(Path(path).read_text(encoding="utf-8"), tagset)


def extract_spans(tags: Sequence[BioTag], sentence_id: int, tokens: Sequence) -> list[EntitySpan]:
    """Decode BIO tags into maximal typed spans.

    An ``I-X`` that does not continue an open ``X`` span starts a new one,
    as conlleval does.
    """
    if len(tags) != len(tokens):
        raise ValueError("tags and tokens differ in length")
    words = [t.text if isinstance(t, Token) else str(t) for t in tokens]
    spans = []
    start, cat = None, None

    def close(end):
        if start is not None:
            spans.append(EntitySpan(sentence_id, start, end, cat, " ".join(words[start:end])))

    for i, tag in enumerate(tags):
        if tag.kind == "O":
            close(i)
            start, cat = None, None
        elif tag.kind == "B" or start is None or tag.category != cat:
            close(i)
            start, cat = i, tag.category
    close(len(tags))
    return spans


def split_dataset(d: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded sentence-level split; each part keeps the original sentence order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(d)
    if n < 2:
        raise ValueError("need at least 2 sentences to split")
    n_train = max(1, math.floor(n * train_fraction))
    perm = np.random.default_rng(seed).permutation(n)
    train_ids = sorted(int(i) for i in perm[:n_train])
    test_ids = sorted(int(i) for i in perm[n_train:])

    def subset(ids):
        return Dataset.from_sentences((d.sentences[i].tokens for i in ids), d.tagset)

    return subset(train_ids), subset(test_ids)
