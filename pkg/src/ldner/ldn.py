"""
Local Distance Neighbor (LDN) feature.

Building the feature has two phases. ``build_index`` preprocesses every
training token, keeps those that have an embedding, and records how often
each surviving form was tagged with each category. ``ldn_vector`` then
takes a query token, finds its ``x`` most cosine-similar indexed forms
and turns their tag histograms into a distribution over categories: the
query's likely category.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Dataset, Token, normalize_token
from .embeddings import CandidateSet, EmbeddingStore, Neighbor, lookup
from .errors import ConfigError, EmptyIndexError, IndexFormatError

OUTSIDE_SLOT = "O"

_MAGIC = b"LDNX"
_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version, crc32, payload length


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """One word per line; ``None`` reads the bundled English list."""
    if path is None:
        text = resources.files("ldner.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w for w in (line.strip() for line in text.splitlines()) if w)


@dataclass(frozen=True)
class LdnConfig:
    x: int = 5
    stopwords: frozenset = field(default_factory=load_stopwords)
    include_o_category: bool = True
    similarity_floor: float = 0.0

    def __post_init__(self):
        if self.x < 1:
            raise ConfigError("LDN neighbour count x must be >= 1")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "stopwords": sorted(self.stopwords),
            "include_o_category": self.include_o_category,
            "similarity_floor": self.similarity_floor,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LdnConfig":
        return cls(
            x=int(d["x"]),
            stopwords=frozenset(d["stopwords"]),
            include_o_category=bool(d["include_o_category"]),
            similarity_floor=float(d["similarity_floor"]),
        )


@dataclass(frozen=True)
class LdnFeature:
    distribution: np.ndarray
    support: bool


class LdnIndex:
    """Normalized training form -> tag counts over ``category_order``."""

    def __init__(self, entries: Mapping[str, Sequence[int]], category_order: Sequence[str]):
        self.category_order = tuple(category_order)
        self.entries = {}
        for tok in sorted(entries):
            counts = np.asarray(entries[tok], dtype=np.int64)
            if counts.shape != (len(self.category_order),):
                raise ValueError(f"histogram for {tok!r} has wrong length")
            if (counts < 0).any() or counts.sum() <= 0:
                raise ValueError(f"histogram for {tok!r} must be non-negative with positive total")
            counts.flags.writeable = False
            self.entries[tok] = counts
        self._candidates = {}

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, LdnIndex):
            return NotImplemented
        return (
            self.category_order == other.category_order
            and self.entries.keys() == other.entries.keys()
            and all(np.array_equal(v, other.entries[k]) for k, v in self.entries.items())
        )

    __hash__ = None

    def histogram(self, token: str) -> dict[str, int]:
        return dict(zip(self.category_order, (int(c) for c in self.entries[token])))

    def _prepared(self, store: EmbeddingStore):
        # cached per store: candidate rows and per-neighbour tag distributions
        key = id(store)
        cached = self._candidates.get(key)
        if cached is None or cached[0] is not store:
            cands = CandidateSet(store, self.entries)
            counts = np.stack([self.entries[t] for t in cands.tokens]).astype(np.float64)
            dists = counts / counts.sum(axis=1, keepdims=True)
            cached = (store, cands, dists)
            self._candidates[key] = cached
        return cached[1], cached[2]


def category_order(categories: Sequence[str], cfg: LdnConfig) -> tuple[str, ...]:
    cats = tuple(categories)
    return cats + (OUTSIDE_SLOT,) if cfg.include_o_category else cats


def _indexable(form: str, store: EmbeddingStore, cfg: LdnConfig) -> bool:
    return bool(form) and form not in cfg.stopwords and form in store.vocab


def build_index(train: Dataset, store: EmbeddingStore, cfg: LdnConfig) -> LdnIndex:
    """Count, for every usable training form, how often it carries each category.

    ``B-X`` and ``I-X`` both count towards ``X``. ``O`` occurrences count
    towards the O slot, or are skipped when ``cfg.include_o_category`` is off.
    """
    if len(train) == 0:
        raise EmptyIndexError("training set is empty")
    order = category_order(train.tagset, cfg)
    slot = {c: i for i, c in enumerate(order)}
    counts: dict[str, np.ndarray] = {}
    for sent in train:
        for tok in sent.tokens:
            form = tok.normalized
            if not _indexable(form, store, cfg):
                continue
            cat = OUTSIDE_SLOT if tok.tag.kind == "O" else tok.tag.category
            if cat not in slot:
                continue
            if form not in counts:
                counts[form] = np.zeros(len(order), dtype=np.int64)
            counts[form][slot[cat]] += 1
    if not counts:
        raise EmptyIndexError(
            "LDN index is empty: no training token was found in the embedding vocabulary"
        )
    return LdnIndex(counts, order)


def neighbors(index: LdnIndex, store: EmbeddingStore, cfg: LdnConfig, query: Token | str,
              k: int | None = None) -> list[Neighbor]:
    """The indexed forms nearest to ``query``; empty when the query has no usable form."""
    form = query.normalized if isinstance(query, Token) else normalize_token(query)
    if not _indexable(form, store, cfg):
        return []
    cands, _ = index._prepared(store)
    order, sims = cands.rank(lookup(store, form), k or cfg.x)
    return [Neighbor(cands.tokens[i], float(s)) for i, s in zip(order, sims)]


def ldn_vector(index: LdnIndex, store: EmbeddingStore, cfg: LdnConfig, query: Token | str) -> LdnFeature:
    """Similarity-weighted mix of the neighbours' tag distributions.

    Each of the ``cfg.x`` nearest indexed forms contributes its own
    normalized histogram, weighted by its similarity clamped below at
    ``cfg.similarity_floor`` and at zero.
    """
    if len(index) == 0:
        raise EmptyIndexError("LDN index is empty")
    width = len(index.category_order)
    form = query.normalized if isinstance(query, Token) else normalize_token(query)
    if not _indexable(form, store, cfg):
        return LdnFeature(np.zeros(width), False)
    cands, dists = index._prepared(store)
    order, sims = cands.rank(lookup(store, form), cfg.x)
    weights = np.maximum(sims, max(cfg.similarity_floor, 0.0))
    total = weights.sum()
    if total <= 0:
        return LdnFeature(np.zeros(width), False)
    mix = weights @ dists[order]
    return LdnFeature(mix / mix.sum(), True)


def persist_index(index: LdnIndex) -> bytes:
    payload = json.dumps(
        {
            "category_order": list(index.category_order),
            "entries": {t: [int(c) for c in v] for t, v in index.entries.items()},
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    ).encode("utf-8")
    return _HEADER.pack(_MAGIC, _VERSION, zlib.crc32(payload), len(payload)) + payload


def restore_index(data: bytes) -> LdnIndex:
    if len(data) < _HEADER.size:
        raise IndexFormatError("LDN index payload is truncated")
    magic, version, crc, length = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise IndexFormatError("not an LDN index payload")
    if version != _VERSION:
        raise IndexFormatError(f"unsupported LDN index version {version}")
    payload = data[_HEADER.size:]
    if len(payload) != length:
        raise IndexFormatError("LDN index payload is truncated")
    if zlib.crc32(payload) != crc:
        raise IndexFormatError("LDN index payload is corrupted (checksum mismatch)")
    try:
        obj = json.loads(payload.decode("utf-8"))
        return LdnIndex(obj["entries"], obj["category_order"])
    except (ValueError, KeyError, TypeError) as exc:
        raise IndexFormatError(f"malformed LDN index payload: {exc}") from None
