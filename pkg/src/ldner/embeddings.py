"""
Pretrained word vectors and exact cosine nearest-neighbour search.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmbeddingFormatError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Neighbor:
    token: str
    similarity: float


class EmbeddingStore:
    """Read-only token -> vector table with a row-normalized copy for cosine search.

    Parameters
    ----------
    tokens : sequence of str
        Row labels, unique.
    vectors : array of shape (len(tokens), dim)
    duplicates : int
        How many duplicate rows the loader dropped (informational).
    """

    def __init__(self, tokens: Sequence[str], vectors, duplicates: int = 0):
        vectors = np.array(vectors, dtype=np.float64, ndmin=2)
        if vectors.shape[0] != len(tokens):
            raise EmbeddingFormatError("token count and vector rows differ")
        if vectors.shape[0] == 0 or vectors.shape[1] == 0:
            raise EmbeddingFormatError("empty embedding table")
        self.tokens = tuple(tokens)
        self.vocab = {t: i for i, t in enumerate(self.tokens)}
        if len(self.vocab) != len(self.tokens):
            raise EmbeddingFormatError("duplicate tokens in embedding table")
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        unit = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)
        vectors.flags.writeable = False
        unit.flags.writeable = False
        self.vectors = vectors
        self.unit_vectors = unit
        self.duplicates = duplicates
        self._checksum = None

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Sequence[float]]) -> "EmbeddingStore":
        return cls(list(mapping), [mapping[t] for t in mapping])

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.vocab

    @property
    def checksum(self) -> int:
        """64-bit content hash over tokens and vector values.

        It depends on content only, so a file with or without the header
        line hashes the same.
        """
        if self._checksum is None:
            h = hashlib.blake2b(digest_size=8)
            h.update(str(self.vectors.shape).encode())
            for tok in self.tokens:
                h.update(tok.encode("utf-8") + b"\0")
            h.update(np.ascontiguousarray(self.vectors, dtype="<f8").tobytes())
            self._checksum = int.from_bytes(h.digest(), "little")
        return self._checksum


def parse_embeddings(lines: Iterable[str]) -> EmbeddingStore:
    """Build a store from text lines ``token v1 ... vD``; see :func:`load_embeddings`."""
    tokens, rows = [], []
    seen = set()
    dim = None
    duplicates = 0
    for lineno, line in enumerate(lines, start=1):
        fields = line.rstrip("\r\n").split(" ")
        if not line.strip():
            continue
        if lineno == 1 and len(fields) == 2 and all(f.isdigit() for f in fields):
            continue
        if len(fields) < 2:
            raise EmbeddingFormatError(f"line {lineno}: no vector components")
        token, comps = fields[0], fields[1:]
        if dim is None:
            dim = len(comps)
        elif len(comps) != dim:
            raise EmbeddingFormatError(
                f"line {lineno}: dimension {len(comps)} differs from {dim}"
            )
        try:
            vec = [float(c) for c in comps]
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric component") from None
        if token in seen:
            duplicates += 1
            continue
        seen.add(token)
        tokens.append(token)
        rows.append(vec)
    if not tokens:
        raise EmbeddingFormatError("embedding file has no vectors")
    if duplicates:
        log.warning("ignored %d duplicate embedding rows", duplicates)
    return EmbeddingStore(tokens, rows, duplicates)


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load a word2vec/GloVe-style text file.

    An optional leading ``|V| D`` header line is skipped. When a token
    repeats, the first row wins.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_embeddings(fh)


def lookup(store: EmbeddingStore, token: str):
    """Return the stored vector for ``token`` (exact, case-sensitive match) or None."""
    row = store.vocab.get(token)
    return None if row is None else store.vectors[row]


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class CandidateSet:
    """A fixed candidate subset of a store, pre-sorted so ties resolve lexicographically."""

    def __init__(self, store: EmbeddingStore, candidates: Iterable[str]):
        self.tokens = tuple(sorted(set(candidates)))
        rows = []
        for tok in self.tokens:
            row = store.vocab.get(tok)
            if row is None:
                raise KeyError(f"candidate {tok!r} is not in the embedding vocabulary")
            rows.append(row)
        self.rows = np.array(rows, dtype=np.intp)
        self.unit = store.unit_vectors[self.rows]

    def rank(self, query_vector, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Positions into ``self.tokens`` of the top ``k`` and their similarities."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query_vector, dtype=np.float64)
        norm = np.linalg.norm(q)
        if norm > 0:
            sims = self.unit @ (q / norm)
        else:
            sims = np.zeros(len(self.tokens))
        order = np.argsort(-sims, kind="stable")[:k]
        return order, sims[order]


def knn(store: EmbeddingStore, candidates, query_vector, k: int) -> list[Neighbor]:
    """Exact k nearest candidates to ``query_vector`` by cosine similarity.

    Results are sorted by similarity descending; equal similarities are
    ordered by token. ``candidates`` may be any iterable of tokens or a
    prebuilt :class:`CandidateSet`.
    """
    if not isinstance(candidates, CandidateSet):
        candidates = CandidateSet(store, candidates)
    if len(candidates.tokens) == 0:
        return []
    order, sims = candidates.rank(query_vector, k)
    return [Neighbor(candidates.tokens[i], float(s)) for i, s in zip(order, sims)]
