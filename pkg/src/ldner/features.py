"""
Per-token feature vectors.

Row layout for a token, blocks in this order when enabled::

    [ word vector (D) | LDN distribution (K) + support flag (1) | orthographic (O) ]

where K is the length of the LDN category order and
O = 12 + prefix_buckets + suffix_buckets. The orthographic block is::

    capitalization one-hot (5): all-lower, init-cap, all-caps, mixed, no-letters
    contains-digit (1), contains-punctuation (1)
    length one-hot (5): 1, 2-3, 4-6, 7-10, >10
    hashed prefixes of length 1-3 (multi-hot, prefix_buckets)
    hashed suffixes of length 1-3 (multi-hot, suffix_buckets)
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .corpus import Sentence, Token
from .embeddings import EmbeddingStore, lookup
from .errors import ConfigError
from .ldn import LdnConfig, LdnIndex, ldn_vector

N_SHAPE = 12
CAP_CLASSES = ("all-lower", "init-cap", "all-caps", "mixed", "no-letters")
LENGTH_BUCKETS = ((1, 1), (2, 3), (4, 6), (7, 10), (11, None))


@dataclass(frozen=True)
class FeatureConfig:
    use_word: bool = True
    use_ldn: bool = True
    use_ortho: bool = True
    prefix_buckets: int = 64
    suffix_buckets: int = 64
    hash_seed: int = 0

    def __post_init__(self):
        if not (self.use_word or self.use_ldn or self.use_ortho):
            raise ConfigError("at least one feature block must be enabled")
        if self.prefix_buckets < 1 or self.suffix_buckets < 1:
            raise ConfigError("affix bucket counts must be >= 1")

    @property
    def ortho_dim(self) -> int:
        return N_SHAPE + self.prefix_buckets + self.suffix_buckets

    def to_dict(self):
        return asdict(self)


def feature_dim(fcfg: FeatureConfig, embedding_dim: int, n_ldn_slots: int) -> int:
    return (
        embedding_dim * fcfg.use_word
        + (n_ldn_slots + 1) * fcfg.use_ldn
        + fcfg.ortho_dim * fcfg.use_ortho
    )


@lru_cache(maxsize=1 << 16)
def affix_bucket(affix: str, seed: int, buckets: int) -> int:
    """Stable 64-bit BLAKE2b hash of ``affix`` keyed by ``seed``, reduced mod ``buckets``."""
    h = hashlib.blake2b(affix.encode("utf-8"), digest_size=8,
                        key=seed.to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little") % buckets


def capitalization_class(text: str) -> str:
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return "no-letters"
    if all(c.islower() for c in letters):
        return "all-lower"
    if len(letters) > 1 and all(c.isupper() for c in letters):
        return "all-caps"
    if letters[0].isupper() and text[0] == letters[0] and all(c.islower() for c in letters[1:]):
        return "init-cap"
    return "mixed"


def orthographic_features(token: Token | str, cfg: FeatureConfig) -> np.ndarray:
    text = token.text if isinstance(token, Token) else token
    out = np.zeros(cfg.ortho_dim)
    out[CAP_CLASSES.index(capitalization_class(text))] = 1.0
    out[5] = any(c.isdigit() for c in text)
    out[6] = any(not c.isalnum() for c in text)
    n = len(text)
    for i, (lo, hi) in enumerate(LENGTH_BUCKETS):
        if n >= lo and (hi is None or n <= hi):
            out[7 + i] = 1.0
    low = text.lower()
    for size in range(1, min(3, len(low)) + 1):
        out[N_SHAPE + affix_bucket("p:" + low[:size], cfg.hash_seed, cfg.prefix_buckets)] = 1.0
        out[N_SHAPE + cfg.prefix_buckets
            + affix_bucket("s:" + low[-size:], cfg.hash_seed, cfg.suffix_buckets)] = 1.0
    return out


def featurize_sentence(s: Sentence, store: EmbeddingStore, index: LdnIndex | None,
                       fcfg: FeatureConfig, lcfg: LdnConfig) -> np.ndarray:
    """Feature matrix of shape ``(len(s), F)``; see the module docstring for the layout."""
    if fcfg.use_ldn and index is None:
        raise ConfigError("LDN block enabled but no LDN index given")
    n_slots = len(index.category_order) if index is not None else 0
    dim = feature_dim(fcfg, store.dim, n_slots)
    out = np.zeros((len(s), dim))
    for t, tok in enumerate(s.tokens):
        col = 0
        if fcfg.use_word:
            vec = lookup(store, tok.normalized)
            if vec is not None:
                out[t, :store.dim] = vec
            col += store.dim
        if fcfg.use_ldn:
            feat = ldn_vector(index, store, lcfg, tok)
            out[t, col:col + n_slots] = feat.distribution
            out[t, col + n_slots] = float(feat.support)
            col += n_slots + 1
        if fcfg.use_ortho:
            out[t, col:col + fcfg.ortho_dim] = orthographic_features(tok, fcfg)
            col += fcfg.ortho_dim
        if col != dim:
            raise ConfigError(f"feature layout filled {col} columns, expected {dim}")
    return out
