"""
Training, prediction and model files.

Model file layout (all integers little-endian)::

    magic    8 bytes  b"LDNERMDL"
    version  uint32
    sections repeated: name (4 ASCII bytes), length (uint64), payload

Sections, in order: ``HEAD`` (UTF-8 JSON with tag order, configs,
embedding checksum/dim, seed, loss history), ``LIDX`` (persisted LDN
index) and ``CRFP`` (uint32 JSON-header length, JSON header listing
parameter names and shapes, then the float64 values back to back).
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import BioTag, Dataset, Sentence, load_tagset
from .crf import (PARAM_NAMES, CrfModel, constrained_transitions, emissions, nll_and_gradient,
                  tag_order, viterbi)
from .embeddings import EmbeddingStore
from .errors import (ChecksumMismatchError, ConfigError, DivergenceError, ModelFormatError,
                     NotAModelFileError, TruncatedModelError, UnsupportedVersionError)
from .features import FeatureConfig, featurize_sentence
from .ldn import LdnConfig, LdnIndex, build_index, load_stopwords, persist_index, restore_index

log = logging.getLogger(__name__)

MAGIC = b"LDNERMDL"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 226
    learning_rate: float = 0.05
    batch_size: int = 8
    l2: float = 1e-4
    seed: int = 0
    shuffle: bool = True
    hidden_dim: int = 32
    features: FeatureConfig = field(default_factory=FeatureConfig)
    ldn: LdnConfig = field(default_factory=LdnConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.hidden_dim < 0:
            raise ConfigError(f"hidden_dim must be >= 0, got {self.hidden_dim}")


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_TRAIN_KEYS = {"epochs": int, "learning_rate": float, "batch_size": int, "l2": float,
               "seed": int, "shuffle": _parse_bool, "hidden_dim": int}
_FEATURE_KEYS = {"use_word": _parse_bool, "use_ldn": _parse_bool, "use_ortho": _parse_bool,
                 "prefix_buckets": int, "suffix_buckets": int, "hash_seed": int}
_LDN_KEYS = {"x": int, "include_o_category": _parse_bool, "similarity_floor": float}


def parse_config(text: str, base_dir: str | Path = ".") -> tuple[TrainConfig, tuple[str, ...]]:
    """Parse a flat ``key = value`` config; returns the config and the tag set.

    Recognised keys are the :class:`TrainConfig`, :class:`FeatureConfig` and
    :class:`LdnConfig` fields plus ``stopwords_file`` and ``tagset_file``
    (paths relative to ``base_dir``). Blank lines and ``#`` comments are skipped.
    """
    train, feats, ldn = {}, {}, {}
    stop_path = tag_path = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        try:
            if key in _TRAIN_KEYS:
                train[key] = _TRAIN_KEYS[key](value)
            elif key in _FEATURE_KEYS:
                feats[key] = _FEATURE_KEYS[key](value)
            elif key in _LDN_KEYS:
                ldn[key] = _LDN_KEYS[key](value)
            elif key == "stopwords_file":
                stop_path = Path(base_dir) / value
            elif key == "tagset_file":
                tag_path = Path(base_dir) / value
            else:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"config line {lineno}: bad value for {key}: {exc}") from None
    stopwords = load_stopwords(stop_path)
    cfg = TrainConfig(**train, features=FeatureConfig(**feats),
                      ldn=LdnConfig(stopwords=stopwords, **ldn))
    return cfg, load_tagset(tag_path)


def read_config(path: str | Path):
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


@dataclass
class ModelArtifact:
    categories: tuple[str, ...]
    features: FeatureConfig
    ldn_config: LdnConfig
    index: LdnIndex
    crf: CrfModel
    embedding_checksum: int
    embedding_dim: int
    seed: int
    losses: list[float] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    @property
    def tags(self) -> list[BioTag]:
        return tag_order(self.categories)


def _objective(model, batch, l2, masks):
    loss = 0.0
    grads = {k: np.zeros_like(v) for k, v in model.params().items()}
    for feats, gold in batch:
        l, g = nll_and_gradient(model, feats, gold)
        loss += l
        for k in grads:
            grads[k] += g[k]
    scale = 1.0 / len(batch)
    for k, p in model.params().items():
        grads[k] *= scale
        if l2:
            grads[k] += l2 * np.where(masks[k], p, 0.0)
    return loss * scale, grads


def train(cfg: TrainConfig, train_set: Dataset, store: EmbeddingStore,
          on_epoch: Callable[[int, float], None] | None = None) -> ModelArtifact:
    """Build the LDN index, featurize ``train_set`` and fit the CRF with mini-batch SGD.

    The objective per batch is the mean sentence NLL plus ``l2 * ||theta||^2 / 2``
    (pinned transition entries excluded). The per-epoch loss recorded in
    ``ModelArtifact.losses`` is the mean NLL over the epoch's sentences,
    measured before each batch's update.
    """
    if len(train_set) == 0:
        raise ConfigError("training set is empty")
    index = build_index(train_set, store, cfg.ldn)
    tags = tag_order(train_set.tagset)
    tag_id = {t: i for i, t in enumerate(tags)}
    examples = []
    for sent in train_set:
        feats = featurize_sentence(sent, store, index, cfg.features, cfg.ldn)
        examples.append((feats, np.array([tag_id[t] for t in sent.tags], dtype=np.intp)))
    feature_dim = examples[0][0].shape[1]

    rng = np.random.default_rng(cfg.seed)
    allowed_t, allowed_s = constrained_transitions(tags)
    model = CrfModel.initialize(len(tags), feature_dim, cfg.hidden_dim, rng,
                                allowed_transitions=allowed_t, allowed_start=allowed_s)
    masks = model.learnable_masks()

    losses = []
    n = len(examples)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = [examples[i] for i in order[lo:lo + cfg.batch_size]]
            try:
                loss, grads = _objective(model, batch, cfg.l2, masks)
            except DivergenceError as exc:
                raise DivergenceError(f"training diverged in epoch {epoch}: {exc}") from None
            total += loss * len(batch)
            for k, p in model.params().items():
                p -= cfg.learning_rate * np.where(masks[k], grads[k], 0.0)
        mean = total / n
        if not np.isfinite(mean):
            raise DivergenceError(f"training diverged in epoch {epoch}: non-finite loss")
        losses.append(mean)
        if on_epoch is not None:
            on_epoch(epoch, mean)
        log.debug("epoch %d loss %.6f", epoch, mean)

    return ModelArtifact(
        categories=tuple(train_set.tagset),
        features=cfg.features,
        ldn_config=cfg.ldn,
        index=index,
        crf=model,
        embedding_checksum=store.checksum,
        embedding_dim=store.dim,
        seed=cfg.seed,
        losses=losses,
    )


def check_embeddings(m: ModelArtifact, store: EmbeddingStore, force: bool = False):
    if store.dim != m.embedding_dim:
        raise ChecksumMismatchError(
            f"embedding dimension {store.dim} differs from the model's {m.embedding_dim}")
    if store.checksum != m.embedding_checksum and not force:
        raise ChecksumMismatchError(
            f"embedding checksum {store.checksum:016x} differs from the model's "
            f"{m.embedding_checksum:016x}; pass force to override")


def predict(m: ModelArtifact, store: EmbeddingStore, s: Sentence, force: bool = False) -> list[BioTag]:
    """Tag one sentence with constrained Viterbi decoding."""
    check_embeddings(m, store, force)
    feats = featurize_sentence(s, store, m.index, m.features, m.ldn_config)
    path, _ = viterbi(emissions(m.crf, feats), m.crf)
    tags = m.tags
    return [tags[i] for i in path]


def predict_dataset(m: ModelArtifact, store: EmbeddingStore, d: Dataset | Sequence[Sentence],
                    force: bool = False) -> list[list[BioTag]]:
    check_embeddings(m, store, force)
    return [predict(m, store, s, force=True) for s in d]


# -- model files ---------------------------------------------------------------

_SECTION = struct.Struct("<4sQ")


def _pack_params(crf: CrfModel) -> bytes:
    arrays = dict(crf.params())
    arrays["allowed_transitions"] = crf.allowed_transitions.astype(np.float64)
    arrays["allowed_start"] = crf.allowed_start.astype(np.float64)
    header = json.dumps([[k, list(v.shape)] for k, v in arrays.items()]).encode()
    body = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in arrays.values())
    return struct.pack("<I", len(header)) + header + body


def _unpack_params(data: bytes) -> CrfModel:
    (hlen,) = struct.unpack_from("<I", data)
    spec = json.loads(data[4:4 + hlen])
    pos = 4 + hlen
    arrays = {}
    for name, shape in spec:
        count = int(np.prod(shape)) if shape else 1
        chunk = data[pos:pos + 8 * count]
        if len(chunk) != 8 * count:
            raise TruncatedModelError(f"parameter {name} is truncated")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        pos += 8 * count
    masks = {k: arrays.pop(k).astype(bool) for k in ("allowed_transitions", "allowed_start")}
    if set(arrays) != set(PARAM_NAMES):
        raise ModelFormatError("CRF parameter section has unexpected entries")
    return CrfModel(**arrays, **masks)


def dumps_model(m: ModelArtifact) -> bytes:
    head = {
        "categories": list(m.categories),
        "tag_order": [str(t) for t in m.tags],
        "features": m.features.to_dict(),
        "ldn": m.ldn_config.to_dict(),
        "embedding_checksum": f"{m.embedding_checksum:016x}",
        "embedding_dim": m.embedding_dim,
        "seed": m.seed,
        "losses": m.losses,
    }
    sections = [
        (b"HEAD", json.dumps(head, sort_keys=True, ensure_ascii=False).encode("utf-8")),
        (b"LIDX", persist_index(m.index)),
        (b"CRFP", _pack_params(m.crf)),
    ]
    out = [MAGIC, struct.pack("<I", m.format_version)]
    for name, payload in sections:
        out += [_SECTION.pack(name, len(payload)), payload]
    return b"".join(out)


def loads_model(data: bytes) -> ModelArtifact:
    if data[:len(MAGIC)] != MAGIC:
        raise NotAModelFileError("not a model file (bad magic bytes)")
    pos = len(MAGIC)
    if len(data) < pos + 4:
        raise TruncatedModelError("model file is truncated")
    (version,) = struct.unpack_from("<I", data, pos)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version} (this build reads {FORMAT_VERSION})")
    pos += 4
    sections = {}
    while pos < len(data):
        if len(data) - pos < _SECTION.size:
            raise TruncatedModelError("truncated section header")
        name, length = _SECTION.unpack_from(data, pos)
        pos += _SECTION.size
        payload = data[pos:pos + length]
        if len(payload) != length:
            raise TruncatedModelError(f"truncated section {name.decode('ascii', 'replace')}")
        sections[name] = payload
        pos += length
    missing = {b"HEAD", b"LIDX", b"CRFP"} - sections.keys()
    if missing:
        raise TruncatedModelError(f"missing sections: {sorted(s.decode() for s in missing)}")
    try:
        head = json.loads(sections[b"HEAD"].decode("utf-8"))
        artifact = ModelArtifact(
            categories=tuple(head["categories"]),
            features=FeatureConfig(**head["features"]),
            ldn_config=LdnConfig.from_dict(head["ldn"]),
            index=restore_index(sections[b"LIDX"]),
            crf=_unpack_params(sections[b"CRFP"]),
            embedding_checksum=int(head["embedding_checksum"], 16),
            embedding_dim=int(head["embedding_dim"]),
            seed=int(head["seed"]),
            losses=[float(x) for x in head["losses"]],
            format_version=version,
        )
    except ModelFormatError:
        raise
    except (ValueError, KeyError, TypeError, struct.error) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from None
    if [str(t) for t in artifact.tags] != head["tag_order"]:
        raise ModelFormatError("stored tag order does not match the category list")
    return artifact


def save_model(m: ModelArtifact, path: str | Path):
    Path(path).write_bytes(dumps_model(m))


def load_model(path: str | Path) -> ModelArtifact:
    return loads_model(Path(path).read_bytes())


__all__ = [
    "TrainConfig", "ModelArtifact", "parse_config", "read_config", "train", "predict",
    "predict_dataset", "check_embeddings", "save_model", "load_model", "dumps_model", "loads_model",
]
