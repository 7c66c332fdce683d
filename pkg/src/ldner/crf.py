"""
Linear-chain CRF over BIO tags with an optional one-hidden-layer tanh encoder.

The score of a tag path y for emissions e is::

    start[y_0] + sum_t e[t, y_t] + sum_{t>0} trans[y_{t-1}, y_t] + stop[y_n-1]

Training uses exact forward-backward marginals; no autodiff.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import OUTSIDE, BioTag
from .errors import DivergenceError

FORBIDDEN = -1.0e4
PARAM_NAMES = ("W1", "b1", "W2", "b2", "transitions", "start", "stop")


def tag_order(categories: Sequence[str]) -> list[BioTag]:
    """``O, B-c1, I-c1, B-c2, I-c2, ...`` in category order."""
    tags = [OUTSIDE]
    for c in categories:
        tags += [BioTag("B", c), BioTag("I", c)]
    return tags


def constrained_transitions(tags: Sequence[BioTag]) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``(allowed_transitions, allowed_starts)`` for a BIO inventory.

    ``I-X`` may only follow ``B-X`` or ``I-X``, and may not start a sentence.
    """
    T = len(tags)
    trans = np.ones((T, T), dtype=bool)
    start = np.ones(T, dtype=bool)
    for j, to in enumerate(tags):
        if to.kind != "I":
            continue
        start[j] = False
        for i, frm in enumerate(tags):
            trans[i, j] = frm.kind != "O" and frm.category == to.category
    return trans, start


def is_bio_valid(tags: Sequence[BioTag]) -> bool:
    prev = OUTSIDE
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.category != tag.category):
            return False
        prev = tag
    return True


def logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


@dataclass
class CrfModel:
    """CRF parameters.

    ``hidden_dim == 0`` makes the model log-linear; W1 then has shape
    ``(0, feature_dim)`` and only records the input width.
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    allowed_transitions: np.ndarray = None
    allowed_start: np.ndarray = None

    def __post_init__(self):
        T = self.num_tags
        if self.allowed_transitions is None:
            self.allowed_transitions = np.ones((T, T), dtype=bool)
        if self.allowed_start is None:
            self.allowed_start = np.ones(T, dtype=bool)
        H, F = self.W1.shape
        if self.b1.shape != (H,):
            raise ValueError("b1 must have length hidden_dim")
        if self.W2.shape != (T, H if H else F) or self.b2.shape != (T,):
            raise ValueError("emission weights do not match tag count / encoder width")
        if self.transitions.shape != (T, T) or self.start.shape != (T,) or self.stop.shape != (T,):
            raise ValueError("transition/start/stop shapes do not match tag count")
        self.apply_mask()

    @property
    def num_tags(self) -> int:
        return self.b2.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.W1.shape[1]

    @classmethod
    def zeros(cls, num_tags: int, feature_dim: int, hidden_dim: int = 0, **masks) -> "CrfModel":
        T, F, H = num_tags, feature_dim, hidden_dim
        return cls(
            W1=np.zeros((H, F)),
            b1=np.zeros(H),
            W2=np.zeros((T, H if H else F)),
            b2=np.zeros(T),
            transitions=np.zeros((T, T)),
            start=np.zeros(T),
            stop=np.zeros(T),
            **masks,
        )

    @classmethod
    def initialize(cls, num_tags: int, feature_dim: int, hidden_dim: int, rng: np.random.Generator,
                   **masks) -> "CrfModel":
        """Weights uniform in [-0.1, 0.1]; biases, transitions, start and stop zero."""
        m = cls.zeros(num_tags, feature_dim, hidden_dim, **masks)
        m.W1 = rng.uniform(-0.1, 0.1, size=m.W1.shape)
        m.W2 = rng.uniform(-0.1, 0.1, size=m.W2.shape)
        return m

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def learnable_masks(self) -> dict[str, np.ndarray]:
        """Boolean mask per parameter; False entries are pinned and never updated."""
        masks = {name: np.ones(p.shape, dtype=bool) for name, p in self.params().items()}
        masks["transitions"] = self.allowed_transitions
        masks["start"] = self.allowed_start
        return masks

    def apply_mask(self):
        self.transitions = np.where(self.allowed_transitions, self.transitions, FORBIDDEN)
        self.start = np.where(self.allowed_start, self.start, FORBIDDEN)

    def copy(self) -> "CrfModel":
        return CrfModel(**{k: v.copy() for k, v in self.params().items()},
                        allowed_transitions=self.allowed_transitions.copy(),
                        allowed_start=self.allowed_start.copy())


def emissions(m: CrfModel, feats: np.ndarray) -> np.ndarray:
    feats = np.atleast_2d(feats)
    if feats.shape[1] != m.feature_dim:
        raise ValueError(f"feature width {feats.shape[1]} != model feature_dim {m.feature_dim}")
    if m.hidden_dim:
        return np.tanh(feats @ m.W1.T + m.b1) @ m.W2.T + m.b2
    return feats @ m.W2.T + m.b2


def sequence_score(e: np.ndarray, m: CrfModel, tags: Sequence[int]) -> float:
    tags = list(tags)
    if len(tags) == 0 or len(tags) != len(e):
        raise ValueError("tag sequence length must equal the number of positions (>= 1)")
    score = m.start[tags[0]] + m.stop[tags[-1]]
    score += sum(e[t, y] for t, y in enumerate(tags))
    score += sum(m.transitions[a, b] for a, b in zip(tags, tags[1:]))
    return float(score)


def _forward(e, m):
    n, T = e.shape
    alpha = np.empty((n, T))
    alpha[0] = m.start + e[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + m.transitions, axis=0) + e[t]
    return alpha


def _backward(e, m):
    n, T = e.shape
    beta = np.empty((n, T))
    beta[-1] = m.stop
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(m.transitions + (e[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def forward_log_partition(e: np.ndarray, m: CrfModel) -> float:
    """log of the sum over all tag paths of exp(path score)."""
    if len(e) == 0:
        raise ValueError("empty sequence")
    return logsumexp(_forward(e, m)[-1] + m.stop)


def viterbi(e: np.ndarray, m: CrfModel) -> tuple[list[int], float]:
    """Best path and its score; ties go to the lower tag index."""
    n, T = e.shape
    if n == 0:
        raise ValueError("empty sequence")
    delta = m.start + e[0]
    back = np.zeros((n, T), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + m.transitions
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(T)] + e[t]
    final = delta + m.stop
    best = int(np.argmax(final))
    path = [best]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(final[best])


def nll_and_gradient(m: CrfModel, feats: np.ndarray, gold: Sequence[int]):
    """Negative log-likelihood of ``gold`` and its exact gradient for every parameter.

    Returns
    -------
    loss : float
    grads : dict
        Same keys and shapes as :meth:`CrfModel.params`. Entries pinned by
        the transition mask get zero gradient.
    """
    gold = np.asarray(gold, dtype=np.intp)
    feats = np.atleast_2d(np.asarray(feats, dtype=np.float64))
    if len(gold) != len(feats):
        raise ValueError("gold tags and feature rows differ in length")
    if m.hidden_dim:
        hidden = np.tanh(feats @ m.W1.T + m.b1)
        e = hidden @ m.W2.T + m.b2
    else:
        hidden = feats
        e = emissions(m, feats)
    n, T = e.shape

    alpha = _forward(e, m)
    beta = _backward(e, m)
    log_z = logsumexp(alpha[-1] + m.stop)
    loss = log_z - sequence_score(e, m, gold)
    if not np.isfinite(loss):
        raise DivergenceError("non-finite CRF loss")

    unary = np.exp(alpha + beta - log_z)
    g_e = unary.copy()
    g_e[np.arange(n), gold] -= 1.0

    g_trans = np.zeros((T, T))
    for t in range(1, n):
        g_trans += np.exp(alpha[t - 1][:, None] + m.transitions
                          + (e[t] + beta[t])[None, :] - log_z)
    np.subtract.at(g_trans, (gold[:-1], gold[1:]), 1.0)

    g_start = unary[0].copy()
    g_start[gold[0]] -= 1.0
    g_stop = unary[-1].copy()
    g_stop[gold[-1]] -= 1.0

    grads = {
        "W2": g_e.T @ hidden,
        "b2": g_e.sum(axis=0),
        "transitions": np.where(m.allowed_transitions, g_trans, 0.0),
        "start": np.where(m.allowed_start, g_start, 0.0),
        "stop": g_stop,
    }
    if m.hidden_dim:
        g_pre = (g_e @ m.W2) * (1.0 - hidden ** 2)
        grads["W1"] = g_pre.T @ feats
        grads["b1"] = g_pre.sum(axis=0)
    else:
        grads["W1"] = np.zeros_like(m.W1)
        grads["b1"] = np.zeros_like(m.b1)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name}")
    return float(loss), grads


def decode(m: CrfModel, feats: np.ndarray) -> list[int]:
    return viterbi(emissions(m, feats), m)[0]
