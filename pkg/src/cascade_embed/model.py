"""Exponential response-time model with a sigmoid-squashed community rate.

A node ``u`` responds to cascade ``c`` after an exponential delay with rate
``w * sigmoid(A_u . M_c)``.  Nodes that never respond are assigned the long
silent time ``T``, and only a sample ``D_c`` of them enters the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cascades import Cascade
from .errors import ConfigError, InputError, NumericError
from .seeding import rng_for


@dataclass(eq=False)
class ModelParams:
    A: np.ndarray
    M: np.ndarray
    w: float
    T: float

    def __post_init__(self):
        if not self.w > 0:
            raise ConfigError("scale w must be positive")
        if not self.T > 0:
            raise ConfigError("silent time T must be positive")
        if self.A.shape[1] != self.M.shape[1]:
            raise InputError("A and M must share the embedding dimension")

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.A.copy(), self.M.copy(), self.w, self.T)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.A).all() and np.isfinite(self.M).all())

    def same_as(self, other: "ModelParams") -> bool:
        """Bitwise equality of every parameter."""
        return (self.w == other.w and self.T == other.T
                and self.A.shape == other.A.shape and self.M.shape == other.M.shape
                and self.A.tobytes() == other.A.tobytes() and self.M.tobytes() == other.M.tobytes())


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, -x))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def _dot(a_u, m_c) -> float:
    a_u = np.asarray(a_u, dtype=np.float64)
    m_c = np.asarray(m_c, dtype=np.float64)
    if a_u.shape != m_c.shape:
        raise InputError(f"vector lengths differ: {a_u.shape} vs {m_c.shape}")
    x = float(a_u @ m_c)
    if not math.isfinite(x):
        raise NumericError("non-finite affinity A_u . M_c")
    return x


def rate(a_u, m_c, w: float) -> float:
    """Exponential rate ``w * sigmoid(a_u . m_c)``."""
    if not (math.isfinite(w) and w > 0):
        raise NumericError("w must be finite and positive")
    return float(w * sigmoid(_dot(a_u, m_c)))


def log_density(t: float, a_u, m_c, w: float) -> float:
    if t < 0:
        raise InputError("response time must be non-negative")
    if not math.isfinite(t):
        raise NumericError("response time must be finite")
    x = _dot(a_u, m_c)
    return float(math.log(w) + log_sigmoid(x) - w * sigmoid(x) * t)


def grad_pair(t: float, a_u, m_c, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``log_density`` w.r.t. ``a_u`` and ``m_c``.

    Both share the scalar ``s = (1 - sigmoid(x) w t) (1 - sigmoid(x))``:
    ``d/da_u = s * m_c`` and ``d/dm_c = s * a_u``.
    """
    if t < 0:
        raise InputError("response time must be non-negative")
    x = _dot(a_u, m_c)
    sig = float(sigmoid(x))
    s = (1.0 - sig * w * t) * (1.0 - sig)
    if not math.isfinite(s):
        raise NumericError("non-finite gradient scale")
    return s * np.asarray(m_c, dtype=np.float64), s * np.asarray(a_u, dtype=np.float64)


@dataclass(eq=False)
class NegativeSamples:
    """``sets[i]`` holds the sorted negative nodes of the i-th cascade."""

    sets: list[np.ndarray]
    d: int

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, i) -> np.ndarray:
        return self.sets[i]


def sample_negatives(cascades: Sequence[Cascade], node_count: int, d: int, seed: int) -> NegativeSamples:
    """Draw ``d`` distinct non-participants per cascade, uniformly."""
    if d < 1:
        raise ConfigError("need at least one negative sample per cascade (d >= 1)")
    largest = max((c.size for c in cascades), default=0)
    if d > node_count - largest:
        raise ConfigError(f"d={d} exceeds the {node_count - largest} non-participants of the largest cascade")
    sets = []
    for i, c in enumerate(cascades):
        rng = rng_for(seed, "negatives", i)
        pool = np.setdiff1d(np.arange(node_count), c.nodes, assume_unique=True)
        sets.append(np.sort(rng.choice(pool, size=d, replace=False)))
    return NegativeSamples(sets, d)


def cascade_log_likelihood(c: Cascade, d_c, params: ModelParams, row: int | None = None) -> float:
    """Negative-sampled log-likelihood of one cascade.

    ``row`` selects the cascade's row in ``params.M`` (defaults to its ID).
    """
    row = c.cascade_id if row is None else row
    d_c = np.asarray(d_c, dtype=np.int64).reshape(-1)
    if np.intersect1d(d_c, c.nodes).size:
        raise InputError("negative samples overlap the cascade's participants")
    m_c = params.M[row]
    terms = [log_density(t, params.A[u], m_c, params.w) for u, t in zip(c.nodes, c.times)]
    terms += [log_density(params.T, params.A[u], m_c, params.w) for u in d_c]
    return math.fsum(terms)


def total_log_likelihood(cascades: Sequence[Cascade], negatives: NegativeSamples, params: ModelParams) -> float:
    """Sum of per-cascade log-likelihoods; cascade ``i`` uses row ``i`` of ``M``."""
    return math.fsum(cascade_log_likelihood(c, negatives[i], params, row=i) for i, c in enumerate(cascades))


def edge_log_likelihood(nodes, rows, times, params: ModelParams) -> float:
    """Vectorised sum of ``log_density`` over bipartite edges ``(node, cascade row, time)``."""
    x = np.einsum("ij,ij->i", params.A[nodes], params.M[rows])
    terms = math.log(params.w) + log_sigmoid(x) - params.w * sigmoid(x) * times
    return math.fsum(terms.tolist())
