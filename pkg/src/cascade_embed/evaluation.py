"""Clustering of node embeddings and partition-similarity scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .errors import ConfigError, InputError
from .seeding import rng_for


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of nodes ``0..n-1`` to dense block IDs ``0..k-1``."""

    assignment: np.ndarray

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels)
        _, dense = np.unique(labels, return_inverse=True)
        return cls(dense.astype(np.int64).reshape(-1))

    @classmethod
    def from_blocks(cls, blocks) -> "Partition":
        blocks = [sorted(b) for b in blocks]
        n = sum(len(b) for b in blocks)
        labels = np.full(n, -1, dtype=np.int64)
        for i, b in enumerate(blocks):
            if b and not 0 <= b[0] <= b[-1] < n:
                raise InputError("blocks must cover 0..n-1 exactly once")
            labels[b] = i
        if (labels < 0).any():
            raise InputError("blocks must cover 0..n-1 exactly once")
        return cls.from_labels(labels)

    def __len__(self):
        return len(self.assignment)

    @property
    def n_blocks(self) -> int:
        return int(self.assignment.max()) + 1 if len(self.assignment) else 0

    def blocks(self) -> list[frozenset]:
        out = [set() for _ in range(self.n_blocks)]
        for node, b in enumerate(self.assignment):
            out[b].add(node)
        return [frozenset(b) for b in out]

    def block_set(self) -> set[frozenset]:
        return set(self.blocks())


def _labels(p) -> np.ndarray:
    return p.assignment if isinstance(p, Partition) else Partition.from_labels(p).assignment


def contingency(u, q) -> np.ndarray:
    a, b = _labels(u), _labels(q)
    if len(a) != len(b):
        raise InputError(f"partitions cover different node counts ({len(a)} vs {len(b)})")
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def entropy(p) -> float:
    counts = np.bincount(_labels(p))
    probs = counts[counts > 0] / counts.sum()
    return float(-(probs * np.log(probs)).sum())


def mutual_information(u, q) -> float:
    table = contingency(u, q)
    n = table.sum()
    nz = table > 0
    a = table.sum(axis=1, keepdims=True)
    b = table.sum(axis=0, keepdims=True)
    nij = table[nz]
    outer = (a * b)[nz]
    return float(np.sum(nij / n * (np.log(nij) + np.log(n) - np.log(outer))))


def expected_mutual_information(u, q) -> float:
    """E[MI] under random relabelling with fixed block sizes (hypergeometric model)."""
    table = contingency(u, q)
    n = int(table.sum())
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    lg_n = gammaln(n + 1)
    total = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            term = nij / n * (np.log(n) + np.log(nij) - np.log(ai) - np.log(bj))
            log_p = (gammaln(ai + 1) + gammaln(bj + 1) + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                     - lg_n - gammaln(nij + 1) - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                     - gammaln(n - ai - bj + nij + 1))
            total += float(np.sum(term * np.exp(log_p)))
    return total


def ami(u, q) -> float:
    """Adjusted mutual information with the ``max(H(U), H(Q))`` normaliser."""
    table = contingency(u, q)
    if table.shape[0] == table.shape[1] == 1:
        return 1.0
    mi = mutual_information(u, q)
    emi = expected_mutual_information(u, q)
    h_max = max(entropy(u), entropy(q))
    denom = h_max - emi
    if abs(denom) < 1e-15:
        return 1.0 if abs(mi - h_max) < 1e-12 else 0.0
    return float((mi - emi) / denom)


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ars(u, q) -> float:
    """Adjusted Rand score from the contingency table."""
    table = contingency(u, q)
    n = table.sum()
    if n < 2:
        raise InputError("ARS needs at least two nodes")
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    history: list[float]
    n_iter: int

    @property
    def partition(self) -> Partition:
        return Partition.from_labels(self.labels)


def _sq_dists(x, centroids):
    return cdist(x, centroids, "sqeuclidean")


def _kmeans_pp(x, k, rng):
    """Greedy k-means++: each step keeps the best of ``2 + ln k`` D^2-sampled candidates."""
    n = len(x)
    trials = 2 + int(math.log(k))
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = _sq_dists(x, centers[:1])[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            cand = rng.choice(n, size=trials, p=d2 / total)
        else:
            cand = rng.integers(n, size=trials)
        cand_d2 = np.minimum(d2[None, :], _sq_dists(x[cand], x))
        best = int(np.argmin(cand_d2.sum(axis=1)))
        centers[i] = x[cand[best]]
        d2 = cand_d2[best]
    return centers


def _lloyd(x, centers, max_iters):
    history = []
    labels = None
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_dists(x, centers)
        new_labels = np.argmin(d2, axis=1)  # first minimum = lowest centroid id
        history.append(float(d2[np.arange(len(x)), new_labels].sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for c in range(len(centers)):
            members = labels == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # empty cluster takes over the worst-served point
                far = int(np.argmax(d2[np.arange(len(x)), labels]))
                centers[c] = x[far]
                labels[far] = c
    return labels, centers, history, it


def kmeans_fit(vectors, k: int, seed: int = 0, max_iters: int = 300, n_init: int = 50) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; best of ``n_init`` restarts by inertia."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise InputError("vectors must be a 2-D array")
    if not 1 <= k <= len(x):
        raise ConfigError(f"k={k} must be in [1, {len(x)}]")
    best = None
    for run in range(max(1, n_init)):
        rng = rng_for(seed, "kmeans", run)
        labels, centers, history, it = _lloyd(x, _kmeans_pp(x, k, rng), max_iters)
        inertia = history[-1]
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, history, it)
    return best


def kmeans(vectors, k: int, seed: int = 0, max_iters: int = 300, n_init: int = 50) -> Partition:
    return kmeans_fit(vectors, k, seed, max_iters, n_init).partition


def distance_matrix(vectors, subset=None) -> np.ndarray:
    """Pairwise Euclidean distances between rows.

    ``subset`` may be an int (the first ``subset`` rows), a ``range``/slice,
    or an index array.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if subset is not None:
        if isinstance(subset, (int, np.integer)):
            x = x[:subset]
        elif isinstance(subset, slice):
            x = x[subset]
        else:
            x = x[np.asarray(list(subset), dtype=np.int64)]
    d = cdist(x, x, "euclidean")
    np.fill_diagonal(d, 0.0)
    return d
