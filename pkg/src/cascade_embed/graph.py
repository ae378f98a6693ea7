"""Stochastic Block Model networks with planted communities."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .evaluation import Partition
from .seeding import rng_for


@dataclass(frozen=True)
class SbmConfig:
    n_nodes: int
    n_communities: int
    community_sizes: tuple[int, ...]
    p_intra: float
    p_inter: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "community_sizes", tuple(int(s) for s in self.community_sizes))
        if self.n_communities != len(self.community_sizes):
            raise ConfigError(
                f"n_communities={self.n_communities} but {len(self.community_sizes)} sizes given"
            )
        if any(s <= 0 for s in self.community_sizes):
            raise ConfigError("community sizes must be positive")
        if sum(self.community_sizes) != self.n_nodes:
            raise ConfigError(
                f"community sizes sum to {sum(self.community_sizes)}, expected {self.n_nodes}"
            )
        if not (0.0 <= self.p_inter <= 1.0 and 0.0 <= self.p_intra <= 1.0):
            raise ConfigError("edge probabilities must lie in [0, 1]")
        # p_inter == p_intra == 0 is the degenerate empty graph; otherwise intra must dominate
        if not (self.p_inter < self.p_intra or self.p_intra == self.p_inter == 0.0):
            raise ConfigError("require 0 <= p_inter < p_intra <= 1")

    @classmethod
    def equal_sizes(cls, n_communities: int, size: int, p_intra: float, p_inter: float,
                    seed: int = 0) -> "SbmConfig":
        return cls(n_communities * size, n_communities, (size,) * n_communities,
                   p_intra, p_inter, seed)

    @property
    def n_intra_pairs(self) -> int:
        return sum(s * (s - 1) // 2 for s in self.community_sizes)

    @property
    def n_inter_pairs(self) -> int:
        return self.n_nodes * (self.n_nodes - 1) // 2 - self.n_intra_pairs


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with a community label per node.

    ``edges`` is an ``(E, 2)`` int array with ``u < v`` in every row, sorted
    lexicographically.
    """

    node_count: int
    edges: np.ndarray
    community_of: np.ndarray = field(repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
        edges = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(edges) else edges
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "community_of", np.asarray(self.community_of, dtype=np.int64))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_communities(self) -> int:
        return int(self.community_of.max()) + 1 if self.node_count else 0

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)``; neighbours of each node in ascending order."""
        n = self.node_count
        if not len(self.edges):
            return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst

    def neighbors(self, u: int) -> np.ndarray:
        indptr, indices = self.adjacency
        return indices[indptr[u]:indptr[u + 1]]

    def edge_counts(self) -> tuple[int, int]:
        """Number of (intra-community, inter-community) edges."""
        if not len(self.edges):
            return 0, 0
        same = self.community_of[self.edges[:, 0]] == self.community_of[self.edges[:, 1]]
        return int(same.sum()), int((~same).sum())

    def same_as(self, other: "Graph") -> bool:
        return (self.node_count == other.node_count
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.community_of, other.community_of))


def _triangle_pairs(k: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    # inverse of the row-major index of pair (i, j), i < j, in the upper triangle of an s x s matrix
    k = k.astype(np.int64)
    i = s - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * s * (s - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    j = k + i + 1 - s * (s - 1) // 2 + (s - i) * ((s - i) - 1) // 2
    return i, j


def _sample_pair_ids(rng: np.random.Generator, n_pairs: int, p: float) -> np.ndarray:
    # Binomial count followed by a uniform subset is the same law as one Bernoulli per pair
    if n_pairs == 0 or p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(n_pairs, dtype=np.int64)
    k = int(rng.binomial(n_pairs, p))
    return np.sort(rng.choice(n_pairs, size=k, replace=False)).astype(np.int64)


def generate_sbm(config: SbmConfig) -> Graph:
    """Draw one SBM graph; deterministic given ``config.seed``."""
    rng = rng_for(config.seed, "graph-gen")
    sizes = config.community_sizes
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    community = np.repeat(np.arange(len(sizes)), sizes)
    blocks = []
    for a, sa in enumerate(sizes):
        ids = _sample_pair_ids(rng, sa * (sa - 1) // 2, config.p_intra)
        i, j = _triangle_pairs(ids, sa)
        blocks.append(np.stack([starts[a] + i, starts[a] + j], axis=1))
        for b in range(a + 1, len(sizes)):
            sb = sizes[b]
            ids = _sample_pair_ids(rng, sa * sb, config.p_inter)
            blocks.append(np.stack([starts[a] + ids // sb, starts[b] + ids % sb], axis=1))
    edges = np.concatenate(blocks) if blocks else np.zeros((0, 2), dtype=np.int64)
    return Graph(config.n_nodes, edges, community)


def ground_truth_partition(g: Graph) -> Partition:
    return Partition.from_labels(g.community_of)


def graph_from_labels(community_of: Sequence[int], edges) -> Graph:
    return Graph(len(community_of), np.asarray(edges, dtype=np.int64).reshape(-1, 2), community_of)
