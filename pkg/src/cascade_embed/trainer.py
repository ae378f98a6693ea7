"""Sequential stochastic gradient ascent over the node-cascade bipartite graph."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import ascend_rows, build_csr
from .cascades import Cascade
from .errors import ConfigError, InputError, TrainingError
from .model import ModelParams, NegativeSamples, edge_log_likelihood, sample_negatives
from .seeding import rng_for

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.3
    iterations: int = 50
    m: int = 10
    w: float | None = None  # None: 1.5 / T
    T: float | None = None  # None: 3x the latest observed infection time
    d: int = 10
    init_scale: float = 0.1
    seed: int = 0
    decay: float = 0.0
    clip: float | None = 1.0
    early_stop: bool = True
    stop_tol: float = 1e-6
    stop_patience: int = 3

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("stepsize alpha must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.m < 1:
            raise ConfigError("embedding dimension m must be >= 1")
        if self.w is not None and not self.w > 0:
            raise ConfigError("w must be positive")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.init_scale < 0:
            raise ConfigError("init_scale must be >= 0")
        if self.decay < 0:
            raise ConfigError("decay must be >= 0")

    def stepsize(self, iteration: int) -> float:
        return self.alpha / (1.0 + iteration * self.decay)

    def silent_time(self, cascades: Sequence[Cascade]) -> float:
        if self.T is not None:
            return float(self.T)
        latest = max((float(c.times.max()) for c in cascades if c.size), default=0.0)
        return 3.0 * latest if latest > 0 else 3.0

    def scale(self, T: float) -> float:
        """Rate scale; the default keeps ``w * T`` fixed so time units do not matter."""
        return float(self.w) if self.w is not None else 1.5 / T

    @property
    def clip_value(self) -> float:
        return float(self.clip) if self.clip else 0.0


@dataclass(eq=False)
class BipartiteGraph:
    """Edges ``(node, cascade row, time)`` with both adjacency views.

    ``by_node`` is a CSR over nodes listing incident cascades in ascending
    order; ``by_cascade`` is its transpose.
    """

    node_count: int
    cascade_count: int
    nodes: np.ndarray
    cascades: np.ndarray
    times: np.ndarray
    by_node: tuple = field(repr=False)
    by_cascade: tuple = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.nodes)

    def node_edges(self, u: int) -> list[tuple[int, float]]:
        indptr, idx, t = self.by_node
        return [(int(c), float(x)) for c, x in zip(idx[indptr[u]:indptr[u + 1]], t[indptr[u]:indptr[u + 1]])]

    def cascade_edges(self, c: int) -> list[tuple[int, float]]:
        indptr, idx, t = self.by_cascade
        return [(int(u), float(x)) for u, x in zip(idx[indptr[c]:indptr[c + 1]], t[indptr[c]:indptr[c + 1]])]


def build_bipartite(cascades: Sequence[Cascade], negatives: NegativeSamples, T: float,
                    node_count: int | None = None) -> BipartiteGraph:
    if len(negatives) != len(cascades):
        raise InputError("one negative set per cascade required")
    nodes, rows, times = [], [], []
    for i, c in enumerate(cascades):
        neg = np.asarray(negatives[i], dtype=np.int64)
        if np.intersect1d(neg, c.nodes).size:
            raise InputError(f"cascade {c.cascade_id}: negatives overlap participants")
        nodes += [c.nodes, neg]
        rows.append(np.full(c.size + len(neg), i, dtype=np.int64))
        times += [c.times, np.full(len(neg), float(T))]
    if cascades:
        nodes, rows, times = np.concatenate(nodes), np.concatenate(rows), np.concatenate(times)
    else:
        nodes, rows, times = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
    if node_count is None:
        node_count = int(nodes.max()) + 1 if len(nodes) else 0
    return BipartiteGraph(node_count, len(cascades), nodes, rows, times,
                          build_csr(nodes, rows, times, node_count),
                          build_csr(rows, nodes, times, len(cascades)))


def init_params(node_count: int, cascade_count: int, config: TrainConfig, T: float) -> ModelParams:
    """I.i.d. Gaussian(0, init_scale^2) entries."""
    A = rng_for(config.seed, "init", 0).normal(0.0, 1.0, size=(node_count, config.m)) * config.init_scale
    M = rng_for(config.seed, "init", 1).normal(0.0, 1.0, size=(cascade_count, config.m)) * config.init_scale
    return ModelParams(A, M, config.scale(T), T)


@dataclass(eq=False)
class TrainResult:
    params: ModelParams
    trace: list[float]  # trace[0] is the initial log-likelihood
    negatives: NegativeSamples
    bipartite: BipartiteGraph
    iterations_run: int
    seconds: float = 0.0


def bipartite_log_likelihood(bg: BipartiteGraph, params: ModelParams) -> float:
    return edge_log_likelihood(bg.nodes, bg.cascades, bg.times, params)


def infer_node_count(cascades: Sequence[Cascade]) -> int:
    return max((int(c.nodes.max()) + 1 for c in cascades if c.size), default=0)


def prepare(cascades: Sequence[Cascade], config: TrainConfig, node_count: int | None,
            negatives: NegativeSamples | None):
    """Shared setup of both engines: negatives, silent time, bipartite graph, initial params."""
    if not cascades:
        raise InputError("training needs at least one cascade")
    if node_count is None:
        node_count = infer_node_count(cascades)
    T = config.silent_time(cascades)
    latest = max((float(c.times.max()) for c in cascades if c.size), default=0.0)
    if not T > latest:
        raise ConfigError(f"silent time T={T} must exceed the latest infection time {latest}")
    if negatives is None:
        negatives = sample_negatives(cascades, node_count, config.d, config.seed)
    bg = build_bipartite(cascades, negatives, T, node_count)
    params = init_params(node_count, len(cascades), config, T)
    return negatives, bg, params


class StopRule:
    """Early stop once the relative trace change stays below tolerance."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.quiet = 0

    def update(self, prev: float, cur: float) -> bool:
        if not self.config.early_stop:
            return False
        if abs(cur - prev) < self.config.stop_tol * abs(cur):
            self.quiet += 1
        else:
            self.quiet = 0
        return self.quiet >= self.config.stop_patience


def sweep(bg: BipartiteGraph, params: ModelParams, alpha: float, clip: float) -> None:
    """One SGA iteration: every A_u over its cascades, then every M_c over its nodes."""
    ascend_rows(params.A, params.M, bg.by_node[0], bg.by_node[1], bg.by_node[2], params.w, alpha, clip)
    ascend_rows(params.M, params.A, bg.by_cascade[0], bg.by_cascade[1], bg.by_cascade[2],
                params.w, alpha, clip)


def check_finite(params: ModelParams, iteration: int) -> None:
    if not params.is_finite():
        raise TrainingError(f"non-finite parameter after iteration {iteration}", iteration)


def train(cascades: Sequence[Cascade], config: TrainConfig, node_count: int | None = None,
          negatives: NegativeSamples | None = None, callback=None) -> TrainResult:
    """Algorithm of record for the embeddings; single-threaded and bitwise reproducible.

    ``callback(iteration, params)`` is invoked after every sweep.
    """
    start = time.perf_counter()
    negatives, bg, params = prepare(cascades, config, node_count, negatives)
    trace = [bipartite_log_likelihood(bg, params)]
    stop = StopRule(config)
    it = 0
    for it in range(1, config.iterations + 1):
        sweep(bg, params, config.stepsize(it - 1), config.clip_value)
        check_finite(params, it)
        trace.append(bipartite_log_likelihood(bg, params))
        if callback is not None:
            callback(it, params)
        if stop.update(trace[-2], trace[-1]):
            log.debug("early stop after iteration %d", it)
            break
    return TrainResult(params, trace, negatives, bg, it, time.perf_counter() - start)


def time_sweep(bg: BipartiteGraph, params: ModelParams, alpha: float = 0.05, repeats: int = 3) -> float:
    """Best-of-``repeats`` wall time of one sweep, on a scratch copy of ``params``."""
    best = float("inf")
    for _ in range(repeats):
        scratch = params.copy()
        t0 = time.perf_counter()
        sweep(bg, scratch, alpha, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best
