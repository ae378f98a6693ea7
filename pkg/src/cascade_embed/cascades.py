"""Continuous-time Independent Cascade simulation inside an observation window."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .graph import Graph
from .seeding import rng_for


@dataclass(frozen=True, eq=False)
class Cascade:
    """Infections of one cascade, ordered by time (ties by node ID)."""

    cascade_id: int
    nodes: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64).reshape(-1)
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if len(nodes) != len(times):
            raise InputError("nodes and times differ in length")
        if len(np.unique(nodes)) != len(nodes):
            raise InputError(f"cascade {self.cascade_id}: a node is infected more than once")
        if len(times) and (not np.isfinite(times).all() or times.min() < 0):
            raise InputError(f"cascade {self.cascade_id}: infection times must be finite and >= 0")
        order = np.lexsort((nodes, times))
        object.__setattr__(self, "nodes", nodes[order])
        object.__setattr__(self, "times", times[order])

    @classmethod
    def from_pairs(cls, cascade_id: int, pairs) -> "Cascade":
        pairs = list(pairs)
        return cls(cascade_id, [u for u, _ in pairs], [t for _, t in pairs])

    def __len__(self):
        return len(self.nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(u), float(t)) for u, t in zip(self.nodes, self.times)]

    def same_as(self, other: "Cascade") -> bool:
        return (self.cascade_id == other.cascade_id and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.times, other.times))


@dataclass(frozen=True)
class SimConfig:
    edge_rate: float = 1.0
    window: float = 1.0
    n_seeds_per_cascade: int = 1
    n_cascades: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.edge_rate > 0:
            raise ConfigError("edge_rate must be positive")
        if not self.window > 0:
            raise ConfigError("window must be positive")
        if self.n_seeds_per_cascade < 1:
            raise ConfigError("n_seeds_per_cascade must be >= 1")
        if self.n_cascades < 0:
            raise ConfigError("n_cascades must be >= 0")


DelayFn = Callable[[int, np.ndarray], np.ndarray]


def spread(g: Graph, seeds: Sequence[int], seed_times: Sequence[float], window: float,
           delays: DelayFn) -> tuple[np.ndarray, np.ndarray]:
    """Label-setting expansion from the seeds over per-edge delays.

    ``delays(u, nbrs)`` returns the delay on each directed edge ``u -> v`` and
    is called exactly once per infected node, in infection order.  Arrival
    times beyond ``window`` are dropped.
    """
    n = g.node_count
    best = np.full(n, math.inf)
    done = np.zeros(n, dtype=bool)
    heap = []
    for s, t0 in zip(seeds, seed_times):
        if t0 <= window and t0 < best[s]:
            best[s] = t0
            heapq.heappush(heap, (float(t0), int(s)))
    nodes, times = [], []
    while heap:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        nodes.append(u)
        times.append(t)
        nbrs = g.neighbors(u)
        if not len(nbrs):
            continue
        arrive = t + delays(u, nbrs)
        for v, tv in zip(nbrs.tolist(), arrive.tolist()):
            if not done[v] and tv <= window and tv < best[v]:
                best[v] = tv
                heapq.heappush(heap, (tv, v))
    return np.asarray(nodes, dtype=np.int64), np.asarray(times, dtype=np.float64)


def simulate_cascade(g: Graph, config: SimConfig, cascade_id: int, seeds: Sequence[int] | None = None,
                     seed_times: Sequence[float] | None = None, window: float | None = None) -> Cascade:
    """One cascade; seeds default to ``n_seeds_per_cascade`` uniform nodes at time 0."""
    if g.node_count == 0:
        raise InputError("cannot simulate on an empty graph")
    rng = rng_for(config.seed, "cascade-sim", cascade_id)
    if seeds is None:
        k = min(config.n_seeds_per_cascade, g.node_count)
        seeds = np.sort(rng.choice(g.node_count, size=k, replace=False))
    seeds = [int(s) for s in seeds]
    if seed_times is None:
        seed_times = [0.0] * len(seeds)
    scale = 1.0 / config.edge_rate

    def exp_delays(u, nbrs):
        return rng.exponential(scale, size=len(nbrs))

    nodes, times = spread(g, seeds, seed_times, config.window if window is None else window, exp_delays)
    return Cascade(cascade_id, nodes, times)


def simulate_batch(g: Graph, config: SimConfig, window: float | None = None,
                   first_id: int = 0) -> list[Cascade]:
    return [simulate_cascade(g, config, first_id + i, window=window) for i in range(config.n_cascades)]


def mean_size(g: Graph, config: SimConfig, window: float, n_trials: int) -> float:
    sizes = [simulate_cascade(g, config, i, window=window).size for i in range(n_trials)]
    return float(np.mean(sizes))


def calibrate_window(g: Graph, config: SimConfig, target_size: float, n_trials: int = 200,
                     rel_tol: float = 1e-3, max_window: float = 1e6) -> float:
    """Window whose Monte-Carlo mean cascade size reaches ``target_size``.

    Trials reuse the same random streams for every candidate window, so the
    mean size is monotone in the window and bisection is well posed.
    """
    if target_size <= config.n_seeds_per_cascade:
        raise ConfigError("target size must exceed the number of seeds")
    lo, hi = 0.0, 1.0
    while mean_size(g, config, hi, n_trials) < target_size:
        lo, hi = hi, hi * 2.0
        if hi > max_window:
            raise ConfigError(f"target size {target_size} unreachable on this graph")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mean_size(g, config, mid, n_trials) < target_size:
            lo = mid
        else:
            hi = mid
    return hi
