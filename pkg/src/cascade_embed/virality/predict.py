"""Virality experiments: (theta, tau) sweeps and a synthetic multi-community corpus."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..cascades import Cascade, SimConfig, simulate_cascade
from ..errors import ConfigError, InputError, TrainingError
from ..graph import Graph
from ..seeding import rng_for
from .features import baseline_rows, default_radii, k_feature_rows, label_cascades
from .forest import F1Report, ForestConfig, evaluate_f1

K_FEATURES = "k"
BASELINE = "baseline"


@dataclass(frozen=True)
class ViralityConfig:
    theta: float = 0.95
    tau: float = 1.0
    radii: tuple[float, ...] | None = None  # None: pairwise-distance quantiles of A
    folds: int = 6
    forest: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise ConfigError("theta must lie in [0, 1)")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.radii is not None:
            r = np.asarray(self.radii, dtype=np.float64)
            if not len(r) or (r <= 0).any() or (np.diff(r) <= 0).any():
                raise ConfigError("radii must be positive and strictly increasing")
        if self.folds < 2:
            raise ConfigError("need at least two folds")

    def resolve_radii(self, A) -> np.ndarray:
        if self.radii is not None:
            return np.asarray(self.radii, dtype=np.float64)
        return default_radii(A, seed=self.forest.seed)


@dataclass(frozen=True)
class GridRow:
    theta: float
    tau: float
    features: str
    f1: float
    mean_fold_f1: float
    n_viral: int


def compare(cascades: Sequence[Cascade], A, config: ViralityConfig, seed: int = 0) -> dict[str, F1Report]:
    """Cross-validated F1 of the K-feature and baseline classifiers on the same folds."""
    if not cascades:
        raise InputError("no cascades to classify")
    labels = label_cascades(cascades, config.theta)
    radii = config.resolve_radii(A)
    k_rows = k_feature_rows(cascades, labels, A, config.tau, radii)
    b_rows = baseline_rows(cascades, labels, config.tau)
    return {K_FEATURES: evaluate_f1(k_rows, config.forest, config.folds, seed),
            BASELINE: evaluate_f1(b_rows, config.forest, config.folds, seed)}


def sweep(cascades: Sequence[Cascade], A, thetas: Sequence[float], taus: Sequence[float],
          base: ViralityConfig = ViralityConfig(), seed: int = 0) -> list[GridRow]:
    rows = []
    for theta in thetas:
        for tau in taus:
            cfg = ViralityConfig(theta, tau, base.radii, base.folds, base.forest)
            n_viral = int(label_cascades(cascades, theta).sum())
            try:
                reports = compare(cascades, A, cfg, seed)
            except TrainingError as e:
                warnings.warn(f"theta={theta} tau={tau}: {e}; cell left undefined", stacklevel=2)
                reports = {K_FEATURES: None, BASELINE: None}
            for name, rep in reports.items():
                f1, mean_f1 = (rep.f1, rep.mean_fold_f1) if rep else (math.nan, math.nan)
                rows.append(GridRow(theta, tau, name, f1, mean_f1, n_viral))
    return rows


@dataclass(frozen=True)
class CorpusConfig:
    n_cascades: int = 2000
    spread_fraction: float = 0.05  # share of cascades seeded across several communities
    min_seeds: int = 2
    max_seeds: int = 3
    seed_delay: float = 0.0  # later seeds start uniformly in (0, seed_delay)

    def __post_init__(self):
        if self.n_cascades < 1:
            raise ConfigError("n_cascades must be >= 1")
        if not 0.0 <= self.spread_fraction <= 1.0:
            raise ConfigError("spread_fraction must lie in [0, 1]")
        if not 1 <= self.min_seeds <= self.max_seeds:
            raise ConfigError("need 1 <= min_seeds <= max_seeds")
        if self.seed_delay < 0:
            raise ConfigError("seed_delay must be >= 0")


def _pick_seeds(members: list[np.ndarray], n_seeds: int, spread: bool, rng) -> np.ndarray:
    if spread:
        comms = rng.choice(len(members), size=n_seeds, replace=False)
        return np.array([rng.choice(members[c]) for c in comms], dtype=np.int64)
    eligible = [c for c in range(len(members)) if len(members[c]) >= n_seeds]
    c = eligible[rng.integers(len(eligible))]
    return rng.choice(members[c], size=n_seeds, replace=False).astype(np.int64)


def synthetic_corpus(g: Graph, sim: SimConfig, corpus: CorpusConfig, first_id: int = 0) -> tuple[list[Cascade], np.ndarray]:
    """Cascades with 2-3 seeds each; a ``spread_fraction`` share put one seed in
    each of several communities, the rest keep every seed inside one community.

    Returns the cascades and a 0/1 array flagging the multi-community ones.
    """
    n_comm = g.n_communities
    if n_comm < corpus.max_seeds:
        raise ConfigError("need at least max_seeds communities")
    members = [np.flatnonzero(g.community_of == c) for c in range(n_comm)]
    rng = rng_for(sim.seed, "corpus")
    n_spread = int(round(corpus.spread_fraction * corpus.n_cascades))
    spread_flags = np.zeros(corpus.n_cascades, dtype=np.int64)
    spread_flags[rng.choice(corpus.n_cascades, size=n_spread, replace=False)] = 1
    out = []
    for i in range(corpus.n_cascades):
        n_seeds = int(rng.integers(corpus.min_seeds, corpus.max_seeds + 1))
        seeds = _pick_seeds(members, n_seeds, bool(spread_flags[i]), rng)
        times = np.zeros(n_seeds)
        if corpus.seed_delay > 0:
            times[1:] = rng.uniform(0.0, corpus.seed_delay, size=n_seeds - 1)
        out.append(simulate_cascade(g, sim, first_id + i, seeds=seeds, seed_times=times))
    return out, spread_flags
