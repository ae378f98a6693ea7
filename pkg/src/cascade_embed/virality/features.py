"""Viral labels and early-adopter feature extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..cascades import Cascade
from ..errors import ConfigError, InputError
from ..seeding import rng_for

VIRAL, NON_VIRAL = 1, 0


@dataclass(frozen=True, eq=False)
class FeatureRow:
    cascade_id: int
    features: np.ndarray
    label: int


def n_viral(k: int, theta: float) -> int:
    """``ceil((1 - theta) * k)``, immune to float noise such as 0.05 * 2000 = 100.00000000000001."""
    return int(math.ceil(round((1.0 - theta) * k, 9)))


def label_cascades(cascades: Sequence[Cascade], theta: float) -> np.ndarray:
    """1 for the top ``1 - theta`` fraction by final size, ties to smaller cascade IDs."""
    if not cascades:
        raise InputError("need at least one cascade")
    if not 0.0 <= theta < 1.0:
        raise ConfigError("theta must lie in [0, 1)")
    sizes = np.array([c.size for c in cascades])
    ids = np.array([c.cascade_id for c in cascades])
    order = np.lexsort((ids, -sizes))
    labels = np.zeros(len(cascades), dtype=np.int64)
    labels[order[:n_viral(len(cascades), theta)]] = VIRAL
    return labels


def early_mask(c: Cascade, tau: float) -> np.ndarray:
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    if not c.size:
        return np.zeros(0, dtype=bool)
    return c.times - c.times[0] <= tau


def early_adopters(c: Cascade, tau: float) -> np.ndarray:
    """Nodes infected within ``tau`` of the cascade's first infection."""
    return c.nodes[early_mask(c, tau)]


def k_features(adopters, A: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    """Unique nodes within each radius (strict) of any adopter, in embedding space.

    An adopter always counts itself, and a node near several adopters is
    counted once.
    """
    adopters = np.asarray(adopters, dtype=np.int64).reshape(-1)
    if not len(adopters):
        raise InputError("k_features needs at least one adopter")
    radii = np.asarray(radii, dtype=np.float64)
    if len(radii) > 1 and not (np.diff(radii) > 0).all():
        raise ConfigError("radii must be strictly increasing")
    dist = cdist(A[adopters], A).min(axis=0)
    return (dist[None, :] < radii[:, None]).sum(axis=1).astype(np.float64)


def default_radii(A: np.ndarray, seed: int = 0, n_pairs: int = 1000,
                  quantiles: Sequence[float] = (0.10, 0.25, 0.50)) -> np.ndarray:
    """Quantiles of the distance between randomly drawn pairs of embedding rows."""
    n = len(A)
    if n < 2:
        raise InputError("need at least two embedding rows")
    rng = rng_for(seed, "radii")
    i = rng.integers(n, size=n_pairs)
    j = (i + rng.integers(1, n, size=n_pairs)) % n
    d = np.linalg.norm(A[i] - A[j], axis=1)
    radii = np.quantile(d, quantiles)
    for k in range(1, len(radii)):  # ties between quantiles would break strict ordering
        radii[k] = max(radii[k], np.nextafter(radii[k - 1], np.inf))
    return radii


def baseline_features(c: Cascade, tau: float) -> np.ndarray:
    """``[count, count / tau, max gap, min gap]`` over the early infections.

    Gaps fall back to ``tau`` when fewer than two early infections exist.
    """
    if not tau > 0:
        raise ConfigError("tau must be positive for baseline features")
    times = c.times[early_mask(c, tau)]
    count = len(times)
    if count >= 2:
        gaps = np.diff(times)
        gmax, gmin = float(gaps.max()), float(gaps.min())
    else:
        gmax = gmin = float(tau)
    return np.array([count, count / tau, gmax, gmin], dtype=np.float64)


def k_feature_rows(cascades: Sequence[Cascade], labels, A, tau, radii) -> list[FeatureRow]:
    return [FeatureRow(c.cascade_id, k_features(early_adopters(c, tau), A, radii), int(y))
            for c, y in zip(cascades, labels)]


def baseline_rows(cascades: Sequence[Cascade], labels, tau) -> list[FeatureRow]:
    return [FeatureRow(c.cascade_id, baseline_features(c, tau), int(y)) for c, y in zip(cascades, labels)]


def as_arrays(rows: Sequence[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([r.features for r in rows]) if rows else np.zeros((0, 0))
    y = np.array([r.label for r in rows], dtype=np.int64)
    return X, y
