"""Bagged CART classifier and stratified cross-validated F1."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, InputError, TrainingError
from ..seeding import rng_for
from .features import FeatureRow, as_arrays

LEAF = -1


def gini(counts) -> float:
    """Gini impurity ``1 - sum p_k^2`` of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 1
    feature_subsample: int | None = None  # None: ceil(sqrt(F))
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if self.feature_subsample is not None and self.feature_subsample < 1:
            raise ConfigError("feature_subsample must be >= 1")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def n_split_features(self, n_features: int) -> int:
        if self.feature_subsample is None:
            return max(1, math.ceil(math.sqrt(n_features)))
        return min(self.feature_subsample, n_features)


@dataclass(eq=False)
class Tree:
    """Flat binary tree; ``feature == LEAF`` marks a leaf holding ``label``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return self.label[node]


def _best_split(X, y, features, min_leaf):
    """Lowest weighted-Gini threshold over ``features``; None when nothing improves."""
    n = len(y)
    parent = gini(np.bincount(y, minlength=2)) * n
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        pos_left = np.cumsum(ys)[:-1]
        n_left = np.arange(1, n)
        n_right = n - n_left
        pos_right = ys.sum() - pos_left
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        # n * gini = n - (pos^2 + neg^2) / n per side
        g_left = n_left - (pos_left ** 2 + (n_left - pos_left) ** 2) / n_left
        g_right = n_right - (pos_right ** 2 + (n_right - pos_right) ** 2) / n_right
        score = np.where(valid, g_left + g_right, np.inf)
        i = int(np.argmin(score))
        if score[i] < parent - 1e-12 and (best is None or score[i] < best[0]):
            best = (score[i], f, 0.5 * (xs[i] + xs[i + 1]))
    return best


def grow_tree(X, y, config: ForestConfig, rng: np.random.Generator) -> Tree:
    n_feat = X.shape[1]
    k = config.n_split_features(n_feat)
    feature, threshold, left, right, label = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        label.append(0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        pos = int(ys.sum())
        label[node] = int(2 * pos > len(ys))  # ties go to the non-viral class
        if depth >= config.max_depth or pos == 0 or pos == len(ys) or len(ys) < 2 * config.min_leaf:
            continue
        feats = np.sort(rng.choice(n_feat, size=k, replace=False))
        split = _best_split(X[idx], ys, feats, config.min_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        feature[node], threshold[node] = int(f), float(thr)
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(label, dtype=np.int64))


@dataclass(eq=False)
class Forest:
    trees: list[Tree]
    n_features: int

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InputError(f"expected {self.n_features} features per row")
        return np.sum([t.predict(X) for t in self.trees], axis=0)

    def predict(self, X) -> np.ndarray:
        """Majority vote; a tied vote predicts non-viral."""
        return (2 * self.votes(X) > len(self.trees)).astype(np.int64)


def fit_forest(X, y, config: ForestConfig) -> Forest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise InputError("X must be 2-D with one label per row")
    if len(np.unique(y)) < 2:
        raise TrainingError("forest training needs both classes present")
    if not np.isin(y, (0, 1)).all():
        raise InputError("labels must be 0 or 1")

    def one(tree_id):
        rng = rng_for(config.seed, "forest", tree_id)
        boot = rng.integers(len(y), size=len(y))
        return grow_tree(X[boot], y[boot], config, rng)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            trees = list(pool.map(one, range(config.n_trees)))
    else:
        trees = [one(i) for i in range(config.n_trees)]
    return Forest(trees, X.shape[1])


def train_forest(rows: Sequence[FeatureRow], config: ForestConfig) -> Forest:
    X, y = as_arrays(rows)
    return fit_forest(X, y, config)


def f1_score(tp: int, fp: int, fn: int) -> float:
    """F1 of the positive class; 0 when there are no true positives."""
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    """``(tp, fp, fn, tn)`` for the viral class."""
    t = np.asarray(y_true, dtype=bool)
    p = np.asarray(y_pred, dtype=bool)
    return int((t & p).sum()), int((~t & p).sum()), int((t & ~p).sum()), int((~t & ~p).sum())


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    if folds < 2:
        raise ConfigError("need at least two folds")
    if folds > len(y):
        raise ConfigError(f"{folds} folds exceed {len(y)} rows")
    rng = rng_for(seed, "folds")
    out = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        out[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return out


@dataclass
class F1Report:
    f1: float  # pooled over all folds
    fold_f1: list[float | None] = field(default_factory=list)  # None: no positives in that fold
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def mean_fold_f1(self) -> float:
        vals = [v for v in self.fold_f1 if v is not None]
        return float(np.mean(vals)) if vals else float("nan")


def cross_validate(X, y, config: ForestConfig, folds: int = 6, seed: int = 0) -> F1Report:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    fold_of = stratified_folds(y, folds, seed)
    report = F1Report(0.0)
    for k in range(folds):
        test = fold_of == k
        forest = fit_forest(X[~test], y[~test], config)
        tp, fp, fn, _ = confusion(y[test], forest.predict(X[test]))
        report.tp += tp
        report.fp += fp
        report.fn += fn
        if y[test].any():
            report.fold_f1.append(f1_score(tp, fp, fn))
        else:
            warnings.warn(f"fold {k} has no viral cascades; its F1 is undefined and excluded", stacklevel=2)
            report.fold_f1.append(None)
    report.f1 = f1_score(report.tp, report.fp, report.fn)
    return report


def evaluate_f1(rows: Sequence[FeatureRow], config: ForestConfig, folds: int = 6, seed: int = 0) -> F1Report:
    X, y = as_arrays(rows)
    return cross_validate(X, y, config, folds, seed)
