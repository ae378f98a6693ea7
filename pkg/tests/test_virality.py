import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_embed.cascades import Cascade, SimConfig
from cascade_embed.errors import ConfigError, InputError, TrainingError
from cascade_embed.graph import SbmConfig, generate_sbm
from cascade_embed.virality import (BASELINE, K_FEATURES, CorpusConfig, FeatureRow, ForestConfig,
                                    ViralityConfig, baseline_features, confusion, cross_validate,
                                    default_radii, early_adopters, evaluate_f1, f1_score, fit_forest,
                                    gini, k_features, label_cascades, n_viral, stratified_folds, sweep,
                                    synthetic_corpus, train_forest)
from cascade_embed.virality.forest import _best_split


def ring_layout():
    """Centre node 0 with 2 / 4 / 5 nodes inside radius 1 / 2 / 3, and node 12
    far left with 4 nodes at distance 2.5."""
    pts = [(0.0, 0.0)]
    for r, k in ((0.5, 2), (1.5, 4), (2.5, 5)):
        pts += [(r * math.cos(2 * math.pi * i / k + r), r * math.sin(2 * math.pi * i / k + r)) for i in range(k)]
    left = (-10.0, 0.0)
    pts.append(left)
    pts += [(left[0] + 2.5 * math.cos(a), 2.5 * math.sin(a)) for a in (0.3, 1.9, 3.5, 5.0)]
    return np.array(pts), 0, 12


def brute_k(adopters, A, radii):
    return [len({u for u in range(len(A)) for v in adopters if np.linalg.norm(A[u] - A[v]) < r})
            for r in radii]


def test_n_viral_arithmetic():
    assert n_viral(26752, 0.99) == 268
    assert n_viral(2000, 0.95) == 100
    assert n_viral(10, 0.9) == 1
    assert n_viral(7, 0.9) == 1


def test_label_largest_is_viral():
    cs = [Cascade(i, list(range(i + 1)), [0.0] * (i + 1)) for i in range(10)]
    assert label_cascades(cs, 0.9).tolist() == [0] * 9 + [1]


def test_label_ties_go_to_smaller_ids():
    cs = [Cascade(i, [0, 1], [0.0, 1.0]) for i in (5, 2, 9, 4)]
    labels = label_cascades(cs, 0.5)
    assert sorted(c.cascade_id for c, y in zip(cs, labels) if y) == [2, 4]


def test_label_errors():
    with pytest.raises(InputError):
        label_cascades([], 0.9)
    with pytest.raises(ConfigError):
        label_cascades([Cascade(0, [0], [0.0])], 1.0)


def test_early_adopters_examples():
    c = Cascade(0, [10, 11, 12], [0.0, 0.4, 1.2])
    assert early_adopters(c, 0.5).tolist() == [10, 11]
    assert early_adopters(c, 5.0).tolist() == [10, 11, 12]
    assert early_adopters(Cascade(1, [3, 4, 5], [0.0, 0.0, 0.3]), 0.0).tolist() == [3, 4]
    # measured from the first infection, not from zero
    assert early_adopters(Cascade(2, [1, 2], [2.0, 2.4]), 0.5).tolist() == [1, 2]


def test_ring_layout_counts():
    A, centre, left = ring_layout()
    assert len(A) == 17
    assert k_features([centre], A, [1, 2, 3]).tolist() == [3, 7, 12]
    assert k_features([left], A, [1, 2, 3]).tolist() == [1, 1, 5]


def test_infinite_radius_counts_everyone():
    A = np.random.default_rng(0).normal(size=(9, 2))
    assert k_features([0, 4], A, [np.inf]).tolist() == [9]


def test_disjoint_and_overlapping_balls():
    # two clusters of 3 and 4 points around adopters 0 and 3
    A = np.array([[0, 0], [0.1, 0], [0, 0.1], [5, 0], [5.1, 0], [5, 0.1], [4.9, 0]], dtype=float)
    assert k_features([0, 3], A, [1.0]).tolist() == [7] == brute_k([0, 3], A, [1.0])
    # one shared point halfway between adopters at distance < 1 from both
    B = np.array([[0, 0], [-0.5, 0], [0.9, 0], [1.8, 0], [2.5, 0], [2.2, 0.5]])
    assert brute_k([0], B, [1.0]) == [3] and brute_k([3], B, [1.0]) == [4]
    assert k_features([0, 3], B, [1.0]).tolist() == [6] == brute_k([0, 3], B, [1.0])


def test_k_feature_errors():
    A = np.zeros((3, 2))
    with pytest.raises(InputError):
        k_features([], A, [1.0])
    with pytest.raises(ConfigError):
        k_features([0], A, [2.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n_adopt=st.integers(1, 6))
def test_k_monotone_and_union_bounded(seed, n_adopt):
    r = np.random.default_rng(seed)
    A = r.normal(size=(30, 3))
    radii = np.sort(r.uniform(0.1, 3.0, size=4)) + np.arange(4) * 1e-6
    adopters = r.choice(30, size=n_adopt, replace=False)
    K = k_features(adopters, A, radii)
    assert K.tolist() == brute_k(adopters, A, radii)
    assert np.all(np.diff(K) >= 0)
    singles = np.sum([k_features([v], A, radii) for v in adopters], axis=0)
    assert np.all(K <= singles)


def test_default_radii_increasing():
    A = np.random.default_rng(1).normal(size=(50, 4))
    r = default_radii(A, seed=3)
    assert len(r) == 3 and np.all(np.diff(r) > 0)
    assert np.array_equal(r, default_radii(A, seed=3))


def test_baseline_examples():
    c = Cascade(0, [1, 2, 3], [0.0, 0.2, 0.5])
    np.testing.assert_allclose(baseline_features(c, 1.0), [3, 3.0, 0.3, 0.2], atol=1e-12)
    assert baseline_features(Cascade(1, [4], [0.0]), 2.0).tolist() == [1, 0.5, 2.0, 2.0]
    even = Cascade(2, [1, 2, 3, 4], [0.0, 0.25, 0.5, 0.75])
    f = baseline_features(even, 1.0)
    assert f[2] == f[3] == 0.25


def test_gini_arithmetic():
    assert gini([5, 0]) == 0.0
    assert gini([3, 3]) == 0.5
    assert gini([1, 3]) == pytest.approx(1 - (0.25 ** 2 + 0.75 ** 2))


def test_best_split_finds_clean_cut():
    X = np.array([[0.1], [0.2], [0.3], [0.7], [0.9]])
    y = np.array([0, 0, 0, 1, 1])
    score, f, thr = _best_split(X, y, [0], 1)
    assert f == 0 and thr == pytest.approx(0.5) and score == 0.0


def test_separable_data_fits_perfectly():
    X = np.linspace(0, 1, 40)[:, None]
    y = (X[:, 0] > 0.37).astype(int)
    forest = fit_forest(X, y, ForestConfig(n_trees=15, max_depth=1, seed=2))
    assert (forest.predict(X) == y).mean() == 1.0


def test_single_class_rejected():
    rows = [FeatureRow(i, np.array([float(i)]), 0) for i in range(5)]
    with pytest.raises(TrainingError):
        train_forest(rows, ForestConfig(n_trees=2))


def test_forest_deterministic():
    r = np.random.default_rng(0)
    X, y = r.random((80, 3)), r.integers(0, 2, 80)
    a = fit_forest(X, y, ForestConfig(n_trees=10, seed=4))
    b = fit_forest(X, y, ForestConfig(n_trees=10, seed=4, n_jobs=3))
    assert np.array_equal(a.votes(X), b.votes(X))


def test_noisy_rule_out_of_fold_accuracy():
    # oracle: the generating rule label = x0 > 0.5, with 5% of labels flipped
    r = np.random.default_rng(1)
    X = r.random((600, 3))
    y = (X[:, 0] > 0.5).astype(int)
    y[r.random(600) < 0.05] ^= 1
    folds = stratified_folds(y, 6, seed=0)
    acc = []
    for k in range(6):
        test = folds == k
        forest = fit_forest(X[~test], y[~test], ForestConfig(n_trees=50, seed=k))
        acc.append((forest.predict(X[test]) == y[test]).mean())
    assert np.mean(acc) >= 0.9


def test_f1_arithmetic():
    assert f1_score(4, 0, 0) == 1.0
    assert f1_score(1, 1, 1) == 0.5
    assert f1_score(3, 1, 2) == pytest.approx(2 * 0.75 * 0.6 / 1.35, abs=1e-12)
    assert f1_score(0, 3, 2) == 0.0


def test_f1_invariant_to_sample_order():
    r = np.random.default_rng(2)
    t, p = r.integers(0, 2, 50), r.integers(0, 2, 50)
    perm = r.permutation(50)
    assert confusion(t, p) == confusion(t[perm], p[perm])


def test_stratified_folds_balance_classes():
    y = np.array([1] * 13 + [0] * 50)
    folds = stratified_folds(y, 6, seed=1)
    pos = np.bincount(folds[y == 1], minlength=6)
    neg = np.bincount(folds[y == 0], minlength=6)
    assert pos.max() - pos.min() <= 1 and neg.max() - neg.min() <= 1
    with pytest.raises(ConfigError):
        stratified_folds(y, 1, 0)


def test_fold_without_positives_is_excluded():
    r = np.random.default_rng(3)
    X = r.random((40, 2))
    y = np.zeros(40, dtype=int)
    y[:4] = 1
    X[:4, 0] += 2.0
    with pytest.warns(UserWarning, match="no viral"):
        rep = cross_validate(X, y, ForestConfig(n_trees=5), folds=5, seed=0)
    assert rep.fold_f1.count(None) == 1
    assert rep.mean_fold_f1 == pytest.approx(np.mean([v for v in rep.fold_f1 if v is not None]))
    assert rep.tp + rep.fn == 4


def test_virality_config_validation():
    with pytest.raises(ConfigError):
        ViralityConfig(tau=0.0)
    with pytest.raises(ConfigError):
        ViralityConfig(radii=(1.0, 1.0))
    with pytest.raises(ConfigError):
        ViralityConfig(folds=1)


@pytest.fixture(scope="module")
def corpus():
    g = generate_sbm(SbmConfig.equal_sizes(4, 12, 0.4, 0.01, seed=1))
    cs, flags = synthetic_corpus(g, SimConfig(1.0, 0.6, 1, 0, seed=1),
                                 CorpusConfig(n_cascades=120, spread_fraction=0.1, seed_delay=0.1))
    return g, cs, flags


def test_corpus_seeding(corpus):
    g, cs, flags = corpus
    assert len(cs) == 120 and flags.sum() == 12
    for c, f in zip(cs, flags):
        assert c.times[0] == 0.0 and 2 <= (c.times <= 0.1).sum()
        assert c.times.max() <= 0.6


def test_sweep_grid(corpus):
    g, cs, _ = corpus
    A = np.random.default_rng(0).normal(size=(g.node_count, 3))
    base = ViralityConfig(forest=ForestConfig(n_trees=5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = sweep(cs, A, [0.9, 0.995], [0.1, 0.3], base, seed=0)
    assert [(r.theta, r.tau, r.features) for r in rows][:2] == [(0.9, 0.1, K_FEATURES), (0.9, 0.1, BASELINE)]
    assert len(rows) == 8
    assert all(math.isnan(r.f1) for r in rows if r.theta == 0.995)  # one viral cascade: undefined
    assert all(0.0 <= r.f1 <= 1.0 for r in rows if r.theta == 0.9)


def test_evaluate_f1_on_rows():
    rows = [FeatureRow(i, np.array([float(i % 10)]), int(i % 10 >= 8)) for i in range(60)]
    rep = evaluate_f1(rows, ForestConfig(n_trees=5), folds=3, seed=0)
    assert rep.f1 == 1.0 and rep.mean_fold_f1 == 1.0
