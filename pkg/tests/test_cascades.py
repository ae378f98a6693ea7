import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from cascade_embed.cascades import (Cascade, SimConfig, calibrate_window, mean_size, simulate_batch,
                                    simulate_cascade, spread)
from cascade_embed.errors import ConfigError, InputError
from cascade_embed.graph import SbmConfig, generate_sbm, graph_from_labels


def test_cascade_sorts_by_time_then_node():
    c = Cascade(4, [7, 2, 5, 1], [0.5, 0.0, 0.5, 0.2])
    assert c.pairs() == [(2, 0.0), (1, 0.2), (5, 0.5), (7, 0.5)]


@pytest.mark.parametrize("nodes,times", [([1, 1], [0.0, 1.0]), ([1, 2], [0.0, -1.0]),
                                         ([1, 2], [0.0, np.nan]), ([1], [0.0, 1.0])])
def test_cascade_rejects_bad_infections(nodes, times):
    with pytest.raises(InputError):
        Cascade(0, nodes, times)


def test_sim_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(edge_rate=0.0)
    with pytest.raises(ConfigError):
        SimConfig(window=-1.0)
    with pytest.raises(ConfigError):
        SimConfig(n_seeds_per_cascade=0)


def test_spread_matches_shortest_paths():
    # oracle: multi-source Dijkstra over the same directed delays
    g = generate_sbm(SbmConfig.equal_sizes(3, 8, 0.5, 0.1, seed=2))
    r = np.random.default_rng(5)
    W = np.zeros((g.node_count, g.node_count))
    for u, v in g.edges.tolist():
        W[u, v], W[v, u] = r.exponential(), r.exponential()
    seeds, t0 = [0, 13], [0.0, 0.4]
    window = 1.7
    nodes, times = spread(g, seeds, t0, window, lambda u, nbrs: W[u, nbrs])
    dist = dijkstra(csr_matrix(W), directed=True, indices=seeds)
    best = np.min(dist + np.array(t0)[:, None], axis=0)
    expect = {u: best[u] for u in range(g.node_count) if best[u] <= window}
    assert dict(zip(nodes.tolist(), times.tolist())) == pytest.approx(expect, abs=1e-12)
    assert np.all(np.diff(times) >= 0)


def test_spread_calls_delays_once_per_infected_node():
    g = graph_from_labels([0, 0, 0, 0], [(0, 1), (1, 2), (2, 3), (0, 2)])
    calls = []

    def delays(u, nbrs):
        calls.append(u)
        return np.full(len(nbrs), 0.25)

    nodes, _ = spread(g, [0], [0.0], 10.0, delays)
    assert sorted(calls) == sorted(nodes.tolist()) == [0, 1, 2, 3]


def test_first_infection_delay_is_exponential():
    # two nodes joined by one edge: the second infection time is Exp(rate)
    g = graph_from_labels([0, 0], [(0, 1)])
    cfg = SimConfig(edge_rate=2.5, window=1e9, seed=3)
    t = np.array([simulate_cascade(g, cfg, i, seeds=[0]).times[1] for i in range(3000)])
    assert t.mean() == pytest.approx(1 / 2.5, rel=0.06)
    assert stats.kstest(t, "expon", args=(0, 1 / 2.5)).pvalue > 1e-3


def test_window_truncates(small_graph):
    cfg = SimConfig(1.0, 0.3, 2, 10, seed=1)
    for c in simulate_batch(small_graph, cfg):
        assert c.times.max() <= 0.3
        assert (c.times == 0).sum() >= 1


def test_batch_matches_individual_cascades(small_graph):
    cfg = SimConfig(1.0, 1.0, 1, 6, seed=4)
    batch = simulate_batch(small_graph, cfg)
    for i, c in enumerate(batch):
        assert c.same_as(simulate_cascade(small_graph, cfg, i))


def test_empty_graph_rejected():
    g = graph_from_labels([], np.zeros((0, 2)))
    with pytest.raises(InputError):
        simulate_cascade(g, SimConfig(), 0)


def test_mean_size_monotone_in_window(small_graph):
    cfg = SimConfig(1.0, 1.0, 1, 0, seed=9)
    sizes = [mean_size(small_graph, cfg, w, 50) for w in (0.1, 0.3, 0.6, 1.0, 2.0)]
    assert sizes == sorted(sizes)


def test_calibrated_window_brackets_target(small_graph):
    cfg = SimConfig(1.0, 1.0, 1, 0, seed=9)
    w = calibrate_window(small_graph, cfg, 5.0, n_trials=60, rel_tol=1e-3)
    assert mean_size(small_graph, cfg, w, 60) >= 5.0
    assert mean_size(small_graph, cfg, w * (1 - 1e-3), 60) < 5.0


def test_unreachable_target_raises(small_graph):
    with pytest.raises(ConfigError):
        calibrate_window(small_graph, SimConfig(seed=1), 1000.0, n_trials=5, max_window=64)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), window=st.floats(0.01, 5.0), k=st.integers(1, 4))
def test_simulated_cascades_are_consistent(small_graph, seed, window, k):
    c = simulate_cascade(small_graph, SimConfig(1.0, window, k, 1, seed), 0)
    assert len(np.unique(c.nodes)) == c.size >= k
    assert np.all(np.diff(c.times) >= 0)
    assert c.times.max() <= window
    # every non-seed infection has an earlier infected neighbour
    when = dict(zip(c.nodes.tolist(), c.times.tolist()))
    for u, t in c.pairs():
        if t > 0:
            assert any(when.get(int(v), np.inf) < t for v in small_graph.neighbors(u))
