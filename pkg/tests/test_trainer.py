import numpy as np
import pytest

from cascade_embed.errors import ConfigError, InputError, TrainingError
from cascade_embed.model import grad_pair, sample_negatives
from cascade_embed.trainer import TrainConfig, build_bipartite, prepare, sweep, train


def reference_sweep(bg, params, alpha, clip):
    """Plain-Python Gauss-Seidel sweep: all A rows, then all M rows."""
    A, M, w = params.A, params.M, params.w
    for u in range(bg.node_count):
        for c, t in bg.node_edges(u):
            g, _ = grad_pair(t, A[u], M[c], w)
            if clip and np.linalg.norm(g) > clip:
                g *= clip / np.linalg.norm(g)
            A[u] += alpha * g
    for c in range(bg.cascade_count):
        for u, t in bg.cascade_edges(c):
            _, g = grad_pair(t, A[u], M[c], w)
            if clip and np.linalg.norm(g) > clip:
                g *= clip / np.linalg.norm(g)
            M[c] += alpha * g


def test_config_validation():
    for bad in ({"alpha": 0}, {"iterations": -1}, {"m": 0}, {"w": -1.0}, {"T": 0.0}, {"decay": -1}):
        with pytest.raises(ConfigError):
            TrainConfig(**bad)


def test_default_scales(toy_cascades):
    cfg = TrainConfig()
    T = cfg.silent_time(toy_cascades)
    assert T == pytest.approx(3 * 1.4)
    assert cfg.scale(T) * T == pytest.approx(1.5)
    assert TrainConfig(w=2.0).scale(T) == 2.0
    assert TrainConfig(alpha=0.4, decay=1.0).stepsize(3) == pytest.approx(0.1)


def test_bipartite_views(toy_cascades):
    neg = sample_negatives(toy_cascades, 10, 2, seed=0)
    bg = build_bipartite(toy_cascades, neg, 9.0)
    assert bg.n_edges == sum(c.size for c in toy_cascades) + 2 * 5
    for u in range(10):
        cs = [c for c, _ in bg.node_edges(u)]
        assert cs == sorted(cs)
    assert dict(bg.cascade_edges(0))[2] == 0.9
    assert all(t == 9.0 for u, t in bg.cascade_edges(1) if u in neg[1])


def test_bipartite_rejects_overlap(toy_cascades):
    neg = sample_negatives(toy_cascades, 10, 2, seed=0)
    neg.sets[0] = np.array([0, 9])
    with pytest.raises(InputError):
        build_bipartite(toy_cascades, neg, 9.0)


@pytest.mark.parametrize("clip", [0.0, 0.05])
def test_sweep_matches_reference(toy_cascades, clip):
    cfg = TrainConfig(d=3, m=4, init_scale=0.5, seed=3)
    _, bg, params = prepare(toy_cascades, cfg, 10, None)
    ref = params.copy()
    sweep(bg, params, 0.2, clip)
    reference_sweep(bg, ref, 0.2, clip)
    np.testing.assert_allclose(params.A, ref.A, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(params.M, ref.M, rtol=1e-12, atol=1e-14)


def test_trace_increases_with_small_steps(small_cascades):
    res = train(small_cascades, TrainConfig(alpha=0.02, iterations=20, d=5, clip=None, early_stop=False))
    tr = np.array(res.trace)
    assert len(tr) == 21
    assert np.all(np.diff(tr) >= -1e-6 * np.abs(tr[1:]))
    assert tr[-1] > tr[0]


def test_training_is_deterministic(small_cascades):
    cfg = TrainConfig(iterations=5, d=5, seed=4)
    a, b = train(small_cascades, cfg), train(small_cascades, cfg)
    assert a.params.same_as(b.params)
    assert a.trace == b.trace


def test_early_stop(small_cascades):
    res = train(small_cascades, TrainConfig(alpha=1e-9, iterations=50, d=5, stop_patience=2))
    assert res.iterations_run == 2


def test_callback_sees_every_iteration(small_cascades):
    seen = []
    train(small_cascades, TrainConfig(iterations=4, d=5, early_stop=False),
          callback=lambda it, p: seen.append(it))
    assert seen == [1, 2, 3, 4]


def test_divergence_raises_training_error(small_cascades):
    with pytest.raises(TrainingError) as err:
        train(small_cascades, TrainConfig(alpha=1e300, iterations=5, d=5, init_scale=1.0, clip=None))
    assert err.value.iteration is not None


def test_prepare_errors(toy_cascades):
    with pytest.raises(InputError):
        train([], TrainConfig())
    with pytest.raises(ConfigError):
        train(toy_cascades, TrainConfig(T=1.0, d=3))
