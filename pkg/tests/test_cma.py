import math

import numpy as np
import pytest

from advchase.optim.benchmarks import ellipsoid, minimize, rosenbrock, sphere
from advchase.optim.cma import EIGEN_FLOOR, CmaConfig, ask, best, cma_init, tell


def test_init_is_identity():
    state = cma_init(CmaConfig(dim=10, population=20, initial_sigma=0.5))
    assert state.sigma == 0.5
    assert np.array_equal(state.C, np.eye(10))
    assert state.params.mu == 10
    assert state.params.weights.sum() == pytest.approx(1.0)


def test_chaser_sized_init():
    state = cma_init(CmaConfig(dim=4674, population=256, initial_sigma=0.1))
    assert state.dim == 4674 and state.params.lam == 256
    assert state.params.eigen_gap > 1


@pytest.mark.parametrize("kwargs", [
    dict(dim=0, population=8, initial_sigma=1.0),
    dict(dim=3, population=3, initial_sigma=1.0),
    dict(dim=3, population=8, initial_sigma=0.0),
    dict(dim=3, population=8, initial_sigma=1.0, initial_mean=np.zeros(4)),
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        CmaConfig(**kwargs)


def test_same_seed_same_candidates():
    a = cma_init(CmaConfig(dim=6, population=8, initial_sigma=0.3, seed=11))
    b = cma_init(CmaConfig(dim=6, population=8, initial_sigma=0.3, seed=11))
    for xa, xb in zip(ask(a), ask(b)):
        assert np.array_equal(xa, xb)


def test_vanishing_sigma_collapses_to_mean():
    state = cma_init(CmaConfig(dim=4, population=8, initial_sigma=1e-300, initial_mean=np.ones(4)))
    for x in ask(state):
        assert np.array_equal(x, np.ones(4))


def test_sample_mean():
    n = 100000
    state = cma_init(CmaConfig(dim=2, population=n, initial_sigma=1.0, initial_mean=[1.0, -2.0], seed=3))
    xs = np.asarray(ask(state))
    assert len(xs) == n
    assert np.all(np.abs(xs.mean(axis=0) - [1.0, -2.0]) < 4.0 / math.sqrt(n))


def test_rank_invariance():
    rng = np.random.default_rng(0)
    for case in range(50):
        dim = int(rng.integers(2, 12))
        cfg = CmaConfig(dim=dim, population=int(rng.integers(4, 16)), initial_sigma=float(rng.uniform(0.1, 2)),
                        initial_mean=rng.normal(size=dim), seed=case)
        a, b = cma_init(cfg), cma_init(cfg)
        for _ in range(3):
            xs = ask(a)
            assert all(np.array_equal(x, y) for x, y in zip(xs, ask(b)))
            f = rng.normal(size=len(xs))
            tell(a, xs, f)
            tell(b, xs, 3 * f + 5)
        assert np.array_equal(a.mean, b.mean)
        assert a.sigma == b.sigma
        assert np.array_equal(a.C, b.C)
        assert np.array_equal(a.ps, b.ps) and np.array_equal(a.pc, b.pc)
        assert np.array_equal(a.best_x, b.best_x)


def test_flat_fitness_keeps_mean():
    state = cma_init(CmaConfig(dim=5, population=10, initial_sigma=0.5, initial_mean=np.arange(5.0)))
    C0 = state.C.copy()
    for _ in range(3):
        xs = ask(state)
        tell(state, xs, np.full(len(xs), 4.2))
    assert np.array_equal(state.mean, np.arange(5.0))
    assert np.array_equal(state.C, C0)
    assert math.isfinite(state.sigma) and state.sigma > 0.5
    assert len(state.events) == 3


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_tell_rejects_non_finite(bad):
    state = cma_init(CmaConfig(dim=3, population=6, initial_sigma=1.0))
    xs = ask(state)
    f = np.zeros(len(xs))
    f[2] = bad
    with pytest.raises(ValueError):
        tell(state, xs, f)
    assert state.iteration == 0


def test_tell_rejects_wrong_count():
    state = cma_init(CmaConfig(dim=3, population=6, initial_sigma=1.0))
    xs = ask(state)
    with pytest.raises(ValueError):
        tell(state, xs[:-1], np.zeros(5))


def test_best():
    state = cma_init(CmaConfig(dim=4, population=8, initial_sigma=1.0, seed=5))
    assert best(state) == (None, math.inf)
    xs = ask(state)
    f = [sphere(x) for x in xs]
    tell(state, xs, f)
    x, fx = best(state)
    assert fx == min(f)
    assert np.array_equal(x, xs[int(np.argmin(f))])

    prev = fx
    for _ in range(30):
        xs = ask(state)
        tell(state, xs, [sphere(x) for x in xs])
        assert best(state)[1] <= prev
        prev = best(state)[1]


def test_covariance_stays_symmetric_positive_definite():
    state = cma_init(CmaConfig(dim=8, population=12, initial_sigma=0.5, initial_mean=np.ones(8), seed=2))
    for _ in range(100):
        xs = ask(state)
        tell(state, xs, [rosenbrock(x) for x in xs])
        assert np.max(np.abs(state.C - state.C.T)) <= 1e-12
        assert np.linalg.eigvalsh(state.C).min() > 0


def test_covariance_repair():
    state = cma_init(CmaConfig(dim=2, population=6, initial_sigma=1.0))
    state.C = np.diag([1.0, -1.0])
    state.eigen_iteration = -100
    xs = ask(state)
    assert all(np.all(np.isfinite(x)) for x in xs)
    assert state.D.min() >= math.sqrt(EIGEN_FLOOR)
    assert any("positive definite" in msg for _, msg in state.events)


def test_determinism():
    def run():
        cfg = CmaConfig(dim=6, population=10, initial_sigma=0.4, initial_mean=np.ones(6), seed=9,
                        max_iterations=40)
        return minimize(rosenbrock, cfg)

    (a, ha), (b, hb) = run(), run()
    assert ha == hb
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.C, b.C) and a.sigma == b.sigma


def test_sphere_convergence():
    hits = 0
    for seed in range(11):
        cfg = CmaConfig(dim=10, population=20, initial_sigma=0.5, initial_mean=np.ones(10), seed=seed,
                        max_iterations=400)
        state, _ = minimize(sphere, cfg, target=1e-10)
        hits += state.best_f < 1e-10
    assert hits >= 9


def test_rosenbrock_convergence():
    hits = 0
    for seed in range(11):
        cfg = CmaConfig(dim=10, population=20, initial_sigma=0.5, seed=seed, max_iterations=3000)
        state, _ = minimize(rosenbrock, cfg, target=1e-6)
        hits += state.best_f < 1e-6
    assert hits >= 6


def test_ellipsoid_learns_scaling():
    hits = 0
    for seed in range(5):
        cfg = CmaConfig(dim=5, population=10, initial_sigma=0.5, initial_mean=np.ones(5), seed=seed,
                        max_iterations=2000)
        state, _ = minimize(ellipsoid, cfg, target=1e-8)
        hits += state.best_f < 1e-8
    assert hits >= 4


def test_trace_and_copy():
    state = cma_init(CmaConfig(dim=3, population=6, initial_sigma=1.0, seed=1))
    xs = ask(state)
    f = [sphere(x) for x in xs]
    tell(state, xs, f)
    t = state.trace()
    assert t["iteration"] == 1 and t["best"] == min(f) and t["median"] == float(np.median(f))
    twin = state.copy()
    for a, b in zip(ask(state), ask(twin)):
        assert np.array_equal(a, b)
