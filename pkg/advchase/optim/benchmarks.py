import numpy as np

__all__ = ["sphere", "rosenbrock", "ellipsoid", "minimize"]


def sphere(x):
    x = np.asarray(x)
    return float(np.dot(x, x))


def rosenbrock(x):
    x = np.asarray(x)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def ellipsoid(x):
    x = np.asarray(x)
    n = x.shape[0]
    scales = 1e6 ** (np.arange(n) / max(n - 1, 1))
    return float(np.dot(scales, x ** 2))


def minimize(fn, cfg, target=-np.inf):
    """Plain ask/tell loop; returns the final state and the per-iteration best-so-far."""
    from .cma import cma_init, ask, tell
    state = cma_init(cfg)
    history = []
    for _ in range(cfg.max_iterations):
        xs = ask(state)
        tell(state, xs, [fn(x) for x in xs])
        history.append(state.best_f)
        if state.best_f < target:
            break
    return state, history
