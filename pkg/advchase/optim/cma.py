"""Covariance Matrix Adaptation Evolution Strategy.

Minimization, positive recombination weights over the best mu = lambda // 2,
rank-one plus rank-mu covariance update and cumulative step-size adaptation,
with the default strategy constants of the CMA-ES tutorial. The state is
plain data so it can be checkpointed and resumed bit for bit.
"""
import copy
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

__all__ = ["CmaConfig", "CmaState", "cma_init", "ask", "tell", "best", "EIGEN_FLOOR"]

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-14


@dataclass
class CmaConfig:
    dim: int
    population: int
    initial_sigma: float
    initial_mean: Optional[np.ndarray] = None
    seed: int = 0
    max_iterations: int = 1000

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.population < 4:
            raise ValueError(f"population must be >= 4, got {self.population}")
        if not (self.initial_sigma > 0 and math.isfinite(self.initial_sigma)):
            raise ValueError(f"initial_sigma must be a positive finite number, got {self.initial_sigma}")
        if self.initial_mean is None:
            self.initial_mean = np.zeros(self.dim)
        self.initial_mean = np.asarray(self.initial_mean, dtype=np.float64)
        if self.initial_mean.shape != (self.dim,):
            raise ValueError(f"initial_mean has shape {self.initial_mean.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(self.initial_mean)):
            raise ValueError("initial_mean contains non-finite entries")


@dataclass
class StrategyParams:
    lam: int
    mu: int
    weights: np.ndarray
    mueff: float
    cc: float
    cs: float
    c1: float
    cmu: float
    damps: float
    chi_n: float
    eigen_gap: int

    @classmethod
    def defaults(cls, n: int, lam: int) -> "StrategyParams":
        mu = lam // 2
        w = math.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
        w = w / w.sum()
        mueff = 1.0 / float(np.sum(w ** 2))
        cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
        cs = (mueff + 2) / (n + mueff + 5)
        c1 = 2 / ((n + 1.3) ** 2 + mueff)
        cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
        damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n ** 2))
        eigen_gap = max(1, math.ceil(1 / (10 * n * (c1 + cmu))))
        return cls(lam, mu, w, mueff, cc, cs, c1, cmu, damps, chi_n, eigen_gap)


@dataclass
class CmaState:
    params: StrategyParams
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    ps: np.ndarray
    pc: np.ndarray
    # eigensystem of C as of iteration eigen_iteration: C = B diag(D**2) B^T
    B: np.ndarray
    D: np.ndarray
    eigen_iteration: int
    rng: np.random.Generator
    iteration: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf
    last_best: float = math.nan
    last_median: float = math.nan
    events: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def trace(self):
        return {"iteration": self.iteration, "best": self.last_best,
                "median": self.last_median, "sigma": self.sigma}

    def copy(self) -> "CmaState":
        return copy.deepcopy(self)

    def _event(self, message):
        logger.warning(f"cma iteration {self.iteration}: {message}")
        self.events.append((self.iteration, message))


def cma_init(cfg: CmaConfig) -> CmaState:
    n = cfg.dim
    params = StrategyParams.defaults(n, cfg.population)
    return CmaState(
        params=params,
        mean=cfg.initial_mean.copy(),
        sigma=float(cfg.initial_sigma),
        C=np.eye(n),
        ps=np.zeros(n),
        pc=np.zeros(n),
        B=np.eye(n),
        D=np.ones(n),
        eigen_iteration=0,
        rng=np.random.Generator(np.random.PCG64(cfg.seed)),
    )


def _update_eigensystem(state: CmaState, force=False):
    if not force and state.iteration - state.eigen_iteration < state.params.eigen_gap:
        return
    C = (state.C + state.C.T) / 2
    d2, B = np.linalg.eigh(C)
    if not np.all(np.isfinite(d2)) or d2.min() <= EIGEN_FLOOR:
        state._event(f"covariance not positive definite (min eigenvalue {d2.min():.3e}), floored at {EIGEN_FLOOR}")
        d2 = np.maximum(np.nan_to_num(d2, nan=EIGEN_FLOOR), EIGEN_FLOOR)
        C = (B * d2) @ B.T
        C = (C + C.T) / 2
    state.C = C
    state.B = B
    state.D = np.sqrt(d2)
    state.eigen_iteration = state.iteration


def ask(state: CmaState) -> List[np.ndarray]:
    _update_eigensystem(state)
    z = state.rng.standard_normal((state.params.lam, state.dim))
    y = (z * state.D) @ state.B.T
    x = state.mean + state.sigma * y
    return [row.copy() for row in x]


def tell(state: CmaState, candidates, fitnesses) -> CmaState:
    """Update the distribution from evaluated candidates (lower is better).

    Mutates and returns ``state``. Only the ranking of ``fitnesses`` enters
    the update.
    """
    par = state.params
    f = np.asarray(fitnesses, dtype=np.float64)
    if len(candidates) != par.lam or f.shape != (par.lam,):
        raise ValueError(f"expected {par.lam} candidates and fitnesses, "
                         f"got {len(candidates)} and {f.shape[0] if f.ndim else 0}")
    if np.any(np.isnan(f)):
        raise ValueError("fitness contains NaN")
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness contains infinite values")
    X = np.asarray(candidates, dtype=np.float64)
    if X.shape != (par.lam, state.dim):
        raise ValueError(f"candidates have shape {X.shape}, expected {(par.lam, state.dim)}")

    order = np.argsort(f, kind="stable")
    if f[order[0]] < state.best_f or state.best_x is None:
        state.best_f = float(f[order[0]])
        state.best_x = X[order[0]].copy()
    state.last_best = float(f[order[0]])
    state.last_median = float(np.median(f))
    n = state.dim

    if f[order[0]] == f[order[-1]]:
        # no ranking information: keep the distribution, widen the search
        state._event("flat fitness, sigma increased")
        state.sigma *= math.exp(0.2 + par.cs / par.damps)
        state.iteration += 1
        return state

    old_mean = state.mean
    Y = (X[order[:par.mu]] - old_mean) / state.sigma
    y_w = par.weights @ Y
    state.mean = old_mean + state.sigma * y_w

    # C^{-1/2} y_w with the current eigensystem
    c_inv_sqrt_yw = state.B @ ((state.B.T @ y_w) / state.D)
    state.ps = (1 - par.cs) * state.ps + math.sqrt(par.cs * (2 - par.cs) * par.mueff) * c_inv_sqrt_yw
    ps_norm = float(np.linalg.norm(state.ps))
    hsig = ps_norm / math.sqrt(1 - (1 - par.cs) ** (2 * (state.iteration + 1))) \
        < (1.4 + 2 / (n + 1)) * par.chi_n
    hsig = 1.0 if hsig else 0.0
    state.pc = (1 - par.cc) * state.pc + hsig * math.sqrt(par.cc * (2 - par.cc) * par.mueff) * y_w

    delta_h = (1 - hsig) * par.cc * (2 - par.cc)
    C = (1 + par.c1 * delta_h - par.c1 - par.cmu * par.weights.sum()) * state.C
    C += par.c1 * np.outer(state.pc, state.pc)
    C += par.cmu * (Y.T * par.weights) @ Y
    state.C = (C + C.T) / 2

    state.sigma *= math.exp((par.cs / par.damps) * (ps_norm / par.chi_n - 1))
    state.iteration += 1
    if not (math.isfinite(state.sigma) and np.all(np.isfinite(state.mean))):
        raise FloatingPointError(f"cma state diverged at iteration {state.iteration}")
    return state


def best(state: CmaState):
    """Best-so-far (x, f); (None, inf) before the first tell."""
    if state.best_x is None:
        return None, math.inf
    return state.best_x.copy(), state.best_f
