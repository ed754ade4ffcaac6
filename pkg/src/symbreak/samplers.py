"""Generative samplers driven by the exact score.

All samplers walk a grid of forward times equally spaced from s_start down
to 0, with the final node replaced by s_min (the s = 0 kernel is atomic),
and finish with a posterior-mean jump E[Y0 | x] at s_min.  Chain i draws
all of its randomness from the counter-based stream keyed (seed, i), so a
batch is bit-reproducible regardless of execution order or thread count.

Initialization is either a standard normal or a moment-matched Gaussian
("gls"): mean theta*mean(data), covariance theta^2*Cov(data) + (1-theta^2)I,
the exact first two moments of the noised marginal at s_start.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (DivergedError, DomainError, FactorizationError,
                     ShapeError)
from .exact_score import ExactScoreModel
from .rng import stream

_KINDS = ("stochastic_sde", "ancestral_ddpm", "ddim")
_INITS = ("standard_normal", "gls")


@dataclass(frozen=True)
class SamplerConfig:
    kind: str
    n_steps: int
    s_start: float
    init: str = "standard_normal"
    s_min: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown sampler kind {self.kind!r}; "
                              f"expected one of {_KINDS}")
        if self.init not in _INITS:
            raise DomainError(f"unknown init {self.init!r}; "
                              f"expected one of {_INITS}")
        if self.n_steps < 1:
            raise DomainError("n_steps must be >= 1")
        if not 0 < self.s_min < self.s_start:
            raise DomainError("need 0 < s_min < s_start")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")


@dataclass(frozen=True)
class GaussianInit:
    mean: np.ndarray
    covariance: np.ndarray
    cholesky: np.ndarray
    jittered: bool = False


@dataclass(frozen=True)
class SamplerRun:
    config: SamplerConfig
    s_grid: np.ndarray  # forward times, s_start down to s_min, n_steps+1 nodes
    finals: np.ndarray  # (S, D) after the posterior-mean jump
    trajectories: Optional[np.ndarray] = None  # (S, n_steps+1, D) grid states


def forward_sample(model: ExactScoreModel, s: float, n: int,
                   seed: int) -> np.ndarray:
    """n exact draws from the noised marginal at forward time s."""
    if n < 1:
        raise DomainError("forward_sample requires n >= 1")
    theta, var = model._s_forward(s)
    rng = stream(seed)
    idx = rng.integers(0, model.dataset.n_points, size=n)
    return (theta * model.dataset.points[idx]
            + np.sqrt(var) * rng.standard_normal((n, model.dataset.dim)))


def gls_init(model: ExactScoreModel, s_start: float, *,
             mc_draws: int | None = None, mc_seed: int = 0) -> GaussianInit:
    """Moment-matched Gaussian at s_start, exact by default.

    mc_draws switches to a Monte Carlo moment estimate from forward draws;
    that path exists only so tests can validate the closed form.
    """
    theta, var = model._s_forward(s_start)
    pts = model.dataset.points
    if mc_draws is None:
        mean = theta * pts.mean(axis=0)
        cov = theta * theta * np.cov(pts, rowvar=False, ddof=0).reshape(
            model.dataset.dim, model.dataset.dim) + var * np.eye(model.dataset.dim)
    else:
        draws = forward_sample(model, s_start, mc_draws, mc_seed)
        mean = draws.mean(axis=0)
        cov = np.cov(draws, rowvar=False, ddof=0).reshape(
            model.dataset.dim, model.dataset.dim)
    jittered = False
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jittered = True
        try:
            chol = np.linalg.cholesky(cov + 1e-10 * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                "init covariance not factorizable even after 1e-10 jitter") from exc
    return GaussianInit(mean, cov, chol, jittered)


def _build_grid(model: ExactScoreModel, config: SamplerConfig) -> np.ndarray:
    grid = model.schedule.discrete_grid(config.n_steps, config.s_start)
    if config.n_steps > 1 and grid[-2] <= config.s_min:
        raise DomainError(
            f"s_min={config.s_min} is not below the last interior node "
            f"{grid[-2]:.3g}; reduce s_min or n_steps")
    grid = grid.copy()
    grid[-1] = config.s_min
    return grid


def _draw_chains(model: ExactScoreModel, config: SamplerConfig, batch: int,
                 n_noise: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-chain init states and step noise from streams keyed (seed, chain)."""
    d = model.dataset.dim
    if config.init == "gls":
        ginit = gls_init(model, config.s_start)
    init = np.empty((batch, d))
    noise = np.empty((batch, n_noise, d)) if n_noise else np.empty((batch, 0, d))
    for i in range(batch):
        rng = stream(config.seed, i)
        z = rng.standard_normal(d)
        init[i] = ginit.mean + ginit.cholesky @ z if config.init == "gls" else z
        if n_noise:
            noise[i] = rng.standard_normal((n_noise, d))
    return init, noise


def _check_finite(X: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(X)):
        raise DivergedError(f"sampler state became non-finite at step {step}")


def _run(model: ExactScoreModel, config: SamplerConfig, batch: int,
         keep_trajectories: bool) -> SamplerRun:
    if batch < 1:
        raise DomainError("batch must be >= 1")
    grid = _build_grid(model, config)
    stochastic = config.kind != "ddim"
    X, noise = _draw_chains(model, config, batch,
                            config.n_steps if stochastic else 0)
    sched = model.schedule
    traj = None
    if keep_trajectories:
        traj = np.empty((batch, config.n_steps + 1, model.dataset.dim))
        traj[:, 0] = X
    for i in range(config.n_steps):
        s, s_next = float(grid[i]), float(grid[i + 1])
        if config.kind == "stochastic_sde":
            beta = sched.beta_at(s)
            dt = s - s_next
            X = (X + beta * (model.score_batch(X, s) + 0.5 * X) * dt
                 + np.sqrt(beta * dt) * noise[:, i])
        elif config.kind == "ancestral_ddpm":
            th, th_next = sched.theta_at(s), sched.theta_at(s_next)
            abar, abar_next = th * th, th_next * th_next
            alpha_step = abar / abar_next
            beta_step = 1.0 - alpha_step
            x0 = model.posterior_mean_batch(X, s)
            mean = (np.sqrt(abar_next) * beta_step * x0
                    + np.sqrt(alpha_step) * (1.0 - abar_next) * X) / (1.0 - abar)
            std = np.sqrt(beta_step * (1.0 - abar_next) / (1.0 - abar))
            X = mean + std * noise[:, i]
        else:  # ddim
            th, th_next = sched.theta_at(s), sched.theta_at(s_next)
            x0 = model.posterior_mean_batch(X, s)
            eps = (X - th * x0) / np.sqrt(1.0 - th * th)
            X = th_next * x0 + np.sqrt(1.0 - th_next * th_next) * eps
        _check_finite(X, i)
        if traj is not None:
            traj[:, i + 1] = X
    finals = model.posterior_mean_batch(X, float(grid[-1]))
    return SamplerRun(config, grid, finals, traj)


def sample_stochastic(model: ExactScoreModel, config: SamplerConfig,
                      batch: int, *, keep_trajectories: bool = False) -> SamplerRun:
    """Euler-Maruyama reverse SDE, or the ancestral transition-kernel variant."""
    if config.kind not in ("stochastic_sde", "ancestral_ddpm"):
        raise DomainError("sample_stochastic handles the stochastic kinds; "
                          "use sample_ddim for ddim")
    return _run(model, config, batch, keep_trajectories)


def sample_ddim(model: ExactScoreModel, config: SamplerConfig,
                batch: int, *, keep_trajectories: bool = False) -> SamplerRun:
    """Deterministic probability-flow stepper (eta = 0); random only in init."""
    if config.kind != "ddim":
        raise DomainError("sample_ddim requires kind='ddim'")
    return _run(model, config, batch, keep_trajectories)


def run_sampler(model: ExactScoreModel, config: SamplerConfig, batch: int, *,
                keep_trajectories: bool = False) -> SamplerRun:
    if config.kind == "ddim":
        return sample_ddim(model, config, batch,
                           keep_trajectories=keep_trajectories)
    return sample_stochastic(model, config, batch,
                             keep_trajectories=keep_trajectories)


@dataclass(frozen=True)
class SweepResult:
    s_start_grid: np.ndarray
    values: np.ndarray  # (repeats, n_grid)

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def std(self) -> np.ndarray:
        return self.values.std(axis=0, ddof=1) if self.values.shape[0] > 1 \
            else np.zeros(self.values.shape[1])


def late_start_sweep(model: ExactScoreModel, kind: str, n_steps: int,
                     s_start_grid, metric: Callable[[np.ndarray], float], *,
                     init: str = "standard_normal", batch: int = 1000,
                     seed: int = 0, repeats: int = 1,
                     s_min: float = 1e-4) -> SweepResult:
    """Run the sampler at each s_start and score the finals with `metric`.

    Repeat r uses seed+r for every grid point (common random numbers across
    the grid, independent across repeats).
    """
    grid = np.asarray(s_start_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ShapeError("s_start_grid must be a nonempty 1D array")
    if repeats < 1:
        raise DomainError("repeats must be >= 1")
    values = np.empty((repeats, grid.size))
    for r in range(repeats):
        for i, s0 in enumerate(grid):
            cfg = SamplerConfig(kind=kind, n_steps=n_steps, s_start=float(s0),
                                init=init, s_min=s_min, seed=seed + r)
            run = run_sampler(model, cfg, batch)
            values[r, i] = float(metric(run.finals))
    return SweepResult(grid, values)


@dataclass(frozen=True)
class KneeEstimate:
    s_start: float
    index: int
    second_difference: float
    low_confidence: bool


def estimate_knee(s_start_grid, metric_values) -> KneeEstimate:
    """Grid point maximizing the discrete second difference of the curve.

    Ties break toward the largest s_start.  A curve with no curvature
    (max second difference tiny relative to the values) is flagged
    low-confidence.
    """
    s = np.asarray(s_start_grid, dtype=np.float64)
    y = np.asarray(metric_values, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeError("grid and values must be 1D arrays of equal length")
    if s.size < 5:
        raise DomainError("estimate_knee requires at least 5 grid points")
    h_lo = s[1:-1] - s[:-2]
    h_hi = s[2:] - s[1:-1]
    d2 = 2.0 * ((y[2:] - y[1:-1]) / h_hi - (y[1:-1] - y[:-2]) / h_lo) / (h_hi + h_lo)
    best = int(np.flatnonzero(d2 == d2.max())[-1])
    scale = max(1.0, float(np.max(np.abs(y))))
    low = bool(d2[best] <= 1e-12 + 1e-6 * scale)
    return KneeEstimate(float(s[best + 1]), best + 1, float(d2[best]), low)
