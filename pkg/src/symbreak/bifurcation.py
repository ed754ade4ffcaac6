"""Fixed points of the generative drift and their bifurcations.

Fixed points solve x = (2*theta/(1+theta^2)) * E_w[Y | x], the
self-consistency condition obtained by setting the generative drift
-grad u to zero at fixed theta.  For the two-point 1D dataset this
reduces to (theta^2+1) x = 2*theta*tanh(theta*x/(1-theta^2)), a pitchfork:
one root below the critical theta, three above.  The critical values come
from the sign change of the potential's curvature at the origin.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from .datasets import EmpiricalDataset
from .errors import DomainError, ShapeError
from .exact_score import ExactScoreModel
from .rng import stream

# Eigenvalues within this relative band of zero count as marginal when
# labeling stability (rings of fixed points have near-zero tangential modes).
_EIG_BAND = 1e-9
_NEAR_CRITICAL = 1e-12


@dataclass(frozen=True)
class FixedPoint:
    x: np.ndarray
    stability: str  # "stable" | "unstable" | "saddle"
    near_critical: bool = False


@dataclass(frozen=True)
class FixedPointBranch:
    label: str  # "zero" | "upper" | "lower"
    thetas: np.ndarray
    points: np.ndarray  # (M, D)
    stability: tuple[str, ...]


@dataclass(frozen=True)
class GeneralFixedPoints:
    points: tuple[FixedPoint, ...]
    n_seeds: int
    failed_seeds: tuple[int, ...]  # seed indices that exhausted the budget


def critical_theta_1d() -> float:
    """Signal level where the origin loses stability for the {-1,+1} dataset."""
    return float(np.sqrt(np.sqrt(2.0) - 1.0))


def critical_theta_sphere(d: int, r: float) -> float:
    """Origin sign-flip level for centered radius-r data in d dimensions.

    sqrt((sqrt(d^2 + r^4) - r^2) / d); reduces to critical_theta_1d at
    d = r = 1.
    """
    if d < 1:
        raise DomainError("critical_theta_sphere requires d >= 1")
    if r <= 0:
        raise DomainError("critical_theta_sphere requires r > 0")
    r2 = r * r
    return float(np.sqrt((np.sqrt(d * d + r2 * r2) - r2) / d))


def _residual_1d(x: float, theta: float) -> float:
    var = 1.0 - theta * theta
    return (1.0 + theta * theta) * x - 2.0 * theta * np.tanh(theta * x / var)


def fixed_points_1d(theta: float) -> list[FixedPoint]:
    """All drift fixed points for the two-point 1D dataset at given theta.

    Nonzero roots are found by bisection on the self-consistency residual;
    theta within 1e-12 of critical returns the origin alone, flagged.
    """
    if not 0 < theta < 1:
        raise DomainError("fixed_points_1d requires theta in (0, 1)")
    tc = critical_theta_1d()
    origin = lambda st, flag=False: FixedPoint(np.zeros(1), st, flag)
    if abs(theta - tc) <= _NEAR_CRITICAL:
        return [origin("stable", True)]
    if theta < tc:
        return [origin("stable")]
    # Above critical: residual is negative just off the origin and positive
    # at 1.5 (tanh is bounded by 1), so a root is bracketed.
    lo, hi = 1e-12, 1.5
    if not _residual_1d(lo, theta) < 0 < _residual_1d(hi, theta):
        raise DomainError(f"root bracket failed at theta={theta}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _residual_1d(mid, theta) < 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return [FixedPoint(np.array([-root]), "stable"),
            origin("unstable"),
            FixedPoint(np.array([root]), "stable")]


def _posterior_weights(dataset: EmpiricalDataset, x: np.ndarray,
                       theta: float) -> np.ndarray:
    var = 1.0 - theta * theta
    d2 = np.sum((x[None, :] - theta * dataset.points) ** 2, axis=1)
    return softmax(-d2 / (2.0 * var))


def _curvature_matrix(dataset: EmpiricalDataset, x: np.ndarray,
                      theta: float) -> np.ndarray:
    """Hessian of the potential at fixed theta, up to the positive beta factor."""
    var = 1.0 - theta * theta
    w = _posterior_weights(dataset, x, theta)
    Y = theta * dataset.points
    mean = w @ Y
    cov = (Y * w[:, None]).T @ Y - np.outer(mean, mean)
    return (1.0 / var - 0.5) * np.eye(dataset.dim) - cov / (var * var)


def _label_stability(eigs: np.ndarray) -> str:
    band = _EIG_BAND * max(1.0, float(np.max(np.abs(eigs))))
    has_neg = bool(np.any(eigs < -band))
    all_neg = bool(np.all(eigs < -band))
    if all_neg:
        return "unstable"
    if has_neg:
        return "saddle"
    return "stable"


def default_seed_points(dataset: EmpiricalDataset, theta: float,
                        n_random: int = 8, seed: int = 0) -> list[np.ndarray]:
    """Origin, each data point scaled by theta, and random directions at the
    dataset's mean radius scaled by theta."""
    pts = [np.zeros(dataset.dim)]
    pts += [theta * y for y in dataset.points]
    rbar = float(np.mean(np.linalg.norm(dataset.points, axis=1)))
    rng = stream(seed)
    for _ in range(n_random):
        v = rng.standard_normal(dataset.dim)
        nrm = np.linalg.norm(v)
        if nrm > 0:
            pts.append(theta * rbar * v / nrm)
    return pts


def fixed_points_general(model: ExactScoreModel, theta: float,
                         seeds: list | None = None, *, damping: float = 0.5,
                         tol: float = 1e-10, max_iter: int = 10000,
                         dedup: float = 1e-6) -> GeneralFixedPoints:
    """Damped self-consistency iteration from multiple starting points.

    Each seed runs x <- (1-damping)*x + damping*(2 theta/(1+theta^2)) E_w[Y|x]
    until the step norm drops below tol.  Converged points are deduplicated
    at distance `dedup` and labeled by the eigenvalues of the analytic
    curvature matrix.  Seeds that exhaust the budget are reported, not fatal.
    """
    if not 0 < theta < 1:
        raise DomainError("fixed_points_general requires theta in (0, 1)")
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    dataset = model.dataset
    if seeds is None:
        seeds = default_seed_points(dataset, theta)
    gain = 2.0 * theta / (1.0 + theta * theta)
    found: list[np.ndarray] = []
    failed: list[int] = []
    for idx, x0 in enumerate(seeds):
        x = np.asarray(x0, dtype=np.float64).copy()
        if x.shape != (dataset.dim,):
            raise ShapeError(f"seed {idx} has shape {x.shape}, "
                             f"expected ({dataset.dim},)")
        for _ in range(max_iter):
            target = gain * (_posterior_weights(dataset, x, theta) @ dataset.points)
            step = damping * (target - x)
            x = x + step
            if np.linalg.norm(step) < tol:
                break
        else:
            failed.append(idx)
            continue
        if not any(np.linalg.norm(x - p) < dedup for p in found):
            found.append(x)
    pts = tuple(
        FixedPoint(x, _label_stability(
            np.linalg.eigvalsh(_curvature_matrix(dataset, x, theta))))
        for x in found)
    return GeneralFixedPoints(pts, len(seeds), tuple(failed))


def bifurcation_diagram_1d(theta_grid) -> list[FixedPointBranch]:
    """Solution branches of the 1D pitchfork over a theta grid."""
    thetas = np.asarray(theta_grid, dtype=np.float64)
    if thetas.ndim != 1 or thetas.size == 0:
        raise ShapeError("theta_grid must be a nonempty 1D array")
    zero_st, up_t, up_x, lo_t, lo_x = [], [], [], [], []
    for th in thetas:
        pts = fixed_points_1d(float(th))
        by_sign = {float(np.sign(p.x[0])): p for p in pts}
        zero_st.append(by_sign[0.0].stability)
        if 1.0 in by_sign:
            up_t.append(th)
            up_x.append(by_sign[1.0].x)
            lo_t.append(th)
            lo_x.append(by_sign[-1.0].x)
    branches = [FixedPointBranch("zero", thetas.copy(),
                                 np.zeros((thetas.size, 1)), tuple(zero_st))]
    if up_t:
        branches.append(FixedPointBranch(
            "upper", np.array(up_t), np.array(up_x), ("stable",) * len(up_t)))
        branches.append(FixedPointBranch(
            "lower", np.array(lo_t), np.array(lo_x), ("stable",) * len(lo_t)))
    return branches


def drift_field(model: ExactScoreModel, probes) -> np.ndarray:
    """Generative drift -grad u at each (x, theta) probe.

    theta must be reachable by the model's schedule (it is converted to a
    forward time internally).
    """
    out = []
    T = model.schedule.horizon
    for x, theta in probes:
        s = model.schedule.invert_theta(float(theta))
        if s == 0.0:
            raise DomainError("theta = 1 is a degenerate probe")
        out.append(-model.potential_gradient(np.asarray(x, dtype=float), T - s))
    return np.array(out)


def write_branches_csv(branches: list[FixedPointBranch], path) -> None:
    """One row per (branch, theta): branch, theta, x_0..x_{D-1}, stability."""
    if not branches:
        raise ShapeError("no branches to write")
    dim = branches[0].points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["branch", "theta"]
                        + [f"x_{i}" for i in range(dim)] + ["stability"])
        for br in branches:
            for th, x, st in zip(br.thetas, br.points, br.stability):
                writer.writerow([br.label, format(th, ".17g")]
                                + [format(v, ".17g") for v in x] + [st])
