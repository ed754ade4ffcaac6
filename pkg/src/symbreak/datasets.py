"""Finite point datasets and their generators.

A dataset is an (N, D) float64 array plus two optional certificates:
`radius` > 0 asserts every point has that Euclidean norm, and `centered`
asserts the points sum to zero.  Both are validated at construction so
downstream closed forms (Laplacian at the origin, critical times) can rely
on them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConvergenceError, DegenerateDataError, DomainError,
                     ParseError, ShapeError)
from .rng import stream

_CERT_TOL = 1e-9


@dataclass(frozen=True)
class EmpiricalDataset:
    points: np.ndarray
    radius: float = 0.0
    centered: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ShapeError("points must be a (N, D) array with N, D >= 1")
        if not np.all(np.isfinite(pts)):
            raise DomainError("points must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        scale = max(1.0, float(np.max(np.abs(pts))))
        if self.centered:
            drift = float(np.max(np.abs(pts.sum(axis=0))))
            if drift >= _CERT_TOL * scale:
                raise DomainError(
                    f"centered flag set but points sum to {drift:.3e}")
        if self.radius > 0:
            err = float(np.max(np.abs(np.linalg.norm(pts, axis=1) - self.radius)))
            if err >= _CERT_TOL * self.radius:
                raise DomainError(
                    f"radius={self.radius} set but norms deviate by {err:.3e}")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def two_point_1d() -> EmpiricalDataset:
    """The canonical 1D dataset {-1, +1}; centered with unit norms."""
    return EmpiricalDataset(np.array([[-1.0], [1.0]]), radius=1.0, centered=True)


def hypersphere(d: int, r: float, n: int, seed: int) -> EmpiricalDataset:
    """n points uniform on the radius-r sphere in d dimensions.

    Gaussian draw followed by radial projection.  The centered flag is not
    set; apply center_and_normalize if the closed forms need it.
    """
    if d < 1:
        raise DomainError("hypersphere requires d >= 1")
    if r <= 0:
        raise DomainError("hypersphere requires r > 0")
    if n < 1:
        raise DomainError("hypersphere requires n >= 1")
    rng = stream(seed)
    pts = rng.standard_normal((n, d))
    norms = np.linalg.norm(pts, axis=1)
    while np.any(norms == 0.0):  # measure zero, but division must be safe
        bad = norms == 0.0
        pts[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(pts, axis=1)
    return EmpiricalDataset(r * pts / norms[:, None], radius=r)


def gaussian_mixture(centers, std: float, n_per_mode: int, seed: int) -> EmpiricalDataset:
    """n_per_mode isotropic Gaussian draws around each center, concatenated."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] < 1:
        raise ShapeError("centers must be a nonempty (K, D) array")
    if std < 0:
        raise DomainError("gaussian_mixture requires std >= 0")
    if n_per_mode < 1:
        raise DomainError("gaussian_mixture requires n_per_mode >= 1")
    rng = stream(seed)
    blocks = [c + std * rng.standard_normal((n_per_mode, centers.shape[1]))
              for c in centers]
    return EmpiricalDataset(np.vstack(blocks))


def center_and_normalize(dataset: EmpiricalDataset, r: float = 1.0,
                         max_iter: int = 100) -> EmpiricalDataset:
    """Project the points onto {zero mean} and {norm r} alternately.

    The two constraints are generally not simultaneously satisfiable in one
    shot, so we alternate until both certificates hold at 1e-9 or the
    iteration budget runs out.
    """
    if r <= 0:
        raise DomainError("center_and_normalize requires r > 0")
    pts = np.array(dataset.points, dtype=np.float64)
    for _ in range(max_iter):
        pts = pts - pts.mean(axis=0)
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateDataError(
                "a point coincides with the centroid; cannot normalize")
        pts = r * pts / norms[:, None]
        scale = max(1.0, float(np.max(np.abs(pts))))
        drift = float(np.max(np.abs(pts.sum(axis=0))))
        norm_err = float(np.max(np.abs(np.linalg.norm(pts, axis=1) - r)))
        if drift < _CERT_TOL * scale and norm_err < _CERT_TOL * r:
            return EmpiricalDataset(pts, radius=r, centered=True)
    raise ConvergenceError(
        f"center_and_normalize did not converge in {max_iter} iterations")


def save_csv(dataset: EmpiricalDataset, path) -> None:
    """Write one point per row, no header, 17 significant digits, LF endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in dataset.points:
            writer.writerow([format(v, ".17g") for v in row])


def load_csv(path) -> EmpiricalDataset:
    """Read a dataset written by save_csv (or any headerless numeric CSV).

    Certificates are not persisted, so the result has radius=0 and
    centered=False; re-derive them with center_and_normalize if needed.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for i, raw in enumerate(csv.reader(fh), start=1):
            if not raw:
                continue
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise ParseError(
                    f"row {i}: expected {width} columns, found {len(raw)}")
            vals = []
            for j, cell in enumerate(raw, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"row {i}, column {j}: not a number: {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return EmpiricalDataset(np.array(rows, dtype=np.float64))
