"""Exact score and potential for diffusion over a finite dataset.

With a variance-preserving forward kernel, the noised marginal of an
empirical dataset {y_j} is the Gaussian mixture

    p(x, s) = (1/N) sum_j Normal(x; theta*y_j, (1 - theta^2) I),  theta = theta(s),

so the score, the generative potential, and all its derivatives are
available in closed form.  Posterior weights over data points are softmax
of -|x - theta*y_j|^2 / (2*(1-theta^2)); every log-density goes through
max-subtracted log-sum-exp so saturated regimes (theta near 1) stay finite.

The potential u(x, t) at generative time t (forward time s = T - t) is

    u = beta(s) * ( -|x|^2/4 - logsumexp_j( -|x - theta*y_j|^2 / (2*(1-theta^2)) ) )

with the mixture's 1/N and the Gaussian normalizer dropped (they are
x-independent and would only shift u by a constant).  Its negative gradient
is the generative drift: -grad u = beta * score + beta * x / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .datasets import EmpiricalDataset
from .errors import DomainError, ShapeError
from .schedule import VpSchedule


@dataclass(frozen=True)
class ScoreEval:
    """One score evaluation: log-density, score vector, posterior weights."""

    log_density: float
    score: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class ExactScoreModel:
    dataset: EmpiricalDataset
    schedule: VpSchedule

    def _s_forward(self, s: float) -> tuple[float, float]:
        """theta and kernel variance at forward time s; s = 0 is degenerate."""
        if not 0 < s <= self.schedule.horizon:
            raise DomainError(
                f"forward time must lie in (0, {self.schedule.horizon}]; "
                f"the s = 0 kernel is atomic")
        theta = self.schedule.theta_at(s)
        return theta, 1.0 - theta * theta

    def _s_of_t(self, t: float) -> float:
        T = self.schedule.horizon
        if not 0 <= t < T:
            raise DomainError(f"generative time must lie in [0, {T})")
        return T - t

    def _as_batch(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.dataset.dim:
            raise ShapeError(
                f"state must have dimension {self.dataset.dim}, got shape {np.shape(x)}")
        return X

    def _log_kernels(self, X: np.ndarray, s: float):
        """Matrix a_ij = -|x_i - theta*y_j|^2 / (2 var) plus (theta, var)."""
        theta, var = self._s_forward(s)
        Y = self.dataset.points
        sq = (np.sum(X * X, axis=1)[:, None]
              - 2.0 * theta * (X @ Y.T)
              + theta * theta * np.sum(Y * Y, axis=1)[None, :])
        np.maximum(sq, 0.0, out=sq)  # guard cancellation at x ~ theta*y_j
        return -sq / (2.0 * var), theta, var

    # -- density and score -------------------------------------------------

    def mixture_logpdf_batch(self, X, s: float) -> np.ndarray:
        X = self._as_batch(X)
        a, _, var = self._log_kernels(X, s)
        n, d = self.dataset.n_points, self.dataset.dim
        return (logsumexp(a, axis=1) - np.log(n)
                - 0.5 * d * np.log(2.0 * np.pi * var))

    def mixture_logpdf(self, x, s: float) -> float:
        return float(self.mixture_logpdf_batch(x, s)[0])

    def posterior_weights_batch(self, X, s: float) -> np.ndarray:
        X = self._as_batch(X)
        a, _, _ = self._log_kernels(X, s)
        return softmax(a, axis=1)

    def score_batch(self, X, s: float) -> np.ndarray:
        """Gradient of log p(x, s) wrt x: sum_j w_j (theta*y_j - x) / var."""
        X = self._as_batch(X)
        a, theta, var = self._log_kernels(X, s)
        W = softmax(a, axis=1)
        return (theta * (W @ self.dataset.points) - X) / var

    def posterior_mean_batch(self, X, s: float) -> np.ndarray:
        """Denoiser output E[Y0 | x at time s] = sum_j w_j y_j."""
        X = self._as_batch(X)
        a, _, _ = self._log_kernels(X, s)
        return softmax(a, axis=1) @ self.dataset.points

    def score(self, x, s: float) -> ScoreEval:
        X = self._as_batch(x)
        a, theta, var = self._log_kernels(X, s)
        W = softmax(a, axis=1)
        n, d = self.dataset.n_points, self.dataset.dim
        logpdf = (logsumexp(a, axis=1) - np.log(n)
                  - 0.5 * d * np.log(2.0 * np.pi * var))
        sc = (theta * (W @ self.dataset.points) - X) / var
        return ScoreEval(float(logpdf[0]), sc[0], W[0])

    # -- potential and curvature -------------------------------------------

    def potential_batch(self, X, t: float) -> np.ndarray:
        s = self._s_of_t(t)
        X = self._as_batch(X)
        a, _, _ = self._log_kernels(X, s)
        beta = self.schedule.beta_at(s)
        return beta * (-0.25 * np.sum(X * X, axis=1) - logsumexp(a, axis=1))

    def potential(self, x, t: float) -> float:
        return float(self.potential_batch(x, t)[0])

    def potential_gradient_batch(self, X, t: float) -> np.ndarray:
        """grad u = -beta * (score + x/2); -grad u is the generative drift."""
        s = self._s_of_t(t)
        X = self._as_batch(X)
        beta = self.schedule.beta_at(s)
        return -beta * (self.score_batch(X, s) + 0.5 * X)

    def potential_gradient(self, x, t: float) -> np.ndarray:
        return self.potential_gradient_batch(x, t)[0]

    def second_derivative_origin_1d(self, t: float) -> float:
        """Closed-form d^2u/dx^2 at x = 0 for the two-point dataset {-1, +1}.

        Vanishes exactly at theta = sqrt(sqrt(2) - 1); negative above
        (double well), positive below (single well).
        """
        ds = self.dataset
        if ds.dim != 1 or ds.n_points != 2 or not ds.centered \
                or abs(ds.radius - 1.0) > 1e-12:
            raise ShapeError(
                "second_derivative_origin_1d requires the two-point dataset {-1, +1}")
        s = self._s_of_t(t)
        theta, var = self._s_forward(s)
        beta = self.schedule.beta_at(s)
        return float(-beta * (0.5 + (2.0 * theta * theta - 1.0) / (var * var)))

    def laplacian_origin(self, t: float) -> float:
        """Closed-form Laplacian of u at the origin for centered norm-r data.

        -beta * ( D/2 + ((D + r^2) theta^2 - D) / (theta^2 - 1)^2 ).
        Sign encodes origin stability; the flip defines the critical theta.
        """
        ds = self.dataset
        if not ds.centered or ds.radius <= 0:
            raise DomainError(
                "laplacian_origin requires a centered dataset with a norm certificate")
        s = self._s_of_t(t)
        theta, var = self._s_forward(s)
        beta = self.schedule.beta_at(s)
        d = float(ds.dim)
        r2 = ds.radius * ds.radius
        return float(-beta * (0.5 * d + ((d + r2) * theta * theta - d) / (var * var)))

    def hessian(self, x, t: float) -> np.ndarray:
        """Analytic Hessian of u via the posterior-covariance identity.

        H = beta * ( (1/(1-theta^2) - 1/2) I - Cov_w[theta Y] / (1-theta^2)^2 ).
        """
        s = self._s_of_t(t)
        X = self._as_batch(x)
        a, theta, var = self._log_kernels(X, s)
        w = softmax(a, axis=1)[0]
        beta = self.schedule.beta_at(s)
        Y = theta * self.dataset.points
        mean = w @ Y
        cov = (Y * w[:, None]).T @ Y - np.outer(mean, mean)
        d = self.dataset.dim
        return beta * ((1.0 / var - 0.5) * np.eye(d) - cov / (var * var))
