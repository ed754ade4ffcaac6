"""Independent numerical routes and frozen high-precision constants.

Everything here is computed without touching the package's own closed
forms: constants come from 40-digit mpmath evaluations of the defining
expressions, and the helpers implement generic central differences and
quadrature.  Tests compare package output against these as a second route.
"""

from __future__ import annotations

import numpy as np

# exp(-0.25*1^2*(20-0.1) - 0.5*1*0.1) = exp(-5.025), signal left at s=1
THETA_AT_1 = 0.006571586494929615

# exp(-0.25*0.25*19.9 - 0.25*0.1) = exp(-1.26875)
THETA_AT_HALF = 0.28118288079675238

# exp(-0.25*0.04*19.9 - 0.1*0.1/2) = exp(-0.209)
THETA_AT_02 = 0.81139523564341143

# sqrt(sqrt(2) - 1); sign-change level of 1/2 + (2 th^2 - 1)/(1 - th^2)^2
THETA_C_1D = 0.6435942529055826

# sqrt((sqrt(5) - 1)/2); d=2, r=1 instance of sqrt((sqrt(d^2+r^4)-r^2)/d)
THETA_STAR_2_1 = 0.7861513777574233

# root of 4.975 u^2 + 0.05 u + ln(THETA_C_1D) = 0: forward time where the
# default schedule crosses the 1D critical signal level
S_CRITICAL_1D = 0.29264165432814316

# two-point {-1,+1} mixture at s=0.2, x=0.5 (mpmath, 40 digits):
# log(0.5 * (N(0.5; -theta, var) + N(0.5; theta, var))), theta=THETA_AT_02
LOGPDF_TWO_POINT_X05_S02 = -1.1280604181201081
SCORE_TWO_POINT_X05_S02 = 0.50726054066632043
# beta(0.2) * (-x^2/4 - log(exp(-(x+th)^2/(2v)) + exp(-(x-th)^2/(2v))))
POTENTIAL_TWO_POINT_X05_T08 = -0.038854534896336374

LN2 = 0.6931471805599453


def fd_gradient(f, x, h=1e-5):
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_second_diag(f, x, h=1e-4):
    """Central second differences along each axis (the Hessian diagonal)."""
    x = np.asarray(x, dtype=np.float64)
    f0 = f(x)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - 2.0 * f0 + f(x - e)) / (h * h)
    return out


def fd_hessian(f, x, h=1e-4):
    """Full central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros_like(x)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros_like(x)
            ej[j] = h
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej)
                - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h * h)
    return H


def quad_log_theta(s, beta_min=0.1, beta_max=20.0):
    """-0.5 * integral_0^s beta(u) du by adaptive quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda u: beta_min + u * (beta_max - beta_min), 0.0, s,
                  epsabs=1e-12, epsrel=1e-12)
    return -0.5 * val


def mp_theta(s, dps=40):
    """theta(s) for the default schedule via mpmath."""
    import mpmath as mp

    with mp.workdps(dps):
        sm = mp.mpf(repr(float(s)))
        expo = -mp.mpf('0.25') * sm * sm * mp.mpf('19.9') \
            - mp.mpf('0.5') * sm * mp.mpf('0.1')
        return float(mp.e ** expo)


def mp_two_point_logpdf(x, s, dps=40):
    """High-precision two-point {-1,+1} mixture log-density."""
    import mpmath as mp

    with mp.workdps(dps):
        sm = mp.mpf(repr(float(s)))
        th = mp.e ** (-mp.mpf('0.25') * sm * sm * mp.mpf('19.9')
                      - mp.mpf('0.5') * sm * mp.mpf('0.1'))
        var = 1 - th * th
        xm = mp.mpf(repr(float(x)))

        def pdf(m):
            return mp.e ** (-(xm - m) ** 2 / (2 * var)) / mp.sqrt(2 * mp.pi * var)

        return float(mp.log(mp.mpf('0.5') * (pdf(-th) + pdf(th))))
