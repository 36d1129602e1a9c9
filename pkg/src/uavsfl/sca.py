"""Convex surrogates for the rate and harvested-energy constraints.

The rate ``b log2(1 + p g0 / (b u))`` is replaced by a concave minorant that is
tight at an expansion point, and ``P beta0 / u`` by its tangent line. Logs are
natural throughout; the single 1/ln2 conversion happens in ``surrogate_rate``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .physics import LN2, Allocation

B_FLOOR = 1e3  # Hz
P_FLOOR = 1e-6  # W


def _require_positive(**kw):
    for name, v in kw.items():
        if np.any(np.asarray(v) <= 0):
            raise ValueError(f"{name} must be strictly positive")


def lemma1_rhs(x, y, tau, xb, yb, taub):
    """Lower bound on ``tau * ln(1 + 1/(x y))`` expanded at ``(xb, yb, taub)``."""
    _require_positive(x=x, y=y, tau=tau, xb=xb, yb=yb, taub=taub)
    L = np.log1p(1.0 / (xb * yb))
    return 2.0 * taub * L + taub / (1.0 + xb * yb) * (2.0 - x / xb - y / yb) - taub**2 * L / tau


@dataclass(frozen=True)
class SurrogateCoeffs:
    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    b_bar: np.ndarray
    p_bar: np.ndarray
    u_bar: np.ndarray
    uav_power: float
    beta0: float

    @property
    def K(self) -> int:
        return len(self.lam)


def coeffs_from_point(b_bar, p_bar, u_bar, g0: float, uav_power: float = 0.0, beta0: float = 1.0) -> SurrogateCoeffs:
    b_bar, p_bar, u_bar = (np.asarray(x, dtype=float) for x in (b_bar, p_bar, u_bar))
    _require_positive(b_bar=b_bar, p_bar=p_bar, u_bar=u_bar)
    # snr = p g0 / (b u); the bound's x y equals 1 / snr
    snr = p_bar * g0 / (b_bar * u_bar)
    L = np.log1p(snr)
    lam = 2.0 * b_bar * L
    mu = b_bar / (1.0 + 1.0 / snr)
    nu = b_bar**2 * L
    return SurrogateCoeffs(lam, mu, nu, b_bar, p_bar, u_bar, float(uav_power), float(beta0))


def make_coeffs(prev: Allocation, params) -> SurrogateCoeffs:
    """Coefficients at the previous iterate, after clamping it to the domain floors."""
    _require_positive(b=prev.b, p=prev.p, u=prev.u)
    b = np.maximum(prev.b, B_FLOOR)
    p = np.maximum(prev.p, P_FLOOR)
    u = np.maximum(prev.u, params.u_floor)
    return coeffs_from_point(b, p, u, params.g0, prev.uav_power, params.beta0)


def pi_bound(p, u, p_bar, u_bar):
    """Upper bound ``(u/u_bar + p_bar/p)^2 / 4`` on the ratio ``(u/u_bar)(p_bar/p)``."""
    _require_positive(p=p, u=u, p_bar=p_bar, u_bar=u_bar)
    return 0.25 * (u / u_bar + p_bar / p) ** 2


def surrogate_rate(b, p, u, c: SurrogateCoeffs):
    """Concave minorant of the rate in bits/s."""
    _require_positive(b=b, p=p, u=u)
    pi = pi_bound(p, u, c.p_bar, c.u_bar)
    return (c.lam + c.mu * (2.0 - pi - b / c.b_bar) - c.nu / b) / LN2


def surrogate_rate_grad(b, p, u, c: SurrogateCoeffs):
    """Partial derivatives of ``surrogate_rate`` with respect to (b, p, u)."""
    s = u / c.u_bar + c.p_bar / p
    db = (-c.mu / c.b_bar + c.nu / b**2) / LN2
    dp = c.mu * 0.5 * s * c.p_bar / p**2 / LN2
    du = -c.mu * 0.5 * s / c.u_bar / LN2
    return db, dp, du


def true_rate_g0(b, p, u, g0: float):
    """Rate written with the auxiliary variable: ``b log2(1 + p g0 / (b u))``."""
    return b * np.log1p(p * g0 / (b * u)) / LN2


def phi_linearize(u, u_bar, P, beta0):
    """Tangent of ``P beta0 / u`` at ``u_bar``; a global under-estimator for u > 0."""
    if np.any(np.asarray(u_bar) <= 0):
        raise ValueError("u_bar must be strictly positive")
    if P < 0:
        raise ValueError("P must be nonnegative")
    a = P * beta0 / u_bar
    return a - a / u_bar * (u - u_bar)


def phi_grad(u, u_bar, P, beta0):
    return np.broadcast_to(-P * beta0 / np.asarray(u_bar, dtype=float) ** 2, np.shape(u)).copy()
