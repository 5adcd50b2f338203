"""Exponent calculators for dimension distortion under Sobolev-type maps.

All functions are pure. ``sigma`` accepts scalars or arrays of ``tau``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, RegimeError

# tolerance for "tau == tau_star" and branch-agreement comparisons
BRANCH_TOL = 1e-12

REGIMES = ("fully_supercritical", "supercritical", "critical", "undercritical")


@dataclass(frozen=True)
class DistortionParams:
    """Exponent tuple (n, alpha, p[, k, m]) for a potential-space map.

    ``lorentz_mode`` relaxes the regime condition from ``alpha*p > n`` to
    ``alpha*p >= n`` (the integrand lives in the Lorentz space L_{p,1}).
    """

    n: int
    alpha: float
    p: float
    k: Optional[int] = None
    m: Optional[int] = None
    lorentz_mode: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha!r}")
        if not self.p > 1:
            raise DomainError(f"p must be > 1, got {self.p!r}")
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        if self.m is not None and (int(self.m) != self.m or not 1 <= self.m <= self.n):
            raise DomainError(f"m must be an integer in [1, n], got {self.m!r}")

    @property
    def supercritical_regime(self) -> bool:
        ap = self.alpha * self.p
        return ap >= self.n if self.lorentz_mode else ap > self.n

    def check_regime(self):
        if not self.supercritical_regime:
            op = ">=" if self.lorentz_mode else ">"
            raise RegimeError(
                f"alpha*p = {self.alpha * self.p:g} violates alpha*p {op} n = {self.n}"
            )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "p": self.p,
            "k": self.k,
            "m": self.m,
            "lorentz_mode": self.lorentz_mode,
        }


def tau_star(params: DistortionParams) -> float:
    """Critical dimension ``n - (alpha - 1) p``; may be zero or negative."""
    return params.n - (params.alpha - 1.0) * params.p


def sigma(params: DistortionParams, tau):
    """Image exponent sigma(tau).

    Equals ``tau`` for ``tau >= tau_star`` and ``p*tau / (alpha*p - n + tau)``
    below it. The two branches coincide at ``tau_star``.
    """
    params.check_regime()
    t = np.asarray(tau, dtype=float)
    if np.any(~(t > 0)) or np.any(t > params.n):
        raise DomainError(f"tau must lie in (0, {params.n}]")
    ts = tau_star(params)
    denom = params.alpha * params.p - params.n + t
    under = params.p * t / np.where(t < ts, denom, 1.0)
    out = np.where(t < ts, under, t)
    return float(out) if out.ndim == 0 else out


def regime(params: DistortionParams, tau: float) -> str:
    """Classify ``tau`` relative to the critical dimension.

    ``critical`` marks the point where the N-property may fail for L_p data
    (it is recovered under Lorentz data).
    """
    ts = tau_star(params)
    if ts <= 0:
        return "fully_supercritical"
    if abs(tau - ts) <= BRANCH_TOL * max(1.0, abs(ts)):
        return "critical"
    return "supercritical" if tau > ts else "undercritical"


def _check_bridge(n, m, k, alpha):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if int(m) != m or not 1 <= m <= n:
        raise DomainError(f"m must satisfy 1 <= m <= n, got m={m!r}, n={n!r}")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}")


def mu_q(n: int, m: int, k: int, alpha: float, q: float) -> float:
    """Preimage exponent ``n - m + 1 - (k + alpha)(q - m + 1)``.

    Non-positive values stand for the counting measure. ``q = m - 1`` is
    accepted as the closed endpoint.
    """
    _check_bridge(n, m, k, alpha)
    if q < m - 1:
        raise DomainError(f"q must be >= m - 1 = {m - 1}, got {q!r}")
    return n - m + 1 - (k + alpha) * (q - m + 1)


def beta_bar(n: int, m: int, k: int, alpha: float) -> float:
    """Root of ``mu_q``: ``m - 1 + (n - m + 1)/(k + alpha)``."""
    _check_bridge(n, m, k, alpha)
    if k + alpha == 0:
        raise DomainError("k + alpha must be nonzero")
    return m - 1 + (n - m + 1) / (k + alpha)


def astala_exponent(K: float, t: float) -> float:
    """Dimension bound ``2Kt / (2 + (K-1)t)`` for K-quasiconformal images."""
    if not K >= 1:
        raise DomainError(f"K must be >= 1, got {K!r}")
    if not 0 < t < 2:
        raise DomainError(f"t must lie in (0, 2), got {t!r}")
    return 2.0 * K * t / (2.0 + (K - 1.0) * t)


def summary(params: DistortionParams, tau=None, q=None) -> dict:
    """Every applicable exponent for ``params`` as a JSON-ready dict."""
    ts = tau_star(params)
    out = {
        "params": params.to_dict(),
        "tau_star": ts,
        "alpha_p_minus_n": params.alpha * params.p - params.n,
        "regime_ok": params.supercritical_regime,
    }
    if tau is not None:
        out["tau"] = tau
        out["sigma"] = sigma(params, tau)
        out["regime"] = regime(params, tau)
    if params.k is not None and params.m is not None:
        # total smoothness alpha splits as k + (Hoelder part in [0, 1))
        frac = params.alpha - params.k
        if not 0 <= frac < 1:
            raise DomainError(
                f"alpha - k = {frac:g} must lie in [0, 1) for the bridge exponents"
            )
        out["beta_bar"] = beta_bar(params.n, params.m, params.k, frac)
        if q is not None:
            out["q"] = q
            out["mu_q"] = mu_q(params.n, params.m, params.k, frac, q)
    return out
