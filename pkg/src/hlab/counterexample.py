"""Lacunary cosine series ``e^{-x^2} sum_m b^-m eps_m cos(b^m x)`` and probes
of their (non-)differentiability and Besov-type oscillation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, PrecisionError
from .grid import GridFunction
from .operators import besov_norm

SIGMA_RANGE = (1.0 / 3.0, 0.5)
# largest admissible relative evaluation noise in a difference quotient
QUOTIENT_NOISE_LIMIT = 1e-3


@dataclass(frozen=True)
class LacunarySeries:
    """Truncated lacunary series with geometric tail certificate.

    ``coefficients`` is ``"power"`` (``eps_m = m**-sigma``) or a callable
    ``m -> eps_m`` with ``|eps_m| <= 1``. Summation starts at ``m = 1``.
    When ``terms`` is None the truncation is the smallest ``M`` whose tail
    bound ``b**-M / (b - 1)`` is at most ``tol``.
    """

    sigma: float = 0.4
    base: float = 5.0
    coefficients: Union[str, Callable] = "power"
    envelope: bool = True
    terms: Optional[int] = None
    tol: float = 1e-12

    def __post_init__(self):
        if not self.base > 1:
            raise DomainError(f"base must be > 1, got {self.base!r}")
        if self.terms is not None and self.terms < 1:
            raise DomainError(f"terms must be >= 1, got {self.terms!r}")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.coefficients == "power" and not SIGMA_RANGE[0] < self.sigma < SIGMA_RANGE[1]:
            warnings.warn(
                f"sigma = {self.sigma} lies outside (1/3, 1/2); the series is evaluated "
                "but is not the non-differentiable counterexample",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def truncation(self) -> int:
        if self.terms is not None:
            return int(self.terms)
        # b^-M/(b-1) <= tol
        m = math.ceil(-math.log(self.tol * (self.base - 1.0)) / math.log(self.base))
        return max(1, m)

    def tail_bound(self, terms: Optional[int] = None) -> float:
        m = self.truncation if terms is None else terms
        return self.base ** (-m) / (self.base - 1.0)

    def coefficient(self, m: int) -> float:
        if self.coefficients == "power":
            return m ** (-self.sigma)
        return float(self.coefficients(m))

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        coef = self.coefficients if isinstance(self.coefficients, str) else "custom"
        return {
            "sigma": self.sigma,
            "base": self.base,
            "coefficients": coef,
            "envelope": self.envelope,
            "terms": self.truncation,
            "tail_bound": self.tail_bound(),
        }


def _neumaier(terms):
    """Compensated running sum over an iterable of equally shaped arrays."""
    total = None
    comp = None
    for t in terms:
        if total is None:
            total = np.array(t, dtype=float)
            comp = np.zeros_like(total)
            continue
        s = total + t
        big = np.abs(total) >= np.abs(t)
        comp += np.where(big, (total - s) + t, (t - s) + total)
        total = s
    return total + comp


def evaluate(series: LacunarySeries, x, terms: Optional[int] = None):
    """Series value at ``x`` (scalar or array), summed in ascending ``m``.

    The series is even, so it is evaluated at ``|x|``; the truncation error is
    at most ``series.tail_bound(terms)`` times the envelope.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    m_max = series.truncation if terms is None else int(terms)
    b = series.base
    vals = _neumaier(
        b ** (-m) * series.coefficient(m) * np.cos(b ** m * ax) for m in range(1, m_max + 1)
    )
    if series.envelope:
        vals = np.exp(-ax * ax) * vals
    return float(vals) if vals.ndim == 0 else vals


# ---------------------------------------------------------------------------
# probes


@dataclass
class QuotientRecord:
    x: float
    scales: list
    quotients: list
    oscillation: float

    def to_dict(self) -> dict:
        return {"x": self.x, "scales": list(self.scales), "quotients": list(self.quotients), "oscillation": self.oscillation}


def _noise_bound(func) -> float:
    if isinstance(func, LacunarySeries):
        return func.tail_bound() + 1e-15
    return 1e-15


def difference_quotient_probe(func, x: float, scales) -> QuotientRecord:
    """Quotients ``(f(x + h) - f(x)) / h`` along ``scales``.

    ``scales`` are nonzero and decreasing in magnitude (signs may alternate).
    The oscillation is ``max - min`` of the quotients over the final half of
    the scales. ``func`` is a :class:`LacunarySeries` or any vectorized
    callable; for a series the evaluation error is checked against the
    smallest scale and :class:`~hlab.errors.PrecisionError` is raised when it
    could exceed ``1e-3`` in a quotient.
    """
    h = np.asarray(scales, dtype=float)
    if h.ndim != 1 or h.size == 0 or np.any(h == 0):
        raise DomainError("scales must be a non-empty list of nonzero numbers")
    if np.any(np.diff(np.abs(h)) > 0):
        raise DomainError("scales must decrease in magnitude")
    noise = 2.0 * _noise_bound(func) / np.abs(h).min()
    if noise > QUOTIENT_NOISE_LIMIT:
        raise PrecisionError(
            f"evaluation error up to {noise:.3g} in the quotient at the smallest scale",
            {"noise": noise, "limit": QUOTIENT_NOISE_LIMIT, "min_scale": float(np.abs(h).min())},
        )
    if not callable(func):
        raise DomainError("func must be callable")
    fx = np.asarray(func(np.array([x])), dtype=float)[0]
    fxh = np.asarray(func(x + h), dtype=float)
    q = (fxh - fx) / h
    tail = q[q.size // 2:]
    return QuotientRecord(float(x), h.tolist(), q.tolist(), float(tail.max() - tail.min()))


def quotient_statistics(func, n_points: int = 200, scales=None, seed: int = 0, interval=(-1.0, 1.0)) -> dict:
    """Oscillation statistic over seeded uniform probe points.

    Returns per-point records plus the median oscillation and the median
    absolute quotient.
    """
    if scales is None:
        scales = [5.0 ** (-j) for j in range(3, 11)]
    rng = np.random.default_rng(seed)
    xs = rng.uniform(interval[0], interval[1], size=n_points)
    recs = [difference_quotient_probe(func, float(x), scales) for x in xs]
    osc = np.array([r.oscillation for r in recs])
    absq = np.array([np.median(np.abs(r.quotients)) for r in recs])
    return {
        "seed": seed,
        "n_points": n_points,
        "scales": list(scales),
        "median_oscillation": float(np.median(osc)),
        "median_abs_quotient": float(np.median(absq)),
        "points": [r.to_dict() for r in recs],
    }


def besov_membership_probe(func, p: float = 3.0, scales=None, cells: int = 2 ** 14, box=(-1.0, 1.0)) -> dict:
    """Log-log slope of ``||Omega^1_f(., t)||_{L^p}`` against ``t``.

    ``func`` is sampled on a grid over ``box``; diagnostic only.
    """
    if scales is None:
        scales = [2.0 ** (-j) for j in range(3, 8)]
    side = box[1] - box[0]
    grid = GridFunction.from_function(lambda c: func(c[..., 0]), 1, (box[0],), side, cells)
    if min(scales) < 4 * grid.h:
        raise DomainError(f"smallest scale {min(scales)} is too close to the grid step {grid.h}")
    norms = [besov_norm(grid, 1, t, p) for t in scales]
    logt = np.log(scales)
    with np.errstate(divide="ignore"):
        logn = np.log(norms)
    if np.all(np.asarray(norms) == 0):
        slope = 0.0
    elif not np.all(np.isfinite(logn)):
        slope = float("nan")
    else:
        slope = float(np.polyfit(logt, logn, 1)[0])
    return {
        "p": p,
        "scales": list(scales),
        "norms": norms,
        "slope": slope,
        "grid": {"box": list(box), "cells": cells},
    }

