"""Riesz and Bessel kernels: pointwise values and cell-integrated tables.

Bessel kernel via the subordination integral (Fourier convention
``hat K(xi) = (1 + 4 pi^2 |xi|^2)^(-alpha/2)``)::

    K_a(x) = (4 pi)^(-a/2) / Gamma(a/2)
             * int_0^inf exp(-pi |x|^2 / t) exp(-t / (4 pi)) t^((a - n)/2) dt/t

Tables hold ``W[k] = int_{cell k} K(y) dy`` over the cells
``[(k - 1/2) h, (k + 1/2) h]^n``. For the Bessel kernel the Gaussian factor is
integrated over each cell in closed form (erf), leaving one smooth integral in
``u = log t`` that is evaluated by the trapezoid rule with step halving.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError

CACHE_ENV = "HLAB_CACHE_DIR"
_CACHE_FORMAT = 1
_memory_cache: dict = {}


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "bessel" or "riesz"
    order: float  # alpha for bessel, beta for riesz
    dim: int
    quadrature_tolerance: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("bessel", "riesz"):
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        if self.dim not in (1, 2):
            raise DomainError(f"kernel dimension must be 1 or 2, got {self.dim}")
        if self.kind == "riesz" and not 0 < self.order < self.dim:
            raise DomainError(f"riesz order must lie in (0, {self.dim}), got {self.order}")
        if self.kind == "bessel" and not self.order > 0:
            raise DomainError(f"bessel order must be > 0, got {self.order}")
        if not self.quadrature_tolerance > 0:
            raise DomainError("quadrature tolerance must be positive")


def _bessel_const(alpha: float) -> float:
    return (4.0 * math.pi) ** (-alpha / 2.0) / math.gamma(alpha / 2.0)


def bessel_kernel(spec: KernelSpec, radius: float) -> float:
    """``K_alpha`` at ``|x| = radius`` by adaptive quadrature (QUADPACK).

    Raises :class:`~hlab.errors.NumericalError` if the error estimate exceeds
    the tolerance.
    """
    if spec.kind != "bessel":
        raise DomainError("bessel_kernel needs a bessel KernelSpec")
    if not radius > 0:
        raise DomainError(f"radius must be > 0, got {radius!r}")
    a, n, tol = spec.order, spec.dim, spec.quadrature_tolerance
    r2 = radius * radius

    def integrand(u):
        if not -700.0 < u < 700.0:
            return 0.0
        t = math.exp(u)
        return math.exp(-math.pi * r2 / t - t / (4.0 * math.pi) + u * (a - n) / 2.0)

    # the integrand peaks near t = 2 pi r (the two exponentials balance)
    u0 = math.log(2.0 * math.pi * radius)
    total, err, diag = 0.0, 0.0, []
    for lo, hi in ((-np.inf, u0), (u0, np.inf)):
        val, e, info = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=tol / 4, limit=200, full_output=1)[:3]
        total += val
        err += e
        diag.append({"neval": info["neval"], "abserr": e})
    if not np.isfinite(total) or err > tol * abs(total):
        raise NumericalError(
            f"bessel kernel quadrature did not converge at r={radius:g}",
            {"value": total, "abserr": err, "pieces": diag, "alpha": a, "n": n},
        )
    return _bessel_const(a) * total


def riesz_kernel(spec: KernelSpec, radius):
    """``|x|**(beta - n)``."""
    if spec.kind != "riesz":
        raise DomainError("riesz_kernel needs a riesz KernelSpec")
    return np.asarray(radius, dtype=float) ** (spec.order - spec.dim)


# ---------------------------------------------------------------------------
# cell-integrated tables (offsets 0..N-1 per axis, mirrored on use)


def _cache_dir():
    raw = os.environ.get(CACHE_ENV)
    if raw == "":
        return None
    path = Path(raw) if raw else Path.home() / ".cache" / "hlab"
    return path


def _cached(key: dict, build):
    token = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:24]
    if token in _memory_cache:
        return _memory_cache[token]
    path = None
    cdir = _cache_dir()
    if cdir is not None:
        path = cdir / f"{key['kind']}-{token}.npy"
        if path.exists():
            try:
                table = np.load(path)
                _memory_cache[token] = table
                return table
            except (OSError, ValueError):
                pass
    table = build()
    _memory_cache[token] = table
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(f".{os.getpid()}.tmp.npy")
            np.save(tmp, table)
            os.replace(tmp, path)
        except OSError:
            pass
    return table


def _axis_gauss(k: np.ndarray, h: float, s: np.ndarray) -> np.ndarray:
    """``int_{(k-1/2)h}^{(k+1/2)h} exp(-pi y^2/t) dy`` for k >= 0, with s = sqrt(pi/t).

    Shape (len(k), len(s)).
    """
    a = (k[:, None] - 0.5) * h * s[None, :]
    b = (k[:, None] + 0.5) * h * s[None, :]
    core = np.where(
        k[:, None] == 0,
        2.0 * special.erf(b),
        special.erfc(np.abs(a)) - special.erfc(b),
    )
    return core * (math.sqrt(math.pi) / (2.0 * s[None, :]))


def _bessel_quadrant(alpha: float, n: int, h: float, cells: int, step: float) -> np.ndarray:
    u_min = -80.0 / alpha - 10.0
    u_max = math.log(4.0 * math.pi * (90.0 + abs(alpha - n)))
    u = np.arange(u_min, u_max + step, step)
    t = np.exp(u)
    s = np.sqrt(math.pi / t)
    outer = np.exp(-t / (4.0 * math.pi) + u * (alpha - n) / 2.0)
    k = np.arange(cells)
    g = _axis_gauss(k, h, s)  # (cells, nodes)
    if n == 1:
        vals = (g * outer).sum(axis=1)
    else:
        vals = np.einsum("iu,ju,u->ij", g, g, outer, optimize=True)
    return _bessel_const(alpha) * vals * step


def bessel_table(alpha: float, n: int, h: float, cells: int, tol: float = 1e-8) -> np.ndarray:
    """Quadrant table ``W[|k_1|, ..., |k_n|]`` of cell-integrated Bessel kernel."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    key = {"kind": "bessel", "alpha": alpha, "n": n, "h": h, "cells": cells, "tol": tol, "v": _CACHE_FORMAT}

    def build():
        step = 0.5
        prev = _bessel_quadrant(alpha, n, h, cells, step)
        for _ in range(4):
            step /= 2
            cur = _bessel_quadrant(alpha, n, h, cells, step)
            scale = np.maximum(np.abs(cur), 1e-300)
            err = np.max(np.abs(cur - prev) / scale)
            if err <= tol:
                return cur
            prev = cur
        raise NumericalError(
            "bessel table trapezoid rule did not converge",
            {"alpha": alpha, "n": n, "h": h, "cells": cells, "rel_change": float(err), "step": step},
        )

    return _cached(key, build)


_GL32 = np.polynomial.legendre.leggauss(32)
_GL8 = np.polynomial.legendre.leggauss(8)


def _riesz_singular_2d(beta: float, h: float) -> float:
    # polar coordinates on the square [-h/2, h/2]^2: 8 congruent triangles
    x, w = _GL32
    theta = (x + 1.0) * (math.pi / 8.0)
    radial = (h / 2.0 / np.cos(theta)) ** beta / beta
    return float(8.0 * np.sum(w * radial) * (math.pi / 8.0))


def riesz_table(beta: float, n: int, h: float, cells: int) -> np.ndarray:
    """Quadrant table of ``int_{cell k} |y|**(beta - n) dy``; any ``beta > 0``."""
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    key = {"kind": "riesz", "beta": beta, "n": n, "h": h, "cells": cells, "v": _CACHE_FORMAT}

    def build():
        k = np.arange(cells, dtype=float)
        if n == 1:
            lo = np.maximum(k - 0.5, 0.0) * h
            hi = (k + 0.5) * h
            w = (hi ** beta - lo ** beta) / beta
            w[0] = 2.0 * (h / 2.0) ** beta / beta
            return w
        x, wq = _GL8
        off = x * (h / 2.0)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        yx = kx[..., None, None] * h + off[:, None]
        yy = ky[..., None, None] * h + off[None, :]
        r = np.hypot(yx, yy)
        with np.errstate(divide="ignore"):
            vals = r ** (beta - 2.0)
        table = np.einsum("ijab,a,b->ij", vals, wq, wq) * (h / 2.0) ** 2
        # cells next to the singularity: adaptive cubature
        f = lambda yv, xv: (xv * xv + yv * yv) ** ((beta - 2.0) / 2.0)
        for i in range(min(3, cells)):
            for j in range(min(3, cells)):
                if i == 0 and j == 0:
                    continue
                table[i, j] = integrate.dblquad(
                    f, (i - 0.5) * h, (i + 0.5) * h, (j - 0.5) * h, (j + 0.5) * h,
                    epsabs=0.0, epsrel=1e-10,
                )[0]
        table[0, 0] = _riesz_singular_2d(beta, h)
        return table

    return _cached(key, build)


def full_table(quadrant: np.ndarray) -> np.ndarray:
    """Mirror a quadrant table to offsets ``-(N-1)..(N-1)`` on every axis."""
    out = quadrant
    for axis in range(quadrant.ndim):
        flipped = np.flip(np.take(out, np.arange(1, out.shape[axis]), axis=axis), axis=axis)
        out = np.concatenate([flipped, out], axis=axis)
    return out
