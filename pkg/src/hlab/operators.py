"""Grid realizations of maximal functions, Riesz and Bessel potentials, the
Besov mean-oscillation modulus, and empirical checkers for the Adams trace
inequalities and the potential diameter bounds.

Grid functions are extended by zero outside their box. Potentials are
discrete convolutions with cell-integrated kernel tables, so the value at a
cell centre is ``sum_j f_j int_{cell j} K(x_i - y) dy``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .dyadic import DyadicCube, measure_norm_beta
from .errors import DomainError, RegimeError
from .fractal import lorentz_norm_p1
from .grid import GridFunction
from .kernels import bessel_table, full_table, riesz_table

CONV_METHODS = ("auto", "direct", "fft")


def _convolve(values: np.ndarray, quadrant: np.ndarray, method: str) -> np.ndarray:
    """Apply a mirrored kernel table to cell values; output on the same grid."""
    if method not in CONV_METHODS:
        raise DomainError(f"method must be one of {CONV_METHODS}, got {method!r}")
    kern = full_table(quadrant)
    n = values.ndim
    if method == "auto":
        method = "direct" if n == 1 else "fft"
    full = signal.convolve(values, kern, mode="full", method=method)
    cells = values.shape[0]
    return full[(slice(cells - 1, 2 * cells - 1),) * n]


def _apply_scalar(f: GridFunction, op) -> np.ndarray:
    if f.is_scalar:
        return op(f.values)
    comps = [op(f.values[..., c]) for c in range(f.values.shape[-1])]
    return np.stack(comps, axis=-1)


# ---------------------------------------------------------------------------
# maximal functions


def _radius_ladder(f: GridFunction) -> list:
    diam = f.side * math.sqrt(f.dim)
    steps = max(0, math.ceil(math.log2(diam / f.h)))
    return [2 ** j for j in range(steps + 1)]  # radii in units of h


def _disk(radius_cells: int, dim: int) -> np.ndarray:
    k = np.arange(-radius_cells + 1, radius_cells)
    if dim == 1:
        return np.ones(k.size)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    return (kx * kx + ky * ky < radius_cells * radius_cells).astype(float)


def _maximal(f: GridFunction, beta: float) -> np.ndarray:
    """``M_beta |f|`` at cell centres for any ``beta >= 0``.

    Balls are open and discrete (cells whose centre is at distance < r);
    the average divides by the full ball cell count, cells outside the box
    contributing zeros.
    """
    a = np.abs(f.values) if f.is_scalar else np.linalg.norm(f.values, axis=-1)
    best = np.zeros_like(a)
    for m in _radius_ladder(f):
        r = m * f.h
        if f.dim == 1:
            c = np.concatenate([[0.0], np.cumsum(a)])
            idx = np.arange(f.cells)
            lo = np.clip(idx - (m - 1), 0, f.cells)
            hi = np.clip(idx + m, 0, f.cells)
            sums = c[hi] - c[lo]
            count = 2 * m - 1
        else:
            disk = _disk(m, 2)
            sums = signal.fftconvolve(a, disk, mode="same")
            sums = np.maximum(sums, 0.0)
            count = disk.sum()
        np.maximum(best, r ** beta * sums / count, out=best)
    return best


def maximal(f: GridFunction, beta: float = 0.0) -> GridFunction:
    """Fractional maximal function ``M_beta f`` on a factor-2 radius ladder.

    Radii run over ``h, 2h, 4h, ...`` up to the box diameter; ``beta = 0``
    gives the Hardy-Littlewood maximal function.
    """
    if not 0 <= beta < f.dim:
        raise DomainError(f"beta must lie in [0, {f.dim}), got {beta!r}")
    return f.with_values(_maximal(f, beta))


# ---------------------------------------------------------------------------
# Riesz potentials


def _riesz(f: GridFunction, beta: float, method: str = "auto") -> np.ndarray:
    """Convolution with ``|y|**(beta - n)`` for any ``beta > 0``."""
    table = riesz_table(beta, f.dim, f.h, f.cells)
    return _apply_scalar(f, lambda v: _convolve(v, table, method))


def riesz_potential(f: GridFunction, beta: float, method: str = "auto") -> GridFunction:
    """``I_beta f(x) = int f(y) |x - y|**(beta - n) dy`` at cell centres."""
    if not 0 < beta < f.dim:
        raise DomainError(f"beta must lie in (0, {f.dim}), got {beta!r}")
    return f.with_values(_riesz(f, beta, method))


def riesz_potential_at(f: GridFunction, beta: float, points) -> np.ndarray:
    """``I_beta f`` at arbitrary points.

    In one dimension the kernel is integrated over every cell in closed form,
    so the result is exact for the piecewise-constant ``f``. In two dimensions
    each point is snapped to the centre of the cell containing it.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    if not f.is_scalar:
        raise DomainError("riesz_potential_at expects a scalar grid function")
    pts = np.asarray(points, dtype=float).reshape(-1, f.dim)
    if f.dim == 2:
        idx = f.index_of(pts)
        vals = _riesz(f, beta)
        return vals[tuple(idx.T)]
    edges = f.corner[0] + np.arange(f.cells + 1) * f.h

    def prim(u):
        return np.sign(u) * np.abs(u) ** beta / beta

    out = np.empty(len(pts))
    for i, x in enumerate(pts[:, 0]):
        w = np.diff(prim(edges - x))
        out[i] = math.fsum(w * f.values)
    return out


# ---------------------------------------------------------------------------
# Bessel potentials


def bessel_potential(g: GridFunction, alpha: float, method: str = "auto", tol: float = 1e-8) -> GridFunction:
    """``v = K_alpha * g`` with the cell-integrated Bessel kernel."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    table = bessel_table(alpha, g.dim, g.h, g.cells, tol)
    return g.with_values(_apply_scalar(g, lambda v: _convolve(v, table, method)))


# ---------------------------------------------------------------------------
# Besov mean-oscillation modulus


def _gradient(v: GridFunction, k: int):
    """Discrete ``nabla^k v`` (components on the last axis) and a validity mask.

    Centred differences inside, one-sided at the edges; cells within ``k`` of
    the boundary are marked invalid.
    """
    comps = [v.values]
    for _ in range(k):
        nxt = []
        for c in comps:
            g = np.gradient(c, v.h)
            nxt.extend([g] if v.dim == 1 else g)
        comps = nxt
    grad = np.stack(comps, axis=-1)
    valid = np.zeros(v.shape, dtype=bool)
    valid[(slice(k, v.cells - k),) * v.dim] = True
    return grad, valid


def besov_modulus(v: GridFunction, k: int, t: float) -> GridFunction:
    """Mean oscillation of ``nabla^k v`` over the cube of side ``t`` at each node.

    The cube is the ``2*round(t/2h) + 1`` cell window centred on the node.
    Nodes whose window touches the boundary band (where differences are
    one-sided) or leaves the box get NaN.
    """
    if k not in (0, 1, 2):
        raise DomainError(f"k must be 0, 1 or 2, got {k!r}")
    if not v.is_scalar:
        raise DomainError("besov_modulus expects a scalar grid function")
    if not t >= v.h:
        raise DomainError(f"t = {t!r} is below the grid step {v.h!r}")
    half = int(round(t / v.h)) // 2
    w = 2 * half + 1
    if w > v.cells:
        raise DomainError(f"t = {t!r} exceeds the box")
    grad, valid = _gradient(v, k)
    d = grad.shape[-1]
    out = np.full(v.shape, np.nan)
    win = np.lib.stride_tricks.sliding_window_view(grad, (w,) * v.dim, axis=tuple(range(v.dim)))
    # win shape: (cells - w + 1,)*dim + (d,) + (w,)*dim
    axes = tuple(range(v.dim + 1, 2 * v.dim + 1))
    mean = win.mean(axis=axes, keepdims=True)
    dev = np.linalg.norm(win - mean, axis=v.dim) if d > 1 else np.abs(win - mean)[(slice(None),) * v.dim + (0,)]
    osc = dev.mean(axis=tuple(range(v.dim, 2 * v.dim)))
    ok_windows = np.lib.stride_tricks.sliding_window_view(valid, (w,) * v.dim).all(axis=tuple(range(v.dim, 2 * v.dim)))
    inner = (slice(half, v.cells - half),) * v.dim
    out[inner] = np.where(ok_windows, osc, np.nan)
    return v.with_values(out)


def besov_norm(v: GridFunction, k: int, t: float, p: float) -> float:
    """``||Omega^k_v(., t)||_{L^p}`` over the valid (non-NaN) nodes."""
    om = besov_modulus(v, k, t)
    vals = om.values[np.isfinite(om.values)]
    if np.isinf(p):
        return float(vals.max(initial=0.0))
    return float(np.sum(vals ** p) * v.cell_volume) ** (1.0 / p)


# ---------------------------------------------------------------------------
# local / far splitting


def _doubled_box(g: GridFunction, cube: DyadicCube):
    lo, hi = cube.doubled_bounds()
    if cube.dim != g.dim:
        raise DomainError(f"cube dimension {cube.dim} differs from grid dimension {g.dim}")
    if not g.contains_box(lo, hi):
        raise DomainError(f"doubled cube {lo}..{hi} escapes the grid box")
    return lo, hi


def split_local_far(g: GridFunction, cube: DyadicCube):
    """``(g * 1_{2Q}, g * 1_{complement of 2Q})``; the two parts sum to ``g``."""
    lo, hi = _doubled_box(g, cube)
    mask = g.mask_box(lo, hi)
    if not g.is_scalar:
        mask = mask[..., None]
    near = np.where(mask, g.values, 0.0)
    far = np.where(mask, 0.0, g.values)
    return g.with_values(near), g.with_values(far)


# ---------------------------------------------------------------------------
# Adams trace inequalities

ADAMS_MODES = ("riesz", "maximal", "lorentz")


def adams_beta(n: int, alpha: float, p: float, s: float) -> float:
    """Measure exponent ``(s/p)(n - alpha p)`` paired with ``L_p -> L_s(mu)``."""
    return (s / p) * (n - alpha * p)


def adams_ratio(g: GridFunction, mu, alpha: float, p: float, s: float, mode: str = "riesz") -> float:
    """``int |T g|^s dmu / (|||mu|||_beta * ||g||^s)`` for one trial.

    ``mode`` selects ``T`` and the norm on ``g``: ``riesz`` uses ``I_alpha``
    with ``L_p`` and needs ``s > p``; ``maximal`` uses ``M_alpha`` with
    ``L_p``; ``lorentz`` uses ``I_alpha`` with ``L_{p,1}`` and ``s = p``.
    """
    n = g.dim
    if mode not in ADAMS_MODES:
        raise DomainError(f"mode must be one of {ADAMS_MODES}, got {mode!r}")
    if not n - alpha * p > 0:
        raise RegimeError(f"needs n - alpha*p > 0, got {n - alpha * p:g}")
    if not p > 1:
        raise DomainError(f"p must be > 1, got {p!r}")
    if mode == "riesz" and not s > p:
        raise RegimeError(f"riesz mode needs s > p, got s={s!r}, p={p!r}")
    if mode == "maximal" and not s >= p:
        raise RegimeError(f"maximal mode needs s >= p, got s={s!r}, p={p!r}")
    if mode == "lorentz" and s != p:
        raise RegimeError(f"lorentz mode needs s = p, got s={s!r}, p={p!r}")
    if mode == "lorentz":
        gnorm = lorentz_norm_p1(g, p)
    else:
        gnorm = g.lp_norm(p)
    if gnorm == 0:
        return 0.0
    tg = _maximal(g, alpha) if mode == "maximal" else _riesz(g, alpha)
    lhs = mu.integrate(g.with_values(np.abs(tg) ** s))
    norm = measure_norm_beta(mu, adams_beta(n, alpha, p, s))
    return lhs / (norm * gnorm ** s)


# ---------------------------------------------------------------------------
# diameter bounds for v = G_alpha(g) on a cube

DIAM_MODES = ("riesz", "maximal", "lorentz")


@dataclass
class DiamRecord:
    lhs: float
    rhs: float
    ratio: float
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "terms": dict(self.terms)}


class DiameterBoundChecker:
    """Precomputes ``v = G_alpha(g)`` and the auxiliary operators once so that
    many cubes can be checked against the same ``g``.
    """

    def __init__(self, g: GridFunction, alpha: float, p: float, theta: float = 0.5, mode: str = "riesz"):
        n = g.dim
        if mode not in DIAM_MODES:
            raise DomainError(f"mode must be one of {DIAM_MODES}, got {mode!r}")
        if not p > 1:
            raise DomainError(f"p must be > 1, got {p!r}")
        if mode == "riesz" and not (alpha > 1 and alpha * p > n):
            raise RegimeError(f"riesz mode needs alpha > 1 and alpha*p > n (alpha={alpha}, p={p})")
        if mode == "maximal" and not alpha + theta >= 1:
            raise RegimeError(f"maximal mode needs alpha + theta >= 1 (alpha={alpha}, theta={theta})")
        if mode == "maximal" and not 0 < theta <= 1:
            raise DomainError(f"theta must lie in (0, 1], got {theta!r}")
        if mode == "lorentz" and not alpha * p >= n:
            raise RegimeError(f"lorentz mode needs alpha*p >= n (alpha={alpha}, p={p})")
        if mode in ("riesz", "lorentz") and not alpha > 1:
            raise RegimeError(f"{mode} mode needs alpha > 1 for I_(alpha-1), got {alpha}")
        self.g, self.alpha, self.p, self.theta, self.mode = g, alpha, p, theta, mode
        self.v = bessel_potential(g, alpha).values
        if not g.is_scalar:
            raise DomainError("diameter checks expect a scalar g")
        self.mg = _maximal(g, 0.0)
        absg = g.with_values(np.abs(g.values))
        if mode == "maximal":
            self.second = _maximal(g, alpha - 1.0 + theta)
        else:
            self.second = _riesz(absg, alpha - 1.0)

    def check(self, cube: DyadicCube) -> DiamRecord:
        g, n = self.g, self.g.dim
        if cube.dim != n:
            raise DomainError(f"cube dimension {cube.dim} differs from grid dimension {n}")
        if not g.contains_box(cube.lower, cube.upper):
            raise DomainError(f"cube {cube.lower}..{cube.upper} lies outside the grid box")
        r = cube.side
        if not r <= 1:
            raise DomainError(f"cube side must be <= 1, got {r}")
        mask = g.mask_cube(cube)
        if not mask.any():
            raise DomainError("cube contains no grid cell centres; refine the grid")
        vq = self.v[mask]
        lhs = float(vq.max() - vq.min())
        mgq = g.with_values(np.where(mask, self.mg, 0.0))
        if self.mode == "lorentz":
            local = lorentz_norm_p1(mgq, self.p)
        else:
            local = mgq.lp_norm(self.p)
        first = local * r ** (self.alpha - n / self.p)
        integral = float(np.sum(self.second[mask]) * g.cell_volume)
        power = 1 - n - self.theta if self.mode == "maximal" else 1 - n
        second = r ** power * integral
        rhs = first + second
        ratio = 0.0 if lhs == 0 else (lhs / rhs if rhs > 0 else math.inf)
        return DiamRecord(lhs, rhs, ratio, {"local": first, "far": second})


def diam_bound_check(g: GridFunction, cube: DyadicCube, alpha: float, p: float, theta: float = 0.5, mode: str = "riesz") -> DiamRecord:
    """Image diameter of ``cube`` under ``G_alpha(g)`` against the bound's bracket."""
    return DiameterBoundChecker(g, alpha, p, theta, mode).check(cube)


# ---------------------------------------------------------------------------
# local maximal domination


def local_maximal_ratio(g: GridFunction, cube: DyadicCube, point_index, alpha: float) -> float:
    """``int_{2Q} g(y)|x-y|^(alpha-n) dy / int_Q Mg(y)|x-y|^(alpha-n) dy``.

    ``x`` is the centre of the cell at ``point_index`` (which must lie in
    ``Q``); ``g`` is taken in absolute value.
    """
    lo, hi = _doubled_box(g, cube)
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    idx = np.atleast_1d(np.asarray(point_index, dtype=np.int64))
    qmask = g.mask_cube(cube)
    if not qmask[tuple(idx)]:
        raise DomainError("the evaluation point must lie in the cube")
    near = g.mask_box(lo, hi)
    a = np.abs(g.values)
    mg = _maximal(g, 0.0)
    table = full_table(riesz_table(alpha, g.dim, g.h, g.cells))
    # table entry for offset (i - j) sits at (i - j) + (cells - 1)
    grids = np.meshgrid(*[np.arange(g.cells)] * g.dim, indexing="ij")
    offs = tuple(int(i) - j + g.cells - 1 for i, j in zip(idx, grids))
    w = table[offs]
    num = float(np.sum(np.where(near, a, 0.0) * w))
    den = float(np.sum(np.where(qmask, mg, 0.0) * w))
    if num == 0:
        return 0.0
    return num / den
