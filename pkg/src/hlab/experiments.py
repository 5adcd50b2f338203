"""Experiment drivers: dimension distortion on Cantor sets, the Phi set
function, the slice (N_*) Hoelder split, and the Adams / diameter-bound
stability sweeps.

Every driver is deterministic given its configuration and seed; per-trial
random streams are derived from ``(seed, trial index)`` so that enlarging
the trial count only appends trials.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .dyadic import CubeFamily, DyadicCube, frostman_measure, regularize
from .errors import DomainError
from .exponents import DistortionParams, regime, sigma, tau_star
from .fractal import (
    PointSet,
    box_dimension,
    cantor_intervals,
    cantor_set,
    dyadic_content,
    interval_cover,
    occupied_cubes,
)
from .grid import GridFunction
from .operators import DiameterBoundChecker, adams_beta, adams_ratio, bessel_potential

SCENARIOS = ("cantor_identity", "cantor_holder", "cantor_bessel", "cantor_constant")
CO_DECAY_FACTOR = 4.0
HOLDER_SPLIT_RTOL = 1e-12


@dataclass
class ExperimentConfig:
    scenario: str = "cantor_identity"
    params: DistortionParams = field(default_factory=lambda: DistortionParams(1, 1.5, 2.0))
    seed: int = 0
    grid: dict = field(default_factory=lambda: {"corner": -0.5, "side": 2.0, "cells": 4096})
    trials: int = 1
    levels: tuple = (4, 9)
    ratio: float = 1.0 / 3.0
    depth: int = 14
    gamma: float = 0.5
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        lo, hi = self.levels
        if not 0 <= lo < hi:
            raise DomainError(f"levels must satisfy 0 <= min < max, got {self.levels}")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "grid": dict(self.grid),
            "trials": self.trials,
            "levels": list(self.levels),
            "ratio": self.ratio,
            "depth": self.depth,
            "gamma": self.gamma,
        }


def _report(config_dict: dict, body: dict) -> dict:
    out = {"config": config_dict, "version": __version__}
    out.update(body)
    return out


# ---------------------------------------------------------------------------
# maps


def random_dyadic_steps(rng: np.random.Generator, max_level: int = 8, interval=(0.0, 1.0)):
    """Values of a random step function on ``2**level`` equal blocks of ``interval``."""
    level = int(rng.integers(2, max_level + 1))
    return level, rng.standard_normal(2 ** level)


def step_grid(level: int, vals: np.ndarray, corner: float, side: float, cells: int, interval=(0.0, 1.0)) -> GridFunction:
    """Sample a step function supported on ``interval`` at cell centres."""
    a, b = interval

    def f(c):
        x = c[..., 0]
        inside = (x >= a) & (x < b)
        idx = np.clip(np.floor((x - a) / (b - a) * 2 ** level).astype(np.int64), 0, 2 ** level - 1)
        return np.where(inside, vals[idx], 0.0)

    return GridFunction.from_function(f, 1, (corner,), side, cells)


def _scenario_map(config: ExperimentConfig):
    """The map ``v`` of a scenario as a vectorized callable plus metadata."""
    name = config.scenario
    if name == "cantor_identity":
        return (lambda x: x), {"map": "identity"}
    if name == "cantor_constant":
        return (lambda x: np.zeros_like(x)), {"map": "zero"}
    if name == "cantor_holder":
        gam = config.gamma
        return (lambda x: np.sign(x) * np.abs(x) ** gam), {"map": "holder", "gamma": gam}
    g_meta = dict(config.grid)
    rng = np.random.default_rng(config.seed)
    level, vals = random_dyadic_steps(rng)
    g = step_grid(level, vals, float(g_meta["corner"]), float(g_meta["side"]), int(g_meta["cells"]))
    v = bessel_potential(g, config.params.alpha)
    return v.interpolate, {"map": "bessel", "alpha": config.params.alpha, "g_level": level}


def image_diameters(v, cubes) -> np.ndarray:
    """``diam v(Q)`` from the corner samples plus the centre of each cube."""
    if not cubes:
        return np.zeros(0)
    n = cubes[0].dim
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    samples = []
    for c in cubes:
        lo = np.array(c.lower)
        pts = lo + corners * c.side
        samples.append(np.vstack([pts, np.array(c.center)[None, :]]))
    s = np.stack(samples)  # (cubes, 2^n + 1, n)
    m = s.shape[1]
    vals = np.asarray(v(s.reshape(-1, n) if n > 1 else s.reshape(-1)), dtype=float)
    vals = vals.reshape(len(cubes), m, -1)
    diff = vals[:, :, None, :] - vals[:, None, :, :]
    return np.sqrt(np.max(np.sum(diff * diff, axis=-1), axis=(1, 2)))


def _fsum_pow(x, e: float) -> float:
    x = np.asarray(x, dtype=float)
    return math.fsum(np.where(x > 0, np.abs(x) ** e, 0.0))


# ---------------------------------------------------------------------------
# distortion experiment


def run_distortion_experiment(config: ExperimentConfig) -> dict:
    """Cover a Cantor set level by level and compare the tau-sum with the
    sigma-sum of image diameters.

    Covers come from the exact construction intervals. For each level both
    the raw cover and its regularization are reported. The co-decay check
    predicts ``S_sigma(l) = S_sigma(l0) * S_tau(l) / S_tau(l0)`` from the
    first level ``l0`` and asserts the raw sums stay within a factor 4 of it.
    """
    params = config.params
    params.check_regime()
    lefts, length = cantor_intervals(config.ratio, config.depth)
    E = cantor_set(config.ratio, config.depth, mode="endpoints")
    dim_e = box_dimension(E)
    tau = min(max(dim_e.value, 1e-9), float(params.n))
    sig = sigma(params, tau)
    v, map_meta = _scenario_map(config)
    image = PointSet(np.asarray(v(E.points[:, 0]), dtype=float)[:, None], {"generator": "image"})
    try:
        dim_v = box_dimension(image).to_dict()
    except DomainError as exc:  # e.g. a constant map leaves too few scales
        dim_v = {"slope": 0.0, "error": str(exc)}
    rows = []
    for level in range(config.levels[0], config.levels[1] + 1):
        raw = interval_cover(lefts, length, level, tau)
        reg = regularize(raw)
        d_raw = image_diameters(v, list(raw.cubes))
        d_reg = image_diameters(v, list(reg.cubes))
        rows.append(
            {
                "level": level,
                "cubes": len(raw),
                "tau_sum": raw.tau_weight,
                "sigma_sum": _fsum_pow(d_raw, sig),
                "regular_cubes": len(reg),
                "regular_tau_sum": reg.tau_weight,
                "regular_sigma_sum": _fsum_pow(d_reg, sig),
            }
        )
    s0, t0 = rows[0]["sigma_sum"], rows[0]["tau_sum"]
    ok = True
    for r in rows:
        pred = s0 * r["tau_sum"] / t0
        r["predicted_sigma_sum"] = pred
        r["co_decay_ok"] = bool(r["sigma_sum"] <= CO_DECAY_FACTOR * pred)
        ok = ok and r["co_decay_ok"]
    body = {
        "tau": tau,
        "sigma": sig,
        "tau_star": tau_star(params),
        "regime": regime(params, tau),
        "map": map_meta,
        "dim_E": dim_e.to_dict(),
        "dim_vE": dim_v,
        "levels": rows,
        "co_decay_ok": ok,
        "co_decay_factor": CO_DECAY_FACTOR,
        "diameter_rule": "corner and centre samples",
    }
    return _report(config.to_dict(), body)


# ---------------------------------------------------------------------------
# Phi set function


@dataclass
class PhiEstimate:
    value: float
    cover: CubeFamily
    mu_exponent: float
    q_exponent: float
    per_level: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "mu": self.mu_exponent,
            "q": self.q_exponent,
            "best_level": self.cover.cubes[0].level if len(self.cover) else None,
            "cover_size": len(self.cover),
            "per_level": {str(k): v for k, v in self.per_level.items()},
        }


def _scalar_pow(x, e: float) -> np.ndarray:
    """Elementwise ``x**e`` through libm, one call per distinct value.

    Vectorized numpy powers may differ from libm in the last bit, which would
    break exact comparisons with scalar formulas.
    """
    x = np.asarray(x, dtype=float)
    uniq, inv = np.unique(x, return_inverse=True)
    return np.array([math.pow(u, e) for u in uniq])[inv.reshape(x.shape)]


def phi_sum(cubes, v, mu: float, q: float) -> float:
    """``sum side(D)**mu * diam v(D)**q`` over the cubes."""
    diam = image_diameters(v, list(cubes))
    side = np.array([c.side for c in cubes])
    return math.fsum(_scalar_pow(side, mu) * _scalar_pow(np.where(diam > 0, diam, 0.0), q))


def phi_estimate(E, v, mu: float, q: float, levels) -> PhiEstimate:
    """Minimum over dyadic levels of the Phi sum on the cubes meeting ``E``.

    ``v`` is a vectorized callable or a :class:`GridFunction` (interpolated).
    The result is an upper bound for the infimum over all covers.
    """
    if not mu >= 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if not q > 0:
        raise DomainError(f"q must be > 0, got {q!r}")
    pts = E.points if isinstance(E, PointSet) else np.asarray(E, dtype=float).reshape(len(E), -1)
    if isinstance(v, GridFunction):
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        if not v.contains_box(lo, hi):
            raise DomainError("the point set escapes the grid box of v")
        func = v.interpolate
    else:
        func = v
    levels = list(levels)
    if not levels:
        raise DomainError("levels must be non-empty")
    best, best_cover, per_level = math.inf, None, {}
    for level in levels:
        keys = occupied_cubes(pts, level)
        cubes = [DyadicCube(level, tuple(int(k) for k in row)) for row in keys]
        val = phi_sum(cubes, func, mu, q)
        per_level[level] = val
        if val < best:
            best, best_cover = val, cubes
    return PhiEstimate(best, CubeFamily(best_cover, mu), mu, q, per_level)


def phi_identity_check(E, q: float, levels) -> dict:
    """Per level: Phi sum for the identity with ``mu = 0`` next to the dyadic content."""
    est = phi_estimate(E, lambda x: x, 0.0, q, levels)
    return {lv: (est.per_level[lv], dyadic_content(E, q, lv)) for lv in levels}


# ---------------------------------------------------------------------------
# slice (N_*) Hoelder split


def holder_split(sides, diams, tau: float, sig: float, q: float) -> dict:
    """Both factors of the Hoelder split of ``sum side**mu * diam**q``.

    ``mu = tau * (1 - q/sig)``; the bound reads
    ``lhs <= (sum side**tau)**(1 - q/sig) * (sum diam**sig)**(q/sig)``.
    """
    sides = np.asarray(sides, dtype=float)
    diams = np.asarray(diams, dtype=float)
    theta = q / sig
    mu = tau * (1.0 - theta)
    lhs = math.fsum(sides ** mu * np.where(diams > 0, diams, 0.0) ** q)
    a = math.fsum(sides ** tau)
    b = _fsum_pow(diams, sig)
    first = 1.0 if theta == 1.0 else a ** (1.0 - theta)
    rhs = first * b ** theta
    return {
        "mu": mu,
        "lhs": lhs,
        "tau_factor": first,
        "sigma_factor": b ** theta,
        "rhs": rhs,
        "holds": bool(lhs <= rhs * (1.0 + HOLDER_SPLIT_RTOL)),
    }


def run_nstar_slice_check(config: ExperimentConfig, q: float) -> dict:
    """Hoelder split on the raw and regularized covers of the distortion scenario."""
    params = config.params
    params.check_regime()
    lefts, length = cantor_intervals(config.ratio, config.depth)
    E = cantor_set(config.ratio, config.depth, mode="endpoints")
    tau = min(max(box_dimension(E).value, 1e-9), float(params.n))
    sig = sigma(params, tau)
    if not 0 < q <= sig:
        raise DomainError(f"q must lie in (0, sigma] = (0, {sig:g}], got {q!r}")
    v, map_meta = _scenario_map(config)
    rows = []
    ok = True
    for level in range(config.levels[0], config.levels[1] + 1):
        raw = interval_cover(lefts, length, level, tau)
        for kind, fam in (("raw", raw), ("regular", regularize(raw))):
            cubes = list(fam.cubes)
            rec = holder_split([c.side for c in cubes], image_diameters(v, cubes), tau, sig, q)
            rec.update({"level": level, "cover": kind, "cubes": len(cubes)})
            ok = ok and rec["holds"]
            rows.append(rec)
    body = {"tau": tau, "sigma": sig, "q": q, "map": map_meta, "rows": rows, "all_hold": ok}
    return _report(dict(config.to_dict(), q=q), body)


# ---------------------------------------------------------------------------
# stability sweeps

ADAMS_PRESETS = {
    "riesz": {"alpha": 0.25, "p": 2.0, "s": 2.5},
    "maximal": {"alpha": 0.25, "p": 2.0, "s": 2.0},
    "lorentz": {"alpha": 0.25, "p": 2.0, "s": 2.0},
}


def _trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, i])


def random_regular_measure(rng: np.random.Generator, tau: float, max_level: int = 8):
    """Frostman measure of a regularized random family inside ``[0, 1]``."""
    count = int(rng.integers(1, 9))
    cubes = []
    for _ in range(count):
        level = int(rng.integers(2, max_level + 1))
        cubes.append(DyadicCube(level, (int(rng.integers(0, 2 ** level)),)))
    return frostman_measure(regularize(CubeFamily(cubes, tau)))


def _pool_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def adams_trials(mode: str, cells: int, trials: int, seed: int = 0, workers: int = 1, **overrides) -> dict:
    """Adams ratios over seeded trials on ``[0, 1]`` with ``cells`` grid cells."""
    if mode not in ADAMS_PRESETS:
        raise DomainError(f"mode must be one of {tuple(ADAMS_PRESETS)}, got {mode!r}")
    par = dict(ADAMS_PRESETS[mode], **overrides)
    beta = adams_beta(1, par["alpha"], par["p"], par["s"])

    def one(i):
        rng = _trial_rng(seed, i)
        level, vals = random_dyadic_steps(rng)
        g = step_grid(level, vals, 0.0, 1.0, cells)
        mu = random_regular_measure(rng, beta)
        return adams_ratio(g, mu, par["alpha"], par["p"], par["s"], mode)

    ratios = _pool_map(one, range(trials), workers)
    return {
        "mode": mode,
        "params": par,
        "beta": beta,
        "cells": cells,
        "trials": trials,
        "seed": seed,
        "ratios": ratios,
        "max_ratio": max(ratios) if ratios else 0.0,
    }


def diam_trials(mode: str, cells: int, trials: int, seed: int = 0, alpha: float = 2.0, p: float = 3.0,
                theta: float = 0.5, levels=(2, 6), zero: bool = False, workers: int = 1) -> dict:
    """Diameter-bound ratios for random ``(g, Q)`` on ``[0, 1]``.

    Cubes are chosen so that the doubled cube stays inside the box.
    """

    def one(i):
        rng = _trial_rng(seed, i)
        level, vals = random_dyadic_steps(rng)
        if zero:
            vals = np.zeros_like(vals)
        g = step_grid(level, vals, 0.0, 1.0, cells)
        ql = int(rng.integers(levels[0], levels[1] + 1))
        cube = DyadicCube(ql, (int(rng.integers(1, 2 ** ql - 1)),))
        rec = DiameterBoundChecker(g, alpha, p, theta, mode).check(cube)
        return rec.ratio

    ratios = _pool_map(one, range(trials), workers)
    return {
        "mode": mode,
        "params": {"alpha": alpha, "p": p, "theta": theta, "levels": list(levels)},
        "cells": cells,
        "trials": trials,
        "seed": seed,
        "ratios": ratios,
        "max_ratio": max(ratios) if ratios else 0.0,
    }


def stability_report(sweep, mode: str, cells: int, trials: int, seed: int = 0, **kw) -> dict:
    """Run ``sweep`` at (cells, trials), (2 cells, trials) and (cells, 2 trials).

    Stable means each pair of maxima differs by less than a factor of 2.
    """
    base = sweep(mode, cells, trials, seed, **kw)
    fine = sweep(mode, 2 * cells, trials, seed, **kw)
    more = sweep(mode, cells, 2 * trials, seed, **kw)

    def factor(a, b):
        if a == b:
            return 1.0
        lo, hi = sorted([a, b])
        return math.inf if lo == 0 else hi / lo

    f_ref = factor(base["max_ratio"], fine["max_ratio"])
    f_tri = factor(base["max_ratio"], more["max_ratio"])
    return {
        "mode": mode,
        "seed": seed,
        "max_ratio": base["max_ratio"],
        "max_ratio_refined": fine["max_ratio"],
        "max_ratio_doubled_trials": more["max_ratio"],
        "refinement_factor": f_ref,
        "trials_factor": f_tri,
        "stable": bool(f_ref < 2.0 and f_tri < 2.0 and math.isfinite(base["max_ratio"])),
    }

