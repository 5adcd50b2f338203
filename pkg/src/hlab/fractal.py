"""Point sets, dyadic content, box-counting dimension and Lorentz norms."""
from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DEFAULT_ROOT_LEVEL, CubeFamily, DyadicCube
from .errors import DomainError, FitError

SATURATION_FRACTION = 0.98
DEFAULT_LEVELS = (4, 10)


@dataclass
class PointSet:
    """Finite sample of a set in R^dim, with a provenance tag in ``meta``."""

    points: np.ndarray
    meta: dict = field(default_factory=dict)
    root_level: int = DEFAULT_ROOT_LEVEL

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] not in (1, 2):
            raise DomainError(f"points must have shape (N, 1) or (N, 2), got {pts.shape}")
        bound = 2.0 ** self.root_level
        if pts.size and np.any(np.abs(pts) > bound):
            raise DomainError(f"points leave the root cube [-{bound:g}, {bound:g}]^n")
        self.points = pts

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        gen = self.meta.get("generator", "unknown")
        seed = self.meta.get("seed", "none")
        buf.write(f"# dim={self.dim} generator={gen} seed={seed}\n")
        for row in self.points:
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        meta = {}
        dim = None
        if lines and lines[0].startswith("#"):
            for tok in lines[0].lstrip("#").split():
                key, _, val = tok.partition("=")
                meta[key] = val
            lines = lines[1:]
            dim = int(meta.pop("dim")) if "dim" in meta else None
        rows = [[float(x) for x in ln.split(",")] for ln in lines]
        pts = np.array(rows, dtype=float).reshape(len(rows), -1) if rows else np.zeros((0, dim or 1))
        if dim is not None and pts.shape[1] != dim:
            raise DomainError(f"header says dim={dim} but rows have {pts.shape[1]} columns")
        return cls(pts, meta)


@dataclass
class DimensionEstimate:
    value: float
    scales_used: list
    counts: dict
    fit_residual: float
    excluded: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.value,
            "scales": list(self.scales_used),
            "counts": {str(k): v for k, v in self.counts.items()},
            "residual": self.fit_residual,
            "excluded": list(self.excluded),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _as_points(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.points
    pts = np.asarray(points, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def occupied_cubes(points, level: int) -> np.ndarray:
    """Integer coordinates of the distinct half-open level-``level`` cubes hit."""
    pts = _as_points(points)
    if pts.shape[0] == 0:
        return np.zeros((0, pts.shape[1]), dtype=np.int64)
    keys = np.floor(pts * 2.0 ** level).astype(np.int64)
    return np.unique(keys, axis=0)


def dyadic_content(points, s: float, level: int) -> float:
    """``sum side**s`` over the level-``level`` dyadic cubes meeting the set.

    An upper bound for the dyadic s-content at that scale.
    """
    if not s > 0:
        raise DomainError(f"s must be > 0, got {s!r}")
    if level < 0:
        raise DomainError(f"level must be >= 0, got {level!r}")
    count = occupied_cubes(points, level).shape[0]
    return math.fsum([math.pow(2.0 ** -level, s)] * count)


def box_dimension(points, level_min: int = DEFAULT_LEVELS[0], level_max: int = DEFAULT_LEVELS[1]) -> DimensionEstimate:
    """Least-squares slope of ``log2(count)`` against level.

    Levels whose occupied count reaches 98% of the number of distinct points
    are treated as saturated and left out of the fit (with a warning).
    """
    if not level_max > level_min >= 0:
        raise DomainError(f"need level_max > level_min >= 0, got {level_min}, {level_max}")
    pts = _as_points(points)
    n_distinct = np.unique(pts, axis=0).shape[0] if pts.size else 0
    counts = {}
    used, excluded = [], []
    for level in range(level_min, level_max + 1):
        c = occupied_cubes(pts, level).shape[0]
        counts[level] = int(c)
        if n_distinct > 1 and c >= SATURATION_FRACTION * n_distinct:
            excluded.append(level)
        elif c > 0:
            used.append(level)
    if excluded:
        warnings.warn(
            f"levels {excluded} saturated (counts near the {n_distinct} sample points); excluded",
            RuntimeWarning,
            stacklevel=2,
        )
    if len(used) < 3:
        raise FitError(f"only {len(used)} usable scales (need 3); counts={counts}")
    x = np.array(used, dtype=float)
    y = np.log2([counts[lv] for lv in used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DimensionEstimate(
        value=float(slope),
        scales_used=used,
        counts=counts,
        fit_residual=float(np.sqrt(np.mean(resid ** 2))),
        excluded=excluded,
    )


# ---------------------------------------------------------------------------
# self-similar reference sets


def cantor_intervals(ratio: float, depth: int):
    """Left endpoints of the ``2**depth`` construction intervals and their length."""
    if not 0 < ratio < 0.5:
        raise DomainError(f"ratio must lie in (0, 1/2), got {ratio!r}")
    if not 0 <= depth <= 20:
        raise DomainError(f"depth must lie in [0, 20], got {depth!r}")
    lefts = np.zeros(1)
    for _ in range(depth):
        lefts = np.concatenate([ratio * lefts, (1.0 - ratio) + ratio * lefts])
    return np.sort(lefts), ratio ** depth


def cantor_set(ratio: float, depth: int, mode: str = "endpoints", seed: int = 0, n_samples: int = 10_000) -> PointSet:
    """Self-similar Cantor set with contraction ``ratio`` (dimension log 2 / log(1/ratio))."""
    lefts, length = cantor_intervals(ratio, depth)
    if mode == "endpoints":
        pts = np.unique(np.concatenate([lefts, lefts + length]))
    elif mode in ("uniform-sample", "uniform"):
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, lefts.size, size=n_samples)
        pts = lefts[idx] + length * rng.random(n_samples)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    meta = {"generator": "cantor", "ratio": ratio, "depth": depth, "mode": mode, "seed": seed}
    return PointSet(pts[:, None], meta)


def interval_cover(lefts, length: float, level: int, tau: float = 1.0) -> CubeFamily:
    """Level-``level`` closed dyadic cubes covering the union of ``[a, a + length]``."""
    scale = 2.0 ** level
    lo = np.floor(np.asarray(lefts) * scale).astype(np.int64)
    hi = np.ceil((np.asarray(lefts) + length) * scale).astype(np.int64) - 1
    hi = np.maximum(lo, hi)
    span = hi - lo + 1
    ks = np.repeat(lo, span) + (np.arange(span.sum()) - np.repeat(np.cumsum(span) - span, span))
    ks = np.unique(ks)
    return CubeFamily([DyadicCube(level, (int(k),)) for k in ks], tau)


# ---------------------------------------------------------------------------
# Lorentz norm


def lorentz_norm_p1(f, p: float, mask=None) -> float:
    """``int_0^inf meas{|f| > t}**(1/p) dt`` for a cellwise-constant grid function.

    The distribution function is a step function, so the integral is a finite
    sum over the sorted distinct magnitudes and is exact.
    """
    if not p > 1:
        raise DomainError(f"p must be > 1, got {p!r}")
    a = np.abs(f.values) if f.is_scalar else np.linalg.norm(f.values, axis=-1)
    if mask is not None:
        a = np.where(mask, a, 0.0)
    a = np.sort(a.ravel())[::-1]
    a = a[a > 0]
    if a.size == 0:
        return 0.0
    drops = a - np.append(a[1:], 0.0)
    k = np.arange(1, a.size + 1)
    keep = drops > 0
    # scalar pow keeps indicator norms bitwise equal to meas**(1/p)
    e = 1.0 / p
    return math.fsum(d * math.pow(float(kk) * f.cell_volume, e) for d, kk in zip(drops[keep], k[keep]))


def lp_norm(f, p: float, mask=None) -> float:
    return f.lp_norm(p, mask=mask)
