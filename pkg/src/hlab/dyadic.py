"""Dyadic cubes, cube families, regularization and Frostman-type measures.

A dyadic cube of level ``l`` with integer coordinates ``k`` is the closed cube
``prod_i [k_i 2^-l, (k_i + 1) 2^-l]``. Cube identity and nesting are decided on
integers only; floating point enters through side lengths ``2**-l`` (exact in
binary) and the weights ``side**tau``.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError

# relative slack for the packing inequality; ties (sum == side**tau) never merge
PACKING_RTOL = 1e-12
DEFAULT_ROOT_LEVEL = 4


def _weight(level: int, tau: float) -> float:
    return 2.0 ** (-level * tau)


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if not self.coords:
            raise DomainError("a dyadic cube needs at least one coordinate")

    @classmethod
    def containing(cls, point: Sequence[float], level: int) -> "DyadicCube":
        """The half-open level-``level`` cube containing ``point``."""
        scale = 2.0 ** level
        return cls(level, tuple(math.floor(x * scale) for x in point))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def lower(self) -> tuple:
        return tuple(k * self.side for k in self.coords)

    @property
    def upper(self) -> tuple:
        return tuple((k + 1) * self.side for k in self.coords)

    @property
    def center(self) -> tuple:
        return tuple((k + 0.5) * self.side for k in self.coords)

    @property
    def diameter(self) -> float:
        return self.side * math.sqrt(self.dim)

    def weight(self, tau: float) -> float:
        return _weight(self.level, tau)

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level - 1, tuple(k >> 1 for k in self.coords))

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise DomainError(f"level {level} is finer than the cube's level {self.level}")
        shift = self.level - level
        return DyadicCube(level, tuple(k >> shift for k in self.coords))

    def children(self) -> list:
        kids = [()]
        for k in self.coords:
            kids = [c + (2 * k + b,) for c in kids for b in (0, 1)]
        return [DyadicCube(self.level + 1, c) for c in kids]

    def contains(self, other: "DyadicCube") -> bool:
        """Nesting test; every cube contains itself."""
        if other.level < self.level or other.dim != self.dim:
            return False
        return other.ancestor(self.level) == self

    def overlaps(self, other: "DyadicCube") -> bool:
        """True when the interiors intersect (equivalently: the cubes are nested)."""
        return self.contains(other) or other.contains(self)

    def orthant(self) -> tuple:
        return tuple(k < 0 for k in self.coords)

    def doubled_bounds(self) -> tuple:
        """Bounds of the concentric cube of twice the side (not dyadic)."""
        half = self.side
        lo = tuple(c - half for c in self.center)
        hi = tuple(c + half for c in self.center)
        return lo, hi

    def in_root(self, root_level: int = DEFAULT_ROOT_LEVEL) -> bool:
        """Whether the cube lies inside ``[-2^L, 2^L]^n``."""
        if self.level < -root_level:
            return False
        bound = 1 << (root_level + self.level)
        return all(-bound <= k and k + 1 <= bound for k in self.coords)

    def to_dict(self) -> dict:
        return {"level": self.level, "coords": list(self.coords)}

    @classmethod
    def from_dict(cls, d: dict) -> "DyadicCube":
        return cls(int(d["level"]), tuple(int(c) for c in d["coords"]))


@dataclass
class CubeFamily:
    """A finite multiset of dyadic cubes weighted by ``side**tau``."""

    cubes: list
    tau: float

    def __post_init__(self):
        self.cubes = list(self.cubes)
        if not self.tau >= 0:
            raise DomainError(f"tau must be >= 0, got {self.tau!r}")
        dims = {c.dim for c in self.cubes}
        if len(dims) > 1:
            raise DomainError(f"mixed cube dimensions {sorted(dims)}")

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    @property
    def dim(self):
        return self.cubes[0].dim if self.cubes else None

    @property
    def tau_weight(self) -> float:
        return math.fsum(c.weight(self.tau) for c in self.cubes)

    def multiplicities(self) -> dict:
        counts = defaultdict(int)
        for c in self.cubes:
            counts[c] += 1
        return dict(counts)

    def to_json(self) -> str:
        return json.dumps({"tau": self.tau, "cubes": [c.to_dict() for c in self.cubes]})

    @classmethod
    def from_json(cls, text: str) -> "CubeFamily":
        d = json.loads(text)
        return cls([DyadicCube.from_dict(c) for c in d["cubes"]], float(d["tau"]))


class RegularFamily(CubeFamily):
    """Cube family satisfying the packing inequality for every dyadic cube.

    Construction verifies the inequality and raises
    :class:`~hlab.errors.PreconditionError` carrying the witnessing cube.
    """

    def __post_init__(self):
        super().__post_init__()
        if not self.tau > 0:
            raise DomainError(f"tau must be > 0, got {self.tau!r}")
        bad = packing_violation(self.cubes, self.tau)
        if bad is not None:
            raise PreconditionError(
                f"packing inequality fails at cube level={bad.level} coords={bad.coords}",
                witness=bad,
            )


def _sweep(cubes: Iterable[DyadicCube], tau: float, merge: bool):
    """Walk every ancestor chain from the finest level upward.

    Each group collects the member weights inside one dyadic cube. With
    ``merge`` an overfull group is replaced by its cube; otherwise the first
    overfull cube is returned. The walk stops once all members are absorbed,
    every group is within its cap and no two groups share an orthant (cubes in
    different orthants never acquire a common dyadic ancestor).
    """
    by_level = defaultdict(list)
    for c in cubes:
        by_level[c.level].append(c)
    if not by_level:
        return [] if merge else None
    level = max(by_level)
    coarsest = min(by_level)
    groups: dict = {}
    while True:
        for c in by_level.get(level, ()):
            g = groups.setdefault(c, ([], []))
            g[0].append(c.weight(tau))
            g[1].append(c)
        cap = _weight(level, tau)
        for key, (weights, members) in groups.items():
            total = math.fsum(weights)
            if total > cap * (1.0 + PACKING_RTOL):
                if not merge:
                    return key
                weights[:] = [cap]
                members[:] = [key]
        if level <= coarsest:
            orthants = {key.orthant() for key in groups}
            if len(orthants) == len(groups):
                break
        parents: dict = {}
        for key, (weights, members) in groups.items():
            g = parents.setdefault(key.parent(), ([], []))
            g[0].extend(weights)
            g[1].extend(members)
        groups = parents
        level -= 1
    if not merge:
        return None
    return [m for _, members in groups.values() for m in members]


def packing_violation(cubes: Iterable[DyadicCube], tau: float):
    """First dyadic cube ``Q`` with ``side(Q)**tau < sum of contained weights``.

    Returns ``None`` when the packing inequality holds everywhere.
    """
    return _sweep(list(cubes), tau, merge=False)


def regularize(family: CubeFamily) -> RegularFamily:
    """Bottom-up merge into a regular family.

    The result covers the input, has no larger ``tau``-weight, consists of
    pairwise nonoverlapping cubes and satisfies the packing inequality.
    Duplicates count with multiplicity.
    """
    if not family.tau > 0:
        raise DomainError(f"tau must be > 0, got {family.tau!r}")
    out = _sweep(family.cubes, family.tau, merge=True)
    return RegularFamily(sorted(out), family.tau)


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class PiecewiseUniformMeasure:
    """Sum of constant densities on pairwise nonoverlapping dyadic cubes."""

    pieces: tuple  # of (DyadicCube, density)

    @property
    def dim(self):
        return self.pieces[0][0].dim if self.pieces else None

    def _arrays(self):
        if not self.pieces:
            return np.zeros(0, dtype=np.int64), np.zeros((0, 0), dtype=np.int64), np.zeros(0)
        levels = np.array([c.level for c, _ in self.pieces], dtype=np.int64)
        coords = np.array([c.coords for c, _ in self.pieces], dtype=np.int64)
        dens = np.array([d for _, d in self.pieces], dtype=float)
        return levels, coords, dens

    @property
    def total_mass(self) -> float:
        return math.fsum(d * c.side ** c.dim for c, d in self.pieces)

    def mass(self, cube: DyadicCube) -> float:
        total = []
        for c, d in self.pieces:
            if c.contains(cube):
                total.append(d * cube.side ** cube.dim)
            elif cube.contains(c):
                total.append(d * c.side ** c.dim)
        return math.fsum(total)

    def masses(self, levels, coords) -> np.ndarray:
        """Vectorized :meth:`mass` for many dyadic cubes.

        ``levels`` has shape (m,), ``coords`` shape (m, n).
        """
        lq = np.asarray(levels, dtype=np.int64)
        kq = np.asarray(coords, dtype=np.int64).reshape(len(lq), -1)
        out = np.zeros(len(lq))
        pl, pk, pd = self._arrays()
        n = kq.shape[1]
        for li, ki, di in zip(pl, pk, pd):
            finer = lq >= li
            shift_q = np.where(finer, lq - li, 0)
            inside = finer & np.all((kq >> shift_q[:, None]) == ki, axis=1)
            shift_i = np.where(finer, 0, li - lq)
            around = ~finer & np.all((ki[None, :] >> shift_i[:, None]) == kq, axis=1)
            out += np.where(inside, di * np.exp2(-lq.astype(float) * n), 0.0)
            out += np.where(around, di * 2.0 ** (-float(li) * n), 0.0)
        return out

    def box_masses(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """Mass of axis-aligned boxes given by (m, n) arrays of bounds."""
        lower = np.atleast_2d(lower)
        upper = np.atleast_2d(upper)
        out = np.zeros(lower.shape[0])
        for c, d in self.pieces:
            lo = np.array(c.lower)
            hi = np.array(c.upper)
            ov = np.clip(np.minimum(upper, hi) - np.maximum(lower, lo), 0.0, None)
            out += d * np.prod(ov, axis=1)
        return out

    def cell_masses(self, grid) -> np.ndarray:
        """Mass of every cell of a :class:`~hlab.grid.GridFunction` (grid-shaped)."""
        lo, hi = grid.cell_bounds()
        return self.box_masses(lo, hi).reshape(grid.shape)

    def integrate(self, f) -> float:
        """``int f dmu`` for a grid function, treating ``f`` as cellwise constant."""
        w = self.cell_masses(f)
        return float(np.sum(f.values * w))


@dataclass(frozen=True)
class FrostmanMeasure(PiecewiseUniformMeasure):
    """Density ``side(Q_i)**(tau - n)`` on every cube of a regular family."""

    family: RegularFamily = None
    tau: float = None


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite sum of weighted point masses."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def mass(self, cube: DyadicCube) -> float:
        pts = np.atleast_2d(self.points)
        inside = np.all(np.floor(pts * 2.0 ** cube.level) == np.array(cube.coords), axis=1)
        return float(np.sum(np.asarray(self.weights)[inside]))


def lebesgue_measure(cube: DyadicCube) -> PiecewiseUniformMeasure:
    return PiecewiseUniformMeasure(((cube, 1.0),))


def frostman_measure(family: CubeFamily, tau: float | None = None) -> FrostmanMeasure:
    """Measure with density ``side(Q_i)**(tau - n)`` on each family cube.

    Raises :class:`~hlab.errors.PreconditionError` (with the witnessing cube)
    when the family violates the packing inequality for ``tau``.
    """
    tau = family.tau if tau is None else tau
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau!r}")
    bad = packing_violation(family.cubes, tau)
    if bad is not None:
        raise PreconditionError(
            f"family is not regular for tau={tau:g}: packing fails at "
            f"level={bad.level} coords={bad.coords}",
            witness=bad,
        )
    reg = family if isinstance(family, RegularFamily) and family.tau == tau else RegularFamily(family.cubes, tau)
    pieces = tuple((c, c.side ** (tau - c.dim)) for c in reg.cubes)
    return FrostmanMeasure(pieces, reg, tau)


def measure_norm_beta(mu, beta: float) -> float:
    """``sup_I side(I)**-beta * mu(I)`` over dyadic cubes ``I``.

    For piecewise-uniform measures the supremum is attained on a piece or one
    of its ancestors when ``beta <= n``; for ``beta > n`` (or any point mass)
    it is infinite and :class:`OverflowError` is raised.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    if isinstance(mu, DiscreteMeasure):
        if np.any(np.asarray(mu.weights) > 0):
            raise OverflowError("point masses have infinite beta-norm for beta > 0")
        return 0.0
    pieces = [(c, d) for c, d in mu.pieces if d > 0]
    if not pieces:
        return 0.0
    n = pieces[0][0].dim
    if beta > n:
        raise OverflowError(f"beta = {beta:g} > n = {n}: ratio blows up on small cubes")
    best = max(d * c.side ** (n - beta) for c, d in pieces)
    # ancestors: aggregate piece masses level by level
    by_level = defaultdict(list)
    for c, d in pieces:
        by_level[c.level].append((c, d * c.side ** n))
    level = max(by_level)
    coarsest = min(by_level)
    groups: dict = {}
    while True:
        for c, m in by_level.get(level, ()):
            groups.setdefault(c, []).append(m)
        for key, masses in groups.items():
            best = max(best, math.fsum(masses) * key.side ** (-beta))
        if level <= coarsest and len({k.orthant() for k in groups}) == len(groups):
            break
        parents: dict = {}
        for key, masses in groups.items():
            parents.setdefault(key.parent(), []).extend(masses)
        groups = parents
        level -= 1
    return best
