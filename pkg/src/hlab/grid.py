"""Uniform-grid sampled functions on a cube in R^n (n = 1 or 2)."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _is_power_of_two(k: int) -> bool:
    return k > 0 and k & (k - 1) == 0


@dataclass
class GridFunction:
    """Cell-centred samples of a function on ``corner + [0, side]^dim``.

    ``values`` has shape ``(cells,) * dim`` for scalar fields or
    ``(cells,) * dim + (d,)`` for vector fields. Outside the box the function
    is taken to be zero.
    """

    dim: int
    corner: tuple
    side: float
    cells: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"grid dimension must be 1 or 2, got {self.dim}")
        if not _is_power_of_two(int(self.cells)):
            raise DomainError(f"cells per side must be a power of two, got {self.cells}")
        self.cells = int(self.cells)
        self.corner = tuple(float(c) for c in np.broadcast_to(self.corner, (self.dim,)))
        if not self.side > 0:
            raise DomainError(f"box side must be positive, got {self.side}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[: self.dim] != self.shape:
            raise DomainError(
                f"values shape {self.values.shape} does not match grid {self.shape}"
            )

    @classmethod
    def zeros(cls, dim, corner, side, cells):
        return cls(dim, corner, side, cells, np.zeros((cells,) * dim))

    @classmethod
    def from_function(cls, func, dim, corner, side, cells):
        """Sample ``func`` (vectorized over trailing-axis coordinates) at cell centres."""
        g = cls.zeros(dim, corner, side, cells)
        g.values = np.asarray(func(g.centers()), dtype=float).reshape(g.shape)
        return g

    @property
    def shape(self) -> tuple:
        return (self.cells,) * self.dim

    @property
    def h(self) -> float:
        return self.side / self.cells

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == self.dim

    def axes(self) -> list:
        return [self.corner[i] + (np.arange(self.cells) + 0.5) * self.h for i in range(self.dim)]

    def centers(self) -> np.ndarray:
        """Cell centres with shape ``shape + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_bounds(self):
        c = self.centers().reshape(-1, self.dim)
        return c - self.h / 2, c + self.h / 2

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.dim, self.corner, self.side, self.cells, values)

    def same_grid(self, other: "GridFunction") -> bool:
        return (
            self.dim == other.dim
            and self.corner == other.corner
            and self.side == other.side
            and self.cells == other.cells
        )

    def contains_box(self, lower, upper) -> bool:
        lo = np.asarray(self.corner)
        hi = lo + self.side
        return bool(np.all(np.asarray(lower) >= lo) and np.all(np.asarray(upper) <= hi))

    def mask_box(self, lower, upper) -> np.ndarray:
        """Cells whose centre lies in the closed box ``[lower, upper]``."""
        c = self.centers()
        return np.all((c >= np.asarray(lower)) & (c <= np.asarray(upper)), axis=-1)

    def mask_cube(self, cube) -> np.ndarray:
        return self.mask_box(cube.lower, cube.upper)

    def index_of(self, points) -> np.ndarray:
        """Index of the cell containing each point, clipped to the grid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float).reshape(-1, self.dim))
        idx = np.floor((pts - np.asarray(self.corner)) / self.h).astype(np.int64)
        return np.clip(idx, 0, self.cells - 1)

    def value_at(self, points) -> np.ndarray:
        """Piecewise-constant lookup of the cell containing each point."""
        idx = self.index_of(points)
        return self.values[tuple(idx.T)]

    def interpolate(self, points) -> np.ndarray:
        """Multilinear interpolation between cell centres, constant past the edge."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        if self.dim == 1:
            return np.interp(pts[:, 0], self.axes()[0], self.values)
        from scipy.interpolate import RegularGridInterpolator

        ax = self.axes()
        clipped = np.clip(pts, [a[0] for a in ax], [a[-1] for a in ax])
        return RegularGridInterpolator(ax, self.values)(clipped)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.cell_volume)

    def lp_norm(self, p: float, mask=None) -> float:
        a = np.abs(self.values if self.is_scalar else np.linalg.norm(self.values, axis=-1))
        if mask is not None:
            a = a[mask]
        if np.isinf(p):
            return float(a.max(initial=0.0))
        return float(np.sum(a ** p) * self.cell_volume) ** (1.0 / p)

    # -- CSV -----------------------------------------------------------------
    def to_csv(self) -> str:
        if not self.is_scalar:
            raise DomainError("CSV export supports scalar grid functions only")
        corner = ";".join(repr(c) for c in self.corner)
        buf = io.StringIO()
        buf.write(
            f"# dim={self.dim}, box_corner={corner}, box_side={self.side!r}, "
            f"cells_per_side={self.cells}\n"
        )
        rows = self.values.reshape(1, -1).T if self.dim == 1 else self.values
        for row in rows:
            buf.write(",".join(repr(float(v)) for v in np.atleast_1d(row)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise DomainError("grid CSV must start with a '# dim=...' header")
        header = {}
        for part in lines[0].lstrip("#").split(","):
            key, _, val = part.strip().partition("=")
            header[key.strip()] = val.strip()
        try:
            dim = int(header["dim"])
            corner = tuple(float(c) for c in header["box_corner"].split(";"))
            side = float(header["box_side"])
            cells = int(header["cells_per_side"])
        except (KeyError, ValueError) as exc:
            raise DomainError(f"malformed grid CSV header: {lines[0]!r}") from exc
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        values = np.array(rows, dtype=float)
        values = values.reshape(-1) if dim == 1 else values
        return cls(dim, corner, side, cells, values)
