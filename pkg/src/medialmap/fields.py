"""Grid, mask and point-set containers.

Grids are stored as 2-D numpy arrays of shape (ny, nx) indexed ``[j, i]``;
``values.ravel()`` is the row-major flat layout used by the file format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

DEDUP_TOL = 1e-12


class EmptySetError(ValueError):
    """Raised when a set that must define K has no members."""


@dataclass(frozen=True, slots=True)
class GridSpec:
    origin_x: float
    origin_y: float
    spacing_h: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.spacing_h) and self.spacing_h > 0):
            raise ValueError(f"spacing_h must be > 0, got {self.spacing_h}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ValueError(f"nx, ny must be positive integers, got {self.nx}, {self.ny}")
        if not (np.isfinite(self.origin_x) and np.isfinite(self.origin_y)):
            raise ValueError("origin must be finite")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "spacing_h", float(self.spacing_h))
        object.__setattr__(self, "origin_x", float(self.origin_x))
        object.__setattr__(self, "origin_y", float(self.origin_y))

    @classmethod
    def from_bounds(cls, x0: float, x1: float, y0: float, y1: float, h: float) -> GridSpec:
        """Grid with samples at x0, x0+h, ... covering [x0, x1] x [y0, y1]."""
        nx = int(round((x1 - x0) / h)) + 1
        ny = int(round((y1 - y0) / h)) + 1
        return cls(x0, y0, h, nx, ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x_max(self) -> float:
        return self.origin_x + (self.nx - 1) * self.spacing_h

    @property
    def y_max(self) -> float:
        return self.origin_y + (self.ny - 1) * self.spacing_h

    def world(self, i, j):
        return (self.origin_x + np.asarray(i) * self.spacing_h,
                self.origin_y + np.asarray(j) * self.spacing_h)

    def xs(self) -> np.ndarray:
        return self.origin_x + np.arange(self.nx) * self.spacing_h

    def ys(self) -> np.ndarray:
        return self.origin_y + np.arange(self.ny) * self.spacing_h

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """World coordinate arrays X, Y of shape (ny, nx)."""
        return np.meshgrid(self.xs(), self.ys())

    def nearest_index(self, x: float, y: float) -> tuple[int, int]:
        """Index (i, j) of the sample nearest to (x, y), clipped to the grid."""
        i = int(np.clip(np.rint((x - self.origin_x) / self.spacing_h), 0, self.nx - 1))
        j = int(np.clip(np.rint((y - self.origin_y) / self.spacing_h), 0, self.ny - 1))
        return i, j

    def contains(self, x: float, y: float, pad: float = 0.0) -> bool:
        return (self.origin_x - pad <= x <= self.x_max + pad
                and self.origin_y - pad <= y <= self.y_max + pad)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, slots=True)
class ScalarField2:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1 and v.size == self.spec.size:
            v = v.reshape(self.spec.shape)
        if v.shape != self.spec.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if v.flags.writeable or not v.flags.c_contiguous:
            v = _frozen(v.copy())
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def at(self, x: float, y: float) -> float:
        """Value at the sample nearest to (x, y)."""
        i, j = self.spec.nearest_index(x, y)
        return float(self.values[j, i])

    def with_values(self, values: np.ndarray) -> ScalarField2:
        return ScalarField2(self.spec, values)


@dataclass(frozen=True, slots=True)
class BinaryMask2:
    spec: GridSpec
    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim == 1 and b.size == self.spec.size:
            b = b.reshape(self.spec.shape)
        if b.shape != self.spec.shape:
            raise ValueError(f"bits shape {b.shape} does not match grid {self.spec.shape}")
        if b.flags.writeable or not b.flags.c_contiguous:
            b = _frozen(b.copy())
        object.__setattr__(self, "bits", b)

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def dedup_points(pts: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Drop points within ``tol`` of an earlier point, keeping first occurrences."""
    if len(pts) < 2:
        return pts
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    # Transitive chains collapse to their first member.
    parent = np.arange(len(pts))
    for a, b in sorted(map(tuple, pairs)):
        ra, rb = parent[a], parent[b]
        while parent[ra] != ra:
            ra = parent[ra]
        while parent[rb] != rb:
            rb = parent[rb]
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
    for k in range(len(pts)):
        r = k
        while parent[r] != r:
            r = parent[r]
        keep[k] = r == k
    return pts[keep]


@dataclass(frozen=True, slots=True)
class PointSet2:
    points: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=np.float64)
        if p.size == 0:
            p = p.reshape(0, 2)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        p = dedup_points(p)
        object.__setattr__(self, "points", _frozen(p.copy()))

    def __len__(self) -> int:
        return len(self.points)

    def require_nonempty(self) -> None:
        if len(self.points) == 0:
            raise EmptySetError("empty set K")


def make_field(spec: GridSpec, fill: float) -> ScalarField2:
    return ScalarField2(spec, np.full(spec.shape, float(fill)))


def mask_to_points(mask: BinaryMask2) -> PointSet2:
    jj, ii = np.nonzero(mask.bits)
    if len(ii) == 0:
        raise EmptySetError("empty set K")
    x, y = mask.spec.world(ii, jj)
    return PointSet2(np.column_stack([x, y]))


def rasterize(points: PointSet2, spec: GridSpec) -> BinaryMask2:
    """Mark the cell nearest to each point; points off the grid are dropped."""
    bits = np.zeros(spec.shape, dtype=bool)
    if len(points):
        p = points.points
        i = np.rint((p[:, 0] - spec.origin_x) / spec.spacing_h).astype(np.int64)
        j = np.rint((p[:, 1] - spec.origin_y) / spec.spacing_h).astype(np.int64)
        ok = (i >= 0) & (i < spec.nx) & (j >= 0) & (j < spec.ny)
        bits[j[ok], i[ok]] = True
    return BinaryMask2(spec, bits)


def boundary_cells(mask: BinaryMask2) -> BinaryMask2:
    """True cells with a false or off-grid 4-neighbour."""
    b = mask.bits
    padded = np.pad(b, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    return BinaryMask2(mask.spec, b & ~interior)
