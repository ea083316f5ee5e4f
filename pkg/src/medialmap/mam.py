"""Multiscale medial axis map M = (1+lam)(dist^2 - C(dist^2)) and friends.

Also the pointwise tools that work on finite sets directly: nearest sets,
convex hulls, the landscape map dist^2(x;K) - dist^2(x; co K(x)) and
separation angles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .edt import edt_mask, edt_points
from .fields import (BinaryMask2, EmptySetError, GridSpec, PointSet2, ScalarField2,
                     boundary_cells)
from .lowtrans import (BackendKind, LowerTransformBackend, _border_distance, locality_radius,
                       lower_transform_at, lower_transform_iterative, opening_arrays)
from .report import CheckReport

CLAMP_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class MamParams:
    lam: float
    backend: LowerTransformBackend = field(default_factory=LowerTransformBackend)
    nearest_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not 0 <= self.nearest_tol <= 1e-3:
            raise ValueError(f"nearest_tol must lie in [0, 1e-3], got {self.nearest_tol}")


@dataclass(frozen=True, slots=True)
class MamResult:
    m_field: ScalarField2
    dist2: ScalarField2
    lower: ScalarField2
    border_margin: int
    trusted: np.ndarray

    @property
    def spec(self) -> GridSpec:
        return self.m_field.spec


def _clamped_map(d2: np.ndarray, low: np.ndarray, lam: float) -> np.ndarray:
    m = (1 + lam) * (d2 - low)
    worst = float(m.min()) if m.size else 0.0
    if worst < -CLAMP_TOL:
        raise RuntimeError(f"medial axis map negative ({worst:.3e}): lower transform exceeds dist^2")
    return np.maximum(m, 0.0)


def mam_from_dist2(dist2: ScalarField2, p: MamParams, check_erosion: bool = True) -> MamResult:
    """Medial axis map from a given squared-distance field."""
    lam = float(p.lam)
    h = dist2.spec.spacing_h
    cfg = p.backend
    op = opening_arrays(dist2.values, lam, h, cfg.threads, check_erosion=check_erosion)
    if cfg.kind is BackendKind.OPENING:
        low = op.lower
    else:
        low = lower_transform_iterative(dist2, lam, cfg).values
    m = _clamped_map(dist2.values, low, lam)
    return MamResult(ScalarField2(dist2.spec, m), dist2, ScalarField2(dist2.spec, low),
                     op.border_margin, op.trusted)


def mam_field(k: PointSet2 | BinaryMask2, spec: GridSpec, p: MamParams) -> MamResult:
    """M_lam of a point set or mask on the grid ``spec``.

    ``trusted`` marks cells whose value is not affected by the grid border;
    it is computed by the opening route whichever backend produces the values.
    """
    if isinstance(k, BinaryMask2):
        if k.spec != spec:
            raise ValueError("mask grid does not match spec")
        d2 = edt_mask(k, p.backend.threads)
        res = mam_from_dist2(d2, p)
        if _touches_border(k.bits):
            # A mask reaching the border is read as a set clipped by the grid:
            # dist^2 is only right where the nearest-point disc fits inside.
            inside = np.sqrt(d2.values) <= spec.spacing_h * (_border_distance(spec.shape) + 0.5)
            res = MamResult(res.m_field, res.dist2, res.lower, res.border_margin,
                            res.trusted & inside)
        return res
    d2 = edt_points(k, spec)
    return mam_from_dist2(d2, p)


def _touches_border(bits: np.ndarray) -> bool:
    return bool(bits[0].any() or bits[-1].any() or bits[:, 0].any() or bits[:, -1].any())


def linear_mam(m: ScalarField2) -> ScalarField2:
    """Pointwise square root, the map of linear growth."""
    v = m.values
    if v.size and float(v.min()) < -CLAMP_TOL:
        raise ValueError(f"negative map value {float(v.min()):.3e}")
    return ScalarField2(m.spec, np.sqrt(np.maximum(v, 0.0)))


def suplevel_mask(m: ScalarField2, threshold: float) -> BinaryMask2:
    return BinaryMask2(m.spec, m.values >= threshold)


def asymptotic_hull_distance(dist2: ScalarField2, lower: ScalarField2, lam: float) -> ScalarField2:
    """(1+lam) C - lam dist^2, which tends to dist^2(x; co K(x)) for large lam."""
    if dist2.spec != lower.spec:
        raise ValueError("mismatched grids")
    v = (1 + lam) * lower.values - lam * dist2.values
    # Squared distances are nonnegative; grid error can dip below zero.
    return ScalarField2(dist2.spec, np.maximum(v, 0.0))


# -- pointwise geometry on finite sets ---------------------------------------

def _as_array(k) -> np.ndarray:
    if isinstance(k, PointSet2):
        return k.points
    return np.asarray(k, dtype=float).reshape(-1, 2)


def nearest_set(k: PointSet2, x: tuple[float, float], nearest_tol: float = 0.0) -> PointSet2:
    """Points of k within (1 + nearest_tol) times the minimal distance to x."""
    pts = _as_array(k)
    if len(pts) == 0:
        raise EmptySetError("empty set K")
    d = np.hypot(pts[:, 0] - x[0], pts[:, 1] - x[1])
    return PointSet2(pts[d <= (1 + nearest_tol) * d.min()])


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(pts: PointSet2) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain), collinear points dropped.

    Degenerate hulls come back as one point or the two ends of a segment.
    """
    p = _as_array(pts)
    if len(p) == 0:
        raise EmptySetError("empty point set")
    p = np.unique(p, axis=0)          # lexicographic sort
    if len(p) <= 2:
        return p.copy()
    lower: list = []
    for q in p:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list = []
    for q in p[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) == 0:
        # All points collinear and the chains collapsed.
        return np.array([p[0], p[-1]])
    return hull


def _seg_dist2(x, a, b) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / L2))
    ex = x[0] - a[0] - t * dx
    ey = x[1] - a[1] - t * dy
    return ex * ex + ey * ey


def dist2_to_hull(x: tuple[float, float], hull: np.ndarray) -> float:
    """Squared distance from x to a convex polygon given by its ccw vertices."""
    hull = np.asarray(hull, dtype=float).reshape(-1, 2)
    n = len(hull)
    if n == 0:
        raise EmptySetError("empty hull")
    if n == 1:
        return float((x[0] - hull[0, 0]) ** 2 + (x[1] - hull[0, 1]) ** 2)
    if n == 2:
        return _seg_dist2(x, hull[0], hull[1])
    inside = True
    best = math.inf
    for a in range(n):
        p, q = hull[a], hull[(a + 1) % n]
        if _cross(p, q, x) < 0:
            inside = False
        best = min(best, _seg_dist2(x, p, q))
    return 0.0 if inside else best


def landscape_map(k: PointSet2, x: tuple[float, float], nearest_tol: float = 1e-9) -> float:
    """dist^2(x; K) - dist^2(x; co K(x)), the large-scale limit of the map."""
    pts = _as_array(k)
    if len(pts) == 0:
        raise EmptySetError("empty set K")
    d2 = float(np.min((pts[:, 0] - x[0]) ** 2 + (pts[:, 1] - x[1]) ** 2))
    ks = nearest_set(PointSet2(pts), x, nearest_tol)
    return max(d2 - dist2_to_hull(x, convex_hull_2d(ks)), 0.0)


def separation_angle(k: PointSet2, x: tuple[float, float], nearest_tol: float = 1e-9) -> float:
    """Largest angle at x between two nearest points of K (0 for one)."""
    pts = _as_array(k)
    d = np.hypot(pts[:, 0] - x[0], pts[:, 1] - x[1])
    if d.min() == 0:
        raise ValueError("x lies in K")
    ks = nearest_set(PointSet2(pts), x, nearest_tol).points
    if len(ks) < 2:
        return 0.0
    v = ks - np.asarray(x, dtype=float)
    v /= np.hypot(v[:, 0], v[:, 1])[:, None]
    cos = np.clip(v @ v.T, -1.0, 1.0)
    return float(np.arccos(cos.min()))


# -- pointwise map evaluation ---------------------------------------------------

def aligned_spec(spec: GridSpec, x: tuple[float, float]) -> GridSpec:
    """Copy of ``spec`` shifted by under half a cell so that x is a sample."""
    i, j = spec.nearest_index(*x)
    h = spec.spacing_h
    return GridSpec(x[0] - i * h, x[1] - j * h, h, spec.nx, spec.ny)


def mam_at(k: PointSet2, x: tuple[float, float], lam: float, spec: GridSpec,
           backend: LowerTransformBackend | None = None) -> tuple[float, float, bool]:
    """(M_lam(x), dist^2(x), trusted) on a copy of spec aligned to x."""
    s = aligned_spec(spec, x)
    res = mam_field(k, s, MamParams(lam, backend or LowerTransformBackend()))
    i, j = s.nearest_index(*x)
    return float(res.m_field.values[j, i]), float(res.dist2.values[j, i]), bool(res.trusted[j, i])


def mam_finite(k: PointSet2, x: tuple[float, float], lam: float) -> tuple[float, float]:
    """(M_lam(x), dist^2(x)) for finite K without a grid.

    dist^2 + lam|.|^2 is the minimum of the quadratics |z - p|^2 + lam|z|^2,
    and the convex envelope of such a minimum at x is

        min over weights mu on the simplex of
        (|(1+lam) x - sum mu_i p_i|^2 + lam sum mu_i |p_i|^2) / (1+lam).

    The minimum of this convex quadratic sits in the relative interior of some
    face, so solving the equality-constrained problem on every face of at most
    three vertices and keeping the best feasible value is exact.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    p = _as_array(k)
    if len(p) == 0:
        raise EmptySetError("empty set K")
    xv = np.asarray(x, dtype=float)
    a = (1 + lam) * xv
    s = (p ** 2).sum(1)
    d2 = float(((p - xv) ** 2).sum(1).min())
    best = math.inf
    for size in (1, 2, 3):
        for face in itertools.combinations(range(len(p)), size):
            q = p[list(face)]
            n = len(face)
            kkt = np.zeros((n + 1, n + 1))
            kkt[:n, :n] = 2 * q @ q.T
            kkt[:n, n] = -1.0
            kkt[n, :n] = 1.0
            rhs = np.concatenate([2 * q @ a - lam * s[list(face)], [1.0]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            mu = sol[:n]
            if mu.min() < -1e-12 or not np.isfinite(mu).all():
                continue
            u = a - mu @ q
            best = min(best, float(u @ u + lam * mu @ s[list(face)]))
    low = best / (1 + lam) - lam * float(xv @ xv)
    return (1 + lam) * max(d2 - low, 0.0), d2


def mam_local(k: PointSet2, x: tuple[float, float], lam: float, h: float,
              pad: int = 3) -> tuple[float, float]:
    """(M_lam(x), dist^2(x)) from the smallest grid of step h centred on x
    that holds the locality window of the lower transform."""
    pts = _as_array(k)
    if len(pts) == 0:
        raise EmptySetError("empty set K")
    d2x = float(np.min((pts[:, 0] - x[0]) ** 2 + (pts[:, 1] - x[1]) ** 2))
    # One spare cell absorbs rounding in the placement of x on the grid.
    w = int(math.ceil(locality_radius(math.sqrt(d2x), lam) / h)) + pad + 1
    spec = GridSpec(x[0] - w * h, x[1] - w * h, h, 2 * w + 1, 2 * w + 1)
    d2 = edt_points(PointSet2(pts), spec)
    low = lower_transform_at(d2, d2, lam, x, pad)
    return (1 + lam) * max(d2x - low, 0.0), d2x


def limit_convergence_probe(k: PointSet2, x: tuple[float, float], lambdas: list[float],
                            spec: GridSpec, backend: LowerTransformBackend | None = None,
                            nearest_tol: float = 1e-9) -> list[tuple[float, float]]:
    """[(lam, |M_lam(x) - M_inf(x)|)] for each lam, with x made a grid sample."""
    minf = landscape_map(k, x, nearest_tol)
    out = []
    for lam in lambdas:
        m, _, _ = mam_at(k, x, lam, spec, backend)
        out.append((float(lam), abs(m - minf)))
    return out


def angle_bound_check(k: PointSet2, x: tuple[float, float], lam: float, spec: GridSpec,
                      nearest_tol: float = 1e-9,
                      backend: LowerTransformBackend | None = None) -> CheckReport:
    """sin^2(theta/2) dist^2 <= M_lam(x) <= dist^2, each side within 5h(1+lam)."""
    theta = separation_angle(k, x, nearest_tol)
    m, d2, trusted = mam_at(k, x, lam, spec, backend)
    tol = 5 * spec.spacing_h * (1 + lam)
    lo = math.sin(theta / 2) ** 2 * d2
    excess = max(lo - m, m - d2)
    return CheckReport("angle_bound", excess, tol, passed=bool(excess <= tol and trusted),
                       details={"theta": theta, "mam": m, "dist2": d2, "lower_bound": lo,
                                "trusted": trusted})


def mam_from_mask_boundary_equivalence(mask: BinaryMask2, p: MamParams) -> CheckReport:
    """Compare M with K = boundary cells of the mask against K = its complement."""
    bnd = boundary_cells(mask)
    interior = mask.bits & ~bnd.bits
    if not interior.any():
        raise ValueError("mask has no interior cells")
    comp = BinaryMask2(mask.spec, ~mask.bits)
    if not comp.bits.any():
        raise ValueError("mask has no complement cells")
    r1 = mam_field(bnd, mask.spec, p)
    r2 = mam_field(comp, mask.spec, p)
    cells = interior & r1.trusted & r2.trusted
    diff = np.abs(r1.m_field.values - r2.m_field.values)[cells]
    h = mask.spec.spacing_h
    measured = float(diff.max()) if diff.size else 0.0
    return CheckReport("boundary_vs_complement", measured, 10 * h * (1 + p.lam),
                       details={"cells": int(cells.sum())})


def support_in_vlk_check(k: PointSet2 | BinaryMask2, medial_axis, lam: float, spec: GridSpec,
                         backend: LowerTransformBackend | None = None,
                         result: MamResult | None = None,
                         region: np.ndarray | None = None) -> CheckReport:
    """Every cell with M > 10h(1+lam)^2 satisfies lam dist(x; M_K) <= dist(x; K) + 5h.

    ``medial_axis`` needs a ``dist(x, y)`` method; ``region`` optionally
    restricts the cells examined.
    """
    res = result or mam_field(k, spec, MamParams(lam, backend or LowerTransformBackend()))
    h = spec.spacing_h
    cells = res.trusted & (res.m_field.values > 10 * h * (1 + lam) ** 2)
    if region is not None:
        cells &= region
    jj, ii = np.nonzero(cells)
    X, Y = spec.world(ii, jj)
    d = np.sqrt(res.dist2.values[jj, ii])
    dm = np.array([medial_axis.dist(a, b) for a, b in zip(X, Y)])
    excess = lam * dm - d
    measured = float(excess.max()) if excess.size else -math.inf
    return CheckReport("support_in_neighbourhood", measured, 5 * h,
                       details={"support_cells": int(cells.sum())})
