"""Hausdorff distance, boundary sampling and the stability inequalities.

For closed sets K, L with Hausdorff distance mu the maps satisfy, pointwise,

    |C(dist^2 K) - C(dist^2 L)| <= mu ((d + mu)^2 + 1 + mu)
    |M(K) - M(L)|               <= mu (1+lam) ((d + mu)^2 + 2d + 2mu + 1)

with d = dist(x; K). The checks here add grid slack to both sides.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import EmptySetError, GridSpec, PointSet2, ScalarField2
from .lowtrans import LowerTransformBackend
from .mam import MamParams, mam_field, mam_from_dist2, suplevel_mask
from .oracles import BallComplement, OracleShape, Oval, Rectangle
from .report import CheckReport

REFERENCE_DENSITY = 10
MAX_REFERENCE_POINTS = 2_000_000


# -- Hausdorff distance ---------------------------------------------------------

def _directed(a: np.ndarray, b: np.ndarray, chunk: int = 2048) -> float:
    worst = 0.0
    for s in range(0, len(a), chunk):
        blk = a[s:s + chunk]
        # hypot rather than a sum of squares: tiny separations must not underflow.
        d = np.hypot(blk[:, None, 0] - b[None, :, 0], blk[:, None, 1] - b[None, :, 1])
        worst = max(worst, float(d.min(axis=1).max()))
    return worst


def hausdorff_distance(a: PointSet2, b: PointSet2) -> float:
    """max of the two directed sup-inf distances, by exhaustive comparison."""
    pa = a.points if isinstance(a, PointSet2) else np.asarray(a, dtype=float).reshape(-1, 2)
    pb = b.points if isinstance(b, PointSet2) else np.asarray(b, dtype=float).reshape(-1, 2)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptySetError("Hausdorff distance needs nonempty sets")
    return max(_directed(pa, pb), _directed(pb, pa))


# -- perturbations --------------------------------------------------------------

class PerturbMode(enum.Enum):
    UNIFORM_JITTER = "uniform_jitter"
    SUBSAMPLE = "subsample"
    STAIRCASE_QUANTIZE = "staircase_quantize"


@dataclass(frozen=True, slots=True)
class PerturbationSpec:
    magnitude: float
    mode: PerturbMode = PerturbMode.UNIFORM_JITTER
    seed: int = 0
    fraction: float = 1.0       # SUBSAMPLE: share of points kept
    step: float = 0.0           # STAIRCASE_QUANTIZE: lattice step c

    def __post_init__(self) -> None:
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", PerturbMode(self.mode))
        if not self.magnitude >= 0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude}")
        if not 0 < self.fraction <= 1:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.mode is PerturbMode.STAIRCASE_QUANTIZE and not self.step > 0:
            raise ValueError("staircase quantization needs step > 0")


def perturb(k: PointSet2, ps: PerturbationSpec) -> PointSet2:
    """Perturbed copy of k. Jitter moves each point uniformly within a disc of
    radius ``magnitude``; subsampling keeps a random share; quantization snaps
    to the lattice of step ``step``."""
    k.require_nonempty()
    rng = np.random.default_rng(ps.seed)
    p = k.points
    if ps.mode is PerturbMode.UNIFORM_JITTER:
        r = ps.magnitude * np.sqrt(rng.random(len(p)))
        t = rng.uniform(0, 2 * np.pi, len(p))
        return PointSet2(p + np.column_stack([r * np.cos(t), r * np.sin(t)]))
    if ps.mode is PerturbMode.SUBSAMPLE:
        n = max(1, int(round(ps.fraction * len(p))))
        idx = np.sort(rng.choice(len(p), size=n, replace=False))
        return PointSet2(p[idx])
    return PointSet2(np.round(p / ps.step) * ps.step)


# -- boundary curves --------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Seg:
    a: tuple[float, float]
    b: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])

    def at(self, s: np.ndarray) -> np.ndarray:
        t = s / self.length
        return np.column_stack([self.a[0] + t * (self.b[0] - self.a[0]),
                                self.a[1] + t * (self.b[1] - self.a[1])])

    def dist2_grid(self, X, Y):
        ax, ay = self.a
        dx, dy = self.b[0] - ax, self.b[1] - ay
        L2 = dx * dx + dy * dy
        t = np.clip(((X - ax) * dx + (Y - ay) * dy) / L2, 0, 1)
        return (X - ax - t * dx) ** 2 + (Y - ay - t * dy) ** 2


@dataclass(frozen=True, slots=True)
class Arc:
    """Counter-clockwise arc from angle t0 to t1 (t1 > t0)."""
    center: tuple[float, float]
    radius: float
    t0: float
    t1: float

    @property
    def length(self) -> float:
        return self.radius * (self.t1 - self.t0)

    def at(self, s: np.ndarray) -> np.ndarray:
        t = self.t0 + s / self.radius
        return np.column_stack([self.center[0] + self.radius * np.cos(t),
                                self.center[1] + self.radius * np.sin(t)])

    def dist2_grid(self, X, Y):
        cx, cy = self.center
        ang = np.arctan2(Y - cy, X - cx)
        rel = np.mod(ang - self.t0, 2 * np.pi)
        on = rel <= (self.t1 - self.t0)
        r = np.hypot(X - cx, Y - cy)
        d_on = (r - self.radius) ** 2
        ends = self.at(np.array([0.0, self.length]))
        d_end = np.minimum((X - ends[0, 0]) ** 2 + (Y - ends[0, 1]) ** 2,
                           (X - ends[1, 0]) ** 2 + (Y - ends[1, 1]) ** 2)
        return np.where(on, d_on, d_end)


@dataclass(frozen=True, slots=True)
class Curve:
    """Pieces joined end to end; ``closed`` means the last meets the first."""
    pieces: tuple
    closed: bool = True

    @property
    def length(self) -> float:
        return float(sum(p.length for p in self.pieces))

    def at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty((len(s), 2))
        start = 0.0
        for n, piece in enumerate(self.pieces):
            end = start + piece.length
            last = n == len(self.pieces) - 1
            sel = (s >= start) & ((s <= end) if last else (s < end))
            out[sel] = piece.at(s[sel] - start)
            start = end
        return out

    def dist2_grid(self, X, Y) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.full(X.shape, np.inf)
        for piece in self.pieces:
            np.minimum(out, piece.dist2_grid(X, Y), out=out)
        return out

    def positions(self, spacing: float, phase: float) -> np.ndarray:
        L = self.length
        if self.closed:
            n = max(1, int(math.ceil(L / spacing)))
            return np.mod(phase + spacing * np.arange(n), L)
        s = phase + spacing * np.arange(int(math.floor((L - phase) / spacing)) + 1)
        if s[-1] < L - spacing / 2:
            s = np.append(s, L)
        return s


def polygon_curve(vertices) -> Curve:
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(v) < 2:
        raise ValueError("polygon needs at least two vertices")
    segs = tuple(Seg(tuple(v[i]), tuple(v[(i + 1) % len(v)])) for i in range(len(v)))
    return Curve(segs, closed=True)


def boundary_curve(shape) -> Curve:
    """Boundary parameterization for shapes that have a bounded boundary."""
    if isinstance(shape, Curve):
        return shape
    if isinstance(shape, Oval):
        r, h = shape.r, shape.r / 2
        return Curve((Seg((-h, -r), (h, -r)), Arc((h, 0.0), r, -np.pi / 2, np.pi / 2),
                      Seg((h, r), (-h, r)), Arc((-h, 0.0), r, np.pi / 2, 3 * np.pi / 2)))
    if isinstance(shape, Rectangle):
        a, r = 1.5 * shape.r, shape.r
        return polygon_curve([(-a, -r), (a, -r), (a, r), (-a, r)])
    if isinstance(shape, BallComplement):
        return Curve((Arc((0.0, 0.0), shape.rho, 0.0, 2 * np.pi),))
    if isinstance(shape, OracleShape):
        raise ValueError(f"{shape.tag}: no bounded boundary parameterization")
    return polygon_curve(shape)


def epsilon_sample(shape, eps: float, seed: int = 0) -> PointSet2:
    """Boundary sample within Hausdorff distance eps of the boundary.

    Points are spread at arc-length spacing 0.9*eps from a random phase, and
    the result is checked against a reference sample ten times denser.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    curve = boundary_curve(shape)
    spacing = 0.9 * eps
    L = curve.length
    ref_spacing = spacing / REFERENCE_DENSITY
    if L / ref_spacing > MAX_REFERENCE_POINTS:
        raise ValueError(f"eps={eps} too small for the reference sample")
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0, spacing if curve.closed else spacing / 2)
    sample = PointSet2(curve.at(curve.positions(spacing, phase)))
    ref = curve.at(curve.positions(ref_spacing, 0.0))
    dh = hausdorff_distance(sample, PointSet2(ref))
    if not dh < eps:
        raise RuntimeError(f"sample misses the boundary by {dh:.3g} >= {eps}")
    return sample


# -- stability checks --------------------------------------------------------------

def lower_bound_term(d: np.ndarray, mu: float) -> np.ndarray:
    return mu * ((d + mu) ** 2 + 1 + mu)


def map_bound_term(d: np.ndarray, mu: float, lam: float) -> np.ndarray:
    return mu * (1 + lam) * ((d + mu) ** 2 + 2 * d + 2 * mu + 1)


def stability_bound_check(k: PointSet2, l: PointSet2, lam: float, spec: GridSpec,
                          backend: LowerTransformBackend | None = None,
                          seed: int | None = None) -> CheckReport:
    """Both stability inequalities at every cell trusted in both maps.

    ``measured`` is the worst ratio |difference| / (bound + slack) over the two
    inequalities, so the check passes at <= 1.
    """
    mu = hausdorff_distance(k, l)
    p = MamParams(lam, backend or LowerTransformBackend())
    rk = mam_field(k, spec, p)
    rl = mam_field(l, spec, p)
    cells = rk.trusted & rl.trusted
    h = spec.spacing_h
    d = np.sqrt(rk.dist2.values)
    dc = np.abs(rk.lower.values - rl.lower.values)
    dm = np.abs(rk.m_field.values - rl.m_field.values)
    allow_c = lower_bound_term(d, mu) + 10 * h * (1 + lam)
    allow_m = map_bound_term(d, mu, lam) + 10 * h * (1 + lam) ** 2
    ratio_c = np.where(cells, dc / allow_c, 0.0)
    ratio_m = np.where(cells, dm / allow_m, 0.0)
    worst = np.maximum(ratio_c, ratio_m)
    j, i = np.unravel_index(int(np.argmax(worst)), worst.shape)
    x, y = spec.world(i, j)
    details = {"mu": mu, "lambda": lam, "cells": int(cells.sum()),
               "worst_ratio_lower": float(ratio_c.max()), "worst_ratio_map": float(ratio_m.max()),
               "worst_x": float(x), "worst_y": float(y)}
    if seed is not None:
        details["seed"] = int(seed)
    return CheckReport("stability_bound", float(worst.max()), 1.0, details=details)


@dataclass(frozen=True)
class SampledBoundary:
    """A continuum boundary plus a rule producing its eps-samples.

    ``sampler(eps, seed)`` returns (sample, mu) with mu an upper bound on the
    Hausdorff distance between sample and boundary near the grid.
    """
    curve: Curve
    sampler: object = None

    def sample(self, eps: float, seed: int) -> tuple[PointSet2, float]:
        if self.sampler is not None:
            return self.sampler(eps, seed)
        return epsilon_sample(self.curve, eps, seed), eps


def parallel_lines(b: float, y_extent: float) -> SampledBoundary:
    """Lines x = +-b for |y| <= y_extent, sampled at y = (2k+1) eps b.

    The sample is a stack of copies of the four-point set (+-b, +-eps b) and
    lies within eps*b of the lines.
    """
    curve = Curve((Seg((-b, -y_extent), (-b, y_extent)), Seg((b, -y_extent), (b, y_extent))),
                  closed=False)

    def sampler(eps: float, seed: int) -> tuple[PointSet2, float]:
        c = eps * b
        kmax = int(math.ceil(y_extent / (2 * c)))
        ys = c * (2 * np.arange(-kmax, kmax) + 1)
        pts = np.concatenate([np.column_stack([np.full_like(ys, -b), ys]),
                              np.column_stack([np.full_like(ys, b), ys])])
        return PointSet2(pts), c

    return SampledBoundary(curve, sampler)


@dataclass
class ProbeRecord:
    eps: float
    mu: float
    n_points: int
    sup_map_difference: float
    worst_ratio: float
    mask_difference: int
    m_field: ScalarField2 = field(repr=False, default=None)
    trusted: np.ndarray = field(repr=False, default=None)


@dataclass
class ProbeReport:
    seed: int
    records: list[ProbeRecord]
    checks: list[CheckReport]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _nonincreasing_with_plateau(values: list[float], plateaus: int = 1) -> bool:
    used = 0
    for a, b in zip(values, values[1:]):
        if b > a:
            return False
        if b == a and a != 0:
            used += 1
    return used <= plateaus


def sample_convergence_probe(shape, eps_list: list[float], lam: float, threshold: float,
                             spec: GridSpec, backend: LowerTransformBackend | None = None,
                             seed: int = 0) -> ProbeReport:
    """Maps of eps-samples against the map of the continuum boundary.

    For each eps: the sup over trusted cells of |M(sample) - M(boundary)|
    must sit under the stability bound with mu = Hausdorff distance, and the
    thresholded masks are compared cell by cell with the boundary's mask.
    """
    sb = shape if isinstance(shape, SampledBoundary) else SampledBoundary(boundary_curve(shape))
    p = MamParams(lam, backend or LowerTransformBackend())
    X, Y = spec.coords()
    d2_ref = sb.curve.dist2_grid(X, Y)
    ref = mam_from_dist2(ScalarField2(spec, d2_ref), p)
    ref_mask = suplevel_mask(ref.m_field, threshold).bits
    d = np.sqrt(d2_ref)
    h = spec.spacing_h
    records = []
    for eps in eps_list:
        sample, mu = sb.sample(eps, seed)
        res = mam_field(sample, spec, p)
        cells = ref.trusted & res.trusted
        dm = np.abs(res.m_field.values - ref.m_field.values)
        allow = map_bound_term(d, mu, lam) + 10 * h * (1 + lam) ** 2
        ratio = float(np.where(cells, dm / allow, 0.0).max())
        mask = suplevel_mask(res.m_field, threshold).bits
        diff = int(((mask ^ ref_mask) & cells).sum())
        records.append(ProbeRecord(float(eps), float(mu), len(sample),
                                   float(dm[cells].max()) if cells.any() else 0.0,
                                   ratio, diff, res.m_field, cells))
    checks = [CheckReport(f"sample_bound_eps={r.eps:g}", r.worst_ratio, 1.0,
                          details={"mu": r.mu, "sup_map_difference": r.sup_map_difference})
              for r in records]
    counts = [r.mask_difference for r in records]
    checks.append(CheckReport("mask_difference_nonincreasing", float(counts[-1]), float(counts[0]),
                              passed=_nonincreasing_with_plateau(counts),
                              details={"counts": ",".join(map(str, counts))}))
    return ProbeReport(seed, records, checks)
