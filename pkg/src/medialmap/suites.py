"""Verification suites: every acceptance criterion as a function returning
CheckReports. Shared by the test-suite and the ``verify`` command."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .edt import edt_mask, edt_points
from .fields import BinaryMask2, GridSpec, PointSet2, ScalarField2
from .lowtrans import BackendKind, LowerTransformBackend, lower_transform_iterative, opening_arrays
from .mam import (MamParams, MamResult, landscape_map, mam_field, mam_finite, mam_from_dist2, mam_local,
                  suplevel_mask, support_in_vlk_check)
from .oracles import (BallComplement, CircleSubset, FourPoint, IntervalComplement, OracleShape, Oval,
                      Rectangle, Staircase, Strip, TwoPoint, oracle_grid)
from .report import CheckReport
from .stability import (PerturbationSpec, parallel_lines, perturb, sample_convergence_probe,
                        stability_bound_check)

LAMBDAS = (0.5, 2.0, 8.0)
SUITES = ("oracles", "bounds", "stability", "backends")


def _spec(x0, x1, y0, y1, h) -> GridSpec:
    return GridSpec.from_bounds(x0, x1, y0, y1, h)


def _vec(fn, X, Y) -> np.ndarray:
    return np.vectorize(fn, otypes=[float])(X, Y)


def _shrink(mask: np.ndarray, cells: int) -> np.ndarray:
    """Cells whose whole (2*cells+1)^2 neighbourhood lies in mask."""
    out = mask.copy()
    for _ in range(cells):
        m = out.copy()
        m[1:, :] &= out[:-1, :]
        m[:-1, :] &= out[1:, :]
        m[:, 1:] &= out[:, :-1]
        m[:, :-1] &= out[:, 1:]
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = False
        out = m
    return out


def support_width(values: np.ndarray, h: float, tau: float = 1e-6) -> float:
    """Extent of {v > tau} along a 1-D profile, counting each sample as one cell."""
    idx = np.nonzero(values > tau)[0]
    if idx.size == 0:
        return 0.0
    return float(idx[-1] - idx[0] + 1) * h


# -- corpus --------------------------------------------------------------------

@dataclass
class CorpusCase:
    """One shape on one grid. ``points`` is set for finite K; ``region``
    marks the cells where the shape's oracle formulas apply."""
    name: str
    spec: GridSpec
    dist2: ScalarField2
    region: np.ndarray
    shape: OracleShape | None = None
    points: PointSet2 | None = None

    def result(self, lam: float, backend: LowerTransformBackend | None = None) -> MamResult:
        p = MamParams(lam, backend or LowerTransformBackend())
        if self.points is not None:
            return mam_field(self.points, self.spec, p)
        return mam_from_dist2(self.dist2, p)

    def equidistant(self) -> np.ndarray:
        """Samples with at least two nearest points of K."""
        X, Y = self.spec.coords()
        if self.points is not None:
            p = self.points.points
            d2 = (X[..., None] - p[:, 0]) ** 2 + (Y[..., None] - p[:, 1]) ** 2
            d2.sort(axis=-1)
            if p.shape[0] < 2:
                return np.zeros(X.shape, dtype=bool)
            return d2[..., 1] <= d2[..., 0] * (1 + 1e-9) + 1e-15
        ma = self.shape.medial_axis()
        return (ma.dist_grid(X, Y) <= 1e-9) & self.region

    def minf(self, x: float, y: float) -> float:
        if self.points is not None:
            return landscape_map(self.points, (x, y))
        return self.shape.minf(x, y)


def _shape_case(name, shape, spec, region=None) -> CorpusCase:
    X, Y = spec.coords()
    d2 = ScalarField2(spec, _vec(shape.dist2, X, Y))
    if region is None:
        region = np.ones(spec.shape, dtype=bool)
    return CorpusCase(name, spec, d2, region, shape=shape)


def _points_case(name, shape, pts, spec) -> CorpusCase:
    k = PointSet2(pts)
    return CorpusCase(name, spec, edt_points(k, spec), np.ones(spec.shape, dtype=bool),
                      shape=shape, points=k)


def corpus(h: float = 0.01) -> list[CorpusCase]:
    """Every closed-form shape on a grid of step h."""
    cases = []
    tp = TwoPoint(1.0)
    cases.append(_points_case("two_point", tp, tp.points(), _spec(-2, 2, -2, 2, h)))
    fp = FourPoint(2.0, 0.5)
    cases.append(_points_case("four_point", fp, fp.points(), _spec(-3, 3, -3, 3, h)))
    ang = np.deg2rad([0, 100, 170, 250, 300])
    cs = CircleSubset(1.0, tuple(zip(np.cos(ang), np.sin(ang))))
    cases.append(_points_case("circle_subset", cs, cs.array(), _spec(-2, 2, -2, 2, h)))

    spec = _spec(-1.5, 3, -1.5, 1.5, h)
    X, Y = spec.coords()
    cases.append(_shape_case("strip", Strip(1.0), spec, (X >= -1) & (np.abs(Y) <= 1)))
    spec = _spec(-2, 2, -1.5, 1.5, h)
    X, Y = spec.coords()
    cases.append(_shape_case("rectangle", Rectangle(1.0), spec, (np.abs(X) <= 1.5) & (np.abs(Y) <= 1)))
    ov = Oval(1.0)
    cases.append(_shape_case("oval", ov, spec, _vec(ov.inside, X, Y) > 0))
    cases.append(_shape_case("ball_complement", BallComplement(1.0), _spec(-2, 2, -2, 2, h)))
    cases.append(_shape_case("interval_complement", IntervalComplement(), _spec(-2, 2, -0.5, 0.5, h)))
    spec = _spec(-1.5, 3, -1.5, 3, h)
    cases.append(_shape_case("staircase", Staircase(1.0), spec))
    cases.append(_shape_case("staircase_periodic", Staircase(1.0, True), spec))
    return cases


def random_masks(n: int, seed: int, size: int = 128, h: float = 0.02) -> list[BinaryMask2]:
    """Unions of random discs and boxes, each with a nonempty complement."""
    rng = np.random.default_rng(seed)
    spec = GridSpec(-(size // 2) * h, -(size // 2) * h, h, size, size)
    X, Y = spec.coords()
    lo, hi = spec.origin_x, spec.x_max
    out = []
    while len(out) < n:
        bits = np.zeros(spec.shape, dtype=bool)
        for _ in range(rng.integers(3, 7)):
            cx, cy = rng.uniform(lo, hi, 2)
            r = rng.uniform(0.05, 0.3) * (hi - lo)
            if rng.random() < 0.5:
                bits |= (X - cx) ** 2 + (Y - cy) ** 2 <= r * r
            else:
                bits |= (np.abs(X - cx) <= r) & (np.abs(Y - cy) <= 0.5 * r)
        if bits.any() and not bits.all():
            out.append(BinaryMask2(spec, bits))
    return out


# -- criterion 1: two-point exactness --------------------------------------------

def check_two_point_exactness(h: float = 1e-3, lambdas=(0.5, 1.0, 4.0)) -> list[CheckReport]:
    spec = GridSpec(-3.0, -20 * h, h, 6001, 41)
    shape = TwoPoint(1.0)
    k = PointSet2(shape.points())
    X, Y = spec.coords()
    a = shape.alpha
    out = []
    for lam in lambdas:
        res = mam_field(k, spec, MamParams(lam))
        t = res.trusted
        mo = np.vectorize(lambda x: shape.mam_direct(lam, x, 0.0), otypes=[float])(X[t])
        err = float(np.abs(res.m_field.values[t] - mo).max())
        out.append(CheckReport(f"two_point_sup_error_lambda={lam:g}", err, 5 * h * (1 + lam) ** 2,
                               details={"trusted_cells": int(t.sum())}))
        if lam == 1.0:
            i, j = spec.nearest_index(0.0, 0.0)
            height = float(res.m_field.values[j, i])
            out.append(CheckReport("two_point_height_lambda=1", abs(height - a * a), 5e-3,
                                   passed=bool(abs(height - a * a) <= 5e-3 and t[j, i]),
                                   details={"height": height}))
    return out


# -- criterion 2: interval complement -------------------------------------------

def check_interval_complement(h: float = 1e-3, lam: float = 1.0) -> list[CheckReport]:
    """Value at the centre and the location of the transition.

    The transition is read off the middle row scanning from |x| = 1 inward:
    the first sample where dist^2 - C exceeds 1e-2 (1+lam). On this shape the
    gap equals (1+lam)(|x| - 1/(1+lam))^2 inside |x| <= 1/(1+lam), so the
    threshold is first crossed at 1/(1+lam) - sqrt(1e-2).
    """
    shape = IntervalComplement()
    n = int(round(2.0 / h))
    spec = GridSpec(-n * h, -20 * h, h, 2 * n + 1, 41)
    X, Y = spec.coords()
    d2 = ScalarField2(spec, _vec(shape.dist2, X, Y))
    res = mam_from_dist2(d2, MamParams(lam))
    j = spec.ny // 2
    i0, _ = spec.nearest_index(0.0, 0.0)
    low0 = float(res.lower.values[j, i0])
    expect0 = lam / (1 + lam)
    out = [CheckReport("interval_lower_at_0", abs(low0 - expect0), 2e-3,
                       passed=bool(abs(low0 - expect0) <= 2e-3 and res.trusted[j, i0]),
                       details={"value": low0})]
    xs = spec.xs()
    gap = np.abs(d2.values[j] - res.lower.values[j])
    right = (xs >= 0) & (xs <= 1)
    xr = xs[right][::-1]
    gr = gap[right][::-1]
    tau = 1e-2 * (1 + lam)
    cross = float(xr[np.argmax(gr > tau)]) if (gr > tau).any() else math.nan
    x_edge = 1 / (1 + lam)
    out.append(CheckReport("interval_transition_at_1/(1+lambda)", abs(cross - x_edge), 3 * h,
                           details={"transition": cross, "predicted": x_edge}))
    x_cross = x_edge - math.sqrt(tau / (1 + lam))
    out.append(CheckReport("interval_threshold_crossing", abs(cross - x_cross), 3 * h,
                           details={"transition": cross, "predicted": x_cross}))
    support = float(xr[np.argmax(gr > 1e-9)]) if (gr > 1e-9).any() else math.nan
    out.append(CheckReport("interval_support_edge", abs(support - x_edge), 3 * h,
                           details={"edge": support, "predicted": x_edge}))
    return out


# -- criterion 3: four-point heights ----------------------------------------------

def check_four_point(h: float = 5e-3, lam: float = 4.0) -> list[CheckReport]:
    shape = FourPoint(2.0, 0.5)
    b, c = shape.b, shape.c
    spec = _spec(-3, 3, -3, 3, h)
    res = mam_field(PointSet2(shape.points()), spec, MamParams(lam))
    m = res.m_field.values
    out = []
    for name, (x, y), want in (("main", (0.0, 2.5), b * b), ("minor", (2.5, 0.0), c * c),
                               ("vertex", (0.0, 0.0), b * b + c * c)):
        i, j = spec.nearest_index(x, y)
        v = float(m[j, i])
        out.append(CheckReport(f"four_point_{name}_height", abs(v - want), 2e-2,
                               passed=bool(abs(v - want) <= 2e-2 and res.trusted[j, i]),
                               details={"value": v, "expected": want}))
    i, j = spec.nearest_index(0.0, 2.5)
    w_main = support_width(np.where(res.trusted[j], m[j], 0.0), h)
    i, j = spec.nearest_index(2.5, 0.0)
    w_minor = support_width(np.where(res.trusted[:, i], m[:, i], 0.0), h)
    for name, w, want in (("main", w_main, 2 * b / (1 + lam)), ("minor", w_minor, 2 * c / (1 + lam))):
        out.append(CheckReport(f"four_point_{name}_slab_width", abs(w - want), 5 * h,
                               details={"width": w, "expected": want}))
    return out


# -- criterion 4: staircase ---------------------------------------------------------

def check_staircase(h: float = 5e-3, lam: float = 9.0) -> list[CheckReport]:
    shape = Staircase(1.0)
    spec = _spec(-1.5, 3.5, -1.5, 3.5, h)
    X, Y = spec.coords()
    res = mam_from_dist2(ScalarField2(spec, _vec(shape.dist2, X, Y)), MamParams(lam))
    m = res.m_field.values
    out = []
    i, j = spec.nearest_index(2.0, 2.0)
    v = float(m[j, i])
    out.append(CheckReport("staircase_plateau_(2,2)", abs(v - 0.5), 2e-2,
                           passed=bool(abs(v - 0.5) <= 2e-2 and res.trusted[j, i]), details={"value": v}))
    i, j = spec.nearest_index(0.5, 0.5)
    v = float(m[j, i])
    out.append(CheckReport("staircase_limit_probe_(0.5,0.5)", abs(v - 0.125), 2e-2,
                           passed=bool(abs(v - 0.125) <= 2e-2 and res.trusted[j, i]),
                           details={"value": v, "landscape": shape.minf(0.5, 0.5)}))
    # Diagonal branch: samples on the ray x = y >= c, away from the grid corner.
    diag = res.trusted & (np.abs(X - Y) <= 0.5 * h) & (X >= 1.0)
    hi = suplevel_mask(res.m_field, 0.6).bits & res.trusted
    lo = suplevel_mask(res.m_field, 0.4).bits & diag
    out.append(CheckReport("staircase_threshold_0.6_empty", float(hi.sum()), 0.0))
    out.append(CheckReport("staircase_threshold_0.4_keeps_diagonal", float(diag.sum() - lo.sum()), 0.0,
                           passed=bool(diag.any() and lo.sum() == diag.sum()),
                           details={"diagonal_cells": int(diag.sum())}))
    return out


# -- criterion 5: backend equivalence ------------------------------------------------

def check_backends(seed: int = 0, h: float = 0.01, lambdas=LAMBDAS,
                   iterative: LowerTransformBackend | None = None, n_masks: int = 20) -> list[CheckReport]:
    it = iterative or LowerTransformBackend(BackendKind.ITERATIVE)
    out = []
    fields = [(c.name, c.dist2) for c in corpus(h)]
    fields += [(f"random_mask_{n}", edt_mask(mk)) for n, mk in enumerate(random_masks(n_masks, seed))]
    for lam in lambdas:
        worst, where = 0.0, ""
        for name, d2 in fields:
            op = opening_arrays(d2.values, lam, d2.spec.spacing_h, check_erosion=True)
            iv = lower_transform_iterative(d2, lam, it).values
            diff = float(np.abs(iv - op.lower)[op.trusted].max())
            tol = 5 * d2.spec.spacing_h * (1 + lam)
            if diff / tol > worst:
                worst, where = diff / tol, name
        out.append(CheckReport(f"backend_agreement_lambda={lam:g}", worst, 1.0,
                               details={"worst_field": where, "fields": len(fields), "seed": seed,
                                        "measured_is": "sup|difference| / (5h(1+lambda))"}))
    return out


# -- criterion 6: universal bounds ---------------------------------------------------

def check_universal_bounds(h: float = 0.01, lambdas=LAMBDAS) -> list[CheckReport]:
    out = []
    for case in corpus(h):
        eq = case.equidistant()
        jj, ii = np.nonzero(eq)
        X, Y = case.spec.world(ii, jj)
        minf = np.array([case.minf(x, y) for x, y in zip(X, Y)])
        for lam in lambdas:
            res = case.result(lam)
            t = res.trusted & case.region
            tol = 5 * h * (1 + lam)
            raw = (1 + lam) * (res.dist2.values - res.lower.values)
            low_ex = float(-raw[t].min())
            up_ex = float((res.m_field.values - res.dist2.values)[t].max())
            sel = t[jj, ii]
            lim_ex = float((minf - res.m_field.values[jj, ii])[sel].max()) if sel.any() else -math.inf
            worst = max(low_ex, up_ex, lim_ex)
            out.append(CheckReport(f"universal_bounds_{case.name}_lambda={lam:g}", worst, tol,
                                   details={"negative_part": low_ex, "above_dist2": up_ex,
                                            "landscape_excess": lim_ex, "equidistant_cells": int(sel.sum())}))
    return out


# -- criterion 7: gradient inequality and Lipschitz gradient --------------------------

def _gradient_quotients(c: np.ndarray, h: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Central gradients at step k*h and the quotients |G(x + kh e) - G(x)| / (kh)
    over both axes. Cells without a full stencil get gradient NaN, quotient 0."""
    s = k * h
    gx = np.full_like(c, np.nan)
    gy = np.full_like(c, np.nan)
    gx[:, k:-k] = (c[:, 2 * k:] - c[:, :-2 * k]) / (2 * s)
    gy[k:-k, :] = (c[2 * k:, :] - c[:-2 * k, :]) / (2 * s)
    q = np.zeros_like(c)
    q[:, :-k] = np.nan_to_num(np.hypot(gx[:, k:] - gx[:, :-k], gy[:, k:] - gy[:, :-k]) / s)
    qy = np.nan_to_num(np.hypot(gx[k:, :] - gx[:-k, :], gy[k:, :] - gy[:-k, :]) / s)
    q[:-k, :] = np.maximum(q[:-k, :], qy)
    return np.hypot(gx, gy), q


def check_gradient(h: float = 0.01, lambdas=LAMBDAS, step_cells: int = 1) -> list[CheckReport]:
    """|DC|^2 <= 4C and the Lipschitz bound 2 max(1, lam) on DC, both from
    central differences at step ``step_cells`` * h on trusted cells."""
    out = []
    k = step_cells
    tag = "" if k == 1 else f"_step{k}h"
    for case in corpus(h):
        for lam in lambdas:
            res = case.result(lam)
            c = res.lower.values
            g, q = _gradient_quotients(c, h, k)
            inner = _shrink(res.trusted, 2 * k + 1)
            tol = 20 * h * (1 + lam) ** 2
            ineq = float((g ** 2 - 4 * c)[inner].max()) if inner.any() else -math.inf
            lip = float(q[inner].max()) if inner.any() else -math.inf
            out.append(CheckReport(f"gradient_inequality{tag}_{case.name}_lambda={lam:g}", ineq, tol))
            out.append(CheckReport(f"gradient_lipschitz{tag}_{case.name}_lambda={lam:g}", lip,
                                   2 * max(1.0, lam) + tol))
    return out


# -- criterion 8: support and halving -------------------------------------------------

def check_support(h: float = 0.01, lambdas=(2.0, 8.0)) -> list[CheckReport]:
    out = []
    cases = {c.name: c for c in corpus(h)}
    for name in ("two_point", "four_point", "rectangle", "staircase"):
        case = cases[name]
        for lam in lambdas:
            res = case.result(lam)
            r = support_in_vlk_check(None, case.shape.medial_axis(), lam, case.spec, result=res,
                                     region=case.region)
            r.name = f"support_{name}_lambda={lam:g}"
            out.append(r)
    return out


def check_halving(h: float = 5e-3, lam: float = 8.0) -> list[CheckReport]:
    """Support widths at lam and 2 lam, for the two-point bisector and the
    four-point main branch. Widths scale like 1/(1+lam)."""
    out = []
    spec = _spec(-3, 3, -3, 3, h)
    for name, pts, y in (("two_point", TwoPoint(1.0).points(), 1.0),
                         ("four_point", FourPoint(2.0, 0.5).points(), 2.5)):
        _, j = spec.nearest_index(0.0, y)
        w = []
        for l in (lam, 2 * lam):
            res = mam_field(PointSet2(pts), spec, MamParams(l))
            w.append(support_width(np.where(res.trusted[j], res.m_field.values[j], 0.0), h))
        seen = w[0] > 0 and w[1] > 0
        d = abs(w[1] - w[0] / 2)
        out.append(CheckReport(f"halving_{name}_lambda={lam:g}->{2 * lam:g}", d, 5 * h,
                               passed=bool(seen and d <= 5 * h),
                               details={"width_lambda": w[0], "width_2lambda": w[1]}))
        ratio = (1 + lam) / (1 + 2 * lam)
        d = abs(w[1] - w[0] * ratio)
        out.append(CheckReport(f"width_scaling_{name}_lambda={lam:g}->{2 * lam:g}", d, 5 * h,
                               passed=bool(seen and d <= 5 * h),
                               details={"expected_ratio": ratio, "width_2lambda": w[1]}))
    return out


# -- criterion 9: Hausdorff stability --------------------------------------------------

def check_stability_pairs(seed: int = 0, n_pairs: int = 100, lambdas=LAMBDAS,
                          h: float = 0.02) -> list[CheckReport]:
    spec = _spec(-2.5, 2.5, -2.5, 2.5, h)
    out = []
    for lam in lambdas:
        worst = None
        for s in range(seed, seed + n_pairs):
            rng = np.random.default_rng(s)
            k = PointSet2(rng.uniform(-1, 1, size=(int(rng.integers(2, 9)), 2)))
            l = perturb(k, PerturbationSpec(float(rng.uniform(0.01, 0.1)), seed=s))
            r = stability_bound_check(k, l, lam, spec, seed=s)
            if worst is None or r.measured > worst.measured:
                worst = r
        worst.name = f"stability_pairs_lambda={lam:g}"
        worst.details["pairs"] = n_pairs
        worst.passed = bool(worst.measured <= worst.bound)
        out.append(worst)
    return out


def check_stability_example(seed: int = 0, h: float = 5e-3) -> list[CheckReport]:
    """Two points at distance 2, jittered by 0.05, lambda = 2: the map
    difference at the origin against the pointwise bound there."""
    lam = 2.0
    spec = _spec(-3, 3, -3, 3, h)
    k = PointSet2(TwoPoint(1.0).points())
    l = perturb(k, PerturbationSpec(0.05, seed=seed))
    r = stability_bound_check(k, l, lam, spec, seed=seed)
    r.name = "stability_two_point_jitter"
    return [r]


def check_parallel_lines(eps_list=(0.4, 0.2, 0.1), lam: float = 4.0, threshold: float = 1.0,
                         h: float = 5e-3, b: float = 2.0) -> list[CheckReport]:
    spec = _spec(-3, 3, -2, 2, h)
    rep = sample_convergence_probe(parallel_lines(b, 4.0), list(eps_list), lam, threshold, spec)
    out = list(rep.checks)
    X, _ = spec.coords()
    band = (np.abs(X) >= 0.6 * b) & (np.abs(X) <= 0.95 * b)
    for r in rep.records:
        peak = float(r.m_field.values[r.trusted & band].max())
        ratio = peak / (r.eps * b) ** 2
        # Within a factor 2 either way of the prediction.
        out.append(CheckReport(f"minor_peak_eps={r.eps:g}", abs(math.log2(ratio)), 1.0,
                               details={"peak": peak, "prediction": (r.eps * b) ** 2, "ratio": ratio}))
    last = rep.records[-1]
    mask = (last.m_field.values >= threshold) & last.trusted
    c2 = (last.eps * b) ** 2
    slab = (b - math.sqrt(threshold - c2)) / (1 + lam) + h
    rows = last.trusted.any(axis=1)
    outside = float(np.abs(X[mask]).max()) if mask.any() else math.inf
    out.append(CheckReport("final_mask_is_mid_line_slab", outside, slab,
                           passed=bool(outside <= slab and mask.any(axis=1)[rows].all()),
                           details={"mask_cells": int(mask.sum())}))
    return out


# -- criterion 10: limit probe ------------------------------------------------------------

def _bisector_probes(pts: np.ndarray, n: int, rng: np.random.Generator, box: float = 2.0) -> list:
    probes = []
    while len(probes) < n:
        a, b = rng.choice(len(pts), size=2, replace=False)
        mid = 0.5 * (pts[a] + pts[b])
        d = pts[b] - pts[a]
        x = mid + rng.uniform(-1.5, 1.5) * np.array([-d[1], d[0]]) / np.hypot(*d)
        if np.abs(x).max() > box:
            continue
        d2 = ((pts - x) ** 2).sum(1)
        if np.argsort(d2)[:2].tolist() not in ([a, b], [b, a]):
            continue
        probes.append((float(x[0]), float(x[1])))
    return probes


def _nonincreasing(errs, ties) -> bool:
    """Nonincreasing up to ``ties``, with at most one plateau before the
    errors reach tie level."""
    plateaus = 0
    for e0, e1, tie in zip(errs, errs[1:], ties[1:]):
        if e1 > e0 + tie:
            return False
        if e1 >= e0 - tie and e0 > tie:
            plateaus += 1
    return plateaus <= 1


def check_limit(seed: int = 0, n_sets: int = 10, n_probes: int = 20, lambdas=(4.0, 16.0, 64.0),
                h: float = 5e-3) -> list[CheckReport]:
    """|M_lam - M_inf| at equidistant probes of random five-point sets.

    M_lam is taken from the grid (a window of step h around each probe) and,
    independently, from the exact face enumeration of ``mam_finite``. Grid
    errors count as tied below lam (1+lam) h^2, exact ones below round-off.
    """
    keys = ("grid", "exact")
    bad = dict.fromkeys(keys, 0)
    worst = {k: (-math.inf, None) for k in keys}
    agree, total = 0.0, 0
    for s in range(seed, seed + n_sets):
        rng = np.random.default_rng(s)
        pts = rng.uniform(-1, 1, size=(5, 2))
        k = PointSet2(pts)
        for x in _bisector_probes(pts, n_probes, rng):
            minf = landscape_map(k, x)
            errs = {key: [] for key in keys}
            ties = {key: [] for key in keys}
            for lam in lambdas:
                vals = {"grid": mam_local(k, x, lam, h), "exact": mam_finite(k, x, lam)}
                agree = max(agree, abs(vals["grid"][0] - vals["exact"][0]) / (5 * h * (1 + lam)))
                ties["grid"].append(lam * (1 + lam) * h * h)
                ties["exact"].append(1e-9 * (1 + lam))
                for key, (m, d2) in vals.items():
                    e = abs(m - minf)
                    errs[key].append(e)
                    ex = e - d2 / (1 + lam) - 5 * h * (1 + lam)
                    if ex > worst[key][0]:
                        worst[key] = (ex, {"seed": s, "x": x[0], "y": x[1], "lambda": lam,
                                           "error": float(e), "dist2": float(d2)})
            total += 1
            for key in keys:
                if not _nonincreasing(errs[key], ties[key]):
                    bad[key] += 1
    out = []
    for key in keys:
        out.append(CheckReport(f"limit_nonincreasing_{key}", float(bad[key]), 0.0,
                               details={"probes": total, "measured_is": "probes violating monotonicity"}))
    for key in keys:
        ex, at = worst[key]
        out.append(CheckReport(f"limit_upper_bound_{key}", ex, 0.0,
                               details={"probes": total,
                                        "measured_is": "max(|M_lam-M_inf| - dist2/(1+lam) - 5h(1+lam))",
                                        **(at or {})}))
    out.append(CheckReport("limit_grid_vs_exact", agree, 1.0,
                           details={"measured_is": "max |M_grid - M_exact| / (5h(1+lam))"}))
    return out


# -- criterion 11: performance ---------------------------------------------------------------

def check_performance(n: int = 1024, seed: int = 0, repeats: int = 3) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    h = 1.0 / n
    spec = GridSpec(0.0, 0.0, h, n, n)
    f = edt_points(PointSet2(rng.uniform(0, 1, size=(2000, 2))), spec).values

    def best(threads):
        opening_arrays(f[:64, :64].copy(), 1.0, h, threads)    # warm the compiled kernels
        ts = []
        for _ in range(repeats):
            t = time.perf_counter()
            opening_arrays(f, 1.0, h, threads)
            ts.append(time.perf_counter() - t)
        return min(ts)

    t1 = best(1)
    t4 = best(4)
    cpus = os.cpu_count() or 1
    return [CheckReport("opening_1024_single_thread_seconds", t1, 2.0),
            CheckReport("opening_4_thread_speedup", t1 / t4, 2.5, at_least=True,
                        details={"t1": t1, "t4": t4, "cpus": cpus})]


# -- suites ------------------------------------------------------------------------------------

def run_suite(name: str, seed: int = 0,
              iterative: LowerTransformBackend | None = None) -> list[CheckReport]:
    if name == "oracles":
        return (check_two_point_exactness() + check_interval_complement() + check_four_point()
                + check_staircase())
    if name == "bounds":
        return (check_universal_bounds() + check_gradient() + check_gradient(step_cells=3)
                + check_support() + check_halving() + check_limit(seed))
    if name == "stability":
        return check_stability_pairs(seed) + check_stability_example(seed) + check_parallel_lines()
    if name == "backends":
        return check_backends(seed, iterative=iterative) + check_performance(seed=seed)
    raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
