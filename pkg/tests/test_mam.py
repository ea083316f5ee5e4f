import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from medialmap.fields import BinaryMask2, EmptySetError, GridSpec, PointSet2, ScalarField2
from medialmap.lowtrans import BackendKind, LowerTransformBackend
from medialmap.mam import (MamParams, angle_bound_check, asymptotic_hull_distance,
                           convex_hull_2d, dist2_to_hull, landscape_map,
                           limit_convergence_probe, linear_mam, mam_at, mam_field, mam_finite,
                           mam_from_mask_boundary_equivalence, mam_local, nearest_set,
                           separation_angle, support_in_vlk_check, suplevel_mask)
from medialmap.oracles import FourPoint, TwoPoint

TWO = PointSet2([[-1, 0], [1, 0]])
FOUR = PointSet2(FourPoint(2.0, 0.5).points())


@pytest.fixture(scope="module")
def two_point_fine():
    h = 1e-3
    spec = GridSpec(-3, -0.5, h, 6001, 2501)
    return mam_field(TWO, spec, MamParams(1.0))


@pytest.fixture(scope="module")
def four_point_map():
    spec = GridSpec.from_bounds(-3, 3, -3, 3, 5e-3)
    return mam_field(FOUR, spec, MamParams(4.0))


def test_two_point_branch_value(two_point_fine):
    for x in ((0, 0.7), (0.6, 0.3)):
        i, j = two_point_fine.spec.nearest_index(*x)
        assert two_point_fine.trusted[j, i]
    assert abs(two_point_fine.m_field.at(0, 0.7) - 1.0) <= 5e-3
    assert abs(two_point_fine.m_field.at(0.6, 0.3)) <= 5e-3


def test_four_point_main_branch(four_point_map):
    assert abs(four_point_map.m_field.at(0, 1) - 4.0) <= 2e-2


def test_result_invariants(four_point_map):
    r = four_point_map
    t = r.trusted
    m, d2, low = r.m_field.values, r.dist2.values, r.lower.values
    assert np.all(m >= 0)
    assert np.all(m[t] <= 5 * d2[t])
    assert np.array_equal(m[t], np.maximum(5 * (d2[t] - low[t]), 0))


def test_singleton_is_zero():
    spec = GridSpec.from_bounds(-2, 2, -2, 2, 0.02)
    res = mam_field(PointSet2([[0.3, -0.2]]), spec, MamParams(2.0))
    assert np.max(np.abs(res.m_field.values[res.trusted])) <= 1e-9


def test_params_validation():
    for lam in (0.0, -1.0, float("inf")):
        with pytest.raises(ValueError):
            MamParams(lam)
    with pytest.raises(ValueError):
        MamParams(1.0, nearest_tol=0.01)
    with pytest.raises(EmptySetError):
        mam_field(PointSet2(np.zeros((0, 2))), GridSpec(0, 0, 1, 3, 3), MamParams(1.0))


def test_iterative_backend_values_close():
    spec = GridSpec.from_bounds(-2, 2, -2, 2, 0.02)
    a = mam_field(TWO, spec, MamParams(2.0))
    b = mam_field(TWO, spec, MamParams(2.0, LowerTransformBackend(BackendKind.ITERATIVE)))
    t = a.trusted
    assert np.max(np.abs(a.lower.values - b.lower.values)[t]) <= 5 * 0.02 * 3


# -- boundary vs complement ---------------------------------------------------

def test_boundary_equivalence_disc():
    h = 0.05
    spec = GridSpec(-1, -1, h, 41, 41)
    X, Y = spec.coords()
    rep = mam_from_mask_boundary_equivalence(BinaryMask2(spec, X ** 2 + Y ** 2 <= 0.8 ** 2),
                                             MamParams(5.0))
    assert rep.passed and rep.details["cells"] > 100


def test_boundary_equivalence_rectangle():
    h = 0.05
    spec = GridSpec(-1, -1, h, 41, 41)
    X, Y = spec.coords()
    mask = (np.abs(X) <= 0.7) & (np.abs(Y) <= 0.4)
    rep = mam_from_mask_boundary_equivalence(BinaryMask2(spec, mask), MamParams(5.0))
    assert rep.passed and rep.details["cells"] > 50


def test_boundary_equivalence_needs_interior():
    spec = GridSpec(0, 0, 1, 5, 5)
    bits = np.zeros((5, 5), bool)
    bits[2, 2] = True
    with pytest.raises(ValueError):
        mam_from_mask_boundary_equivalence(BinaryMask2(spec, bits), MamParams(1.0))


# -- linear map, suplevel sets, asymptotics --------------------------------------

def test_linear_mam():
    spec = GridSpec(0, 0, 1, 2, 1)
    assert linear_mam(ScalarField2(spec, [[4.0, 0.0]])).values.tolist() == [[2.0, 0.0]]
    with pytest.raises(ValueError):
        linear_mam(ScalarField2(spec, [[-1e-6, 0.0]]))


def test_linear_mam_two_point_bounds(two_point_fine):
    m1 = linear_mam(two_point_fine.m_field).at(0, 0.0)
    d = math.sqrt(two_point_fine.dist2.at(0, 0.0))
    # theta = pi at the midpoint, so both bounds equal dist.
    assert abs(m1 - 1.0) <= 5e-3
    assert abs(m1 - d) <= 5e-3


def test_suplevel_examples(four_point_map):
    m = four_point_map.m_field
    assert suplevel_mask(m, 0.0).bits.all()
    assert not suplevel_mask(m, float(m.values.max()) + 1).bits.any()
    spec = m.spec
    X, Y = spec.coords()
    mask = suplevel_mask(m, 2.0).bits & four_point_map.trusted
    # Only the y-axis branch survives; it lies in the slab |x| <= b/(1+lam) + 5h.
    assert mask.any()
    assert np.all(np.abs(X[mask]) <= 2.0 / 5 + 5 * spec.spacing_h)
    assert mask[np.abs(Y) > 0.5].any()
    assert not mask[(np.abs(X) > 0.5)].any()


@given(st.floats(-1, 5), st.floats(0, 3))
def test_suplevel_antitone(t, dt):
    rng = np.random.default_rng(0)
    m = ScalarField2(GridSpec(0, 0, 1, 8, 8), rng.uniform(0, 4, (8, 8)))
    lo, hi = suplevel_mask(m, t).bits, suplevel_mask(m, t + dt).bits
    assert not (hi & ~lo).any()


def test_asymptotic_hull_distance_two_point(two_point_fine):
    r = two_point_fine
    a = asymptotic_hull_distance(r.dist2, r.lower, 1.0)
    tol = 5 * 1e-3 * 2
    assert abs(a.at(0, 0)) <= tol
    for y in (0.1, 0.25):
        assert abs(a.at(0, y) - y * y) <= tol
    # Far from the axis K(x) is a singleton: the field is close to dist^2.
    assert abs(a.at(1.8, 0.2) - r.dist2.at(1.8, 0.2)) <= tol
    with pytest.raises(ValueError):
        asymptotic_hull_distance(r.dist2, ScalarField2(GridSpec(0, 0, 1, 1, 1), [[0.0]]), 1.0)


# -- pointwise geometry ---------------------------------------------------------

def test_nearest_set_examples():
    assert len(nearest_set(TWO, (0, 0), 0.0)) == 2
    assert nearest_set(TWO, (0.5, 0), 0.0).points.tolist() == [[1.0, 0.0]]
    assert len(nearest_set(FOUR, (0, 0), 0.0)) == 4


def test_convex_hull_examples():
    assert convex_hull_2d(PointSet2([[1, 2]])).tolist() == [[1, 2]]
    sq = convex_hull_2d(PointSet2([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]))
    assert sorted(map(tuple, sq)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    seg = convex_hull_2d(PointSet2([[0, 0], [1, 1], [2, 2]]))
    assert sorted(map(tuple, seg)) == [(0, 0), (2, 2)]


def _brute_hull(p):
    """Vertices v such that some supporting half-plane touches only v."""
    idx = set()
    for i in range(len(p)):
        for j in range(len(p)):
            if i == j:
                continue
            e = p[j] - p[i]
            cr = e[0] * (p[:, 1] - p[i, 1]) - e[1] * (p[:, 0] - p[i, 0])
            if np.all(cr >= -1e-12):
                # Keep only the extreme ends of the supporting edge.
                on = np.nonzero(np.abs(cr) <= 1e-12)[0]
                t = (p[on] - p[i]) @ e
                idx.add(int(on[np.argmin(t)]))
                idx.add(int(on[np.argmax(t)]))
    return idx


def test_convex_hull_random_vs_brute_force():
    rng = np.random.default_rng(7)
    p = rng.normal(size=(50, 2))
    hull = convex_hull_2d(PointSet2(p))
    assert set(map(tuple, hull)) == {tuple(p[i]) for i in _brute_hull(p)}
    # Counter-clockwise: positive signed area.
    x, y = hull[:, 0], hull[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=30))
def test_convex_hull_matches_qhull(pts):
    p = np.array(pts)
    try:
        ref = ConvexHull(p)
    except Exception:
        assume(False)
    assume(ref.volume > 1e-6)
    ours = convex_hull_2d(PointSet2(p))
    x, y = ours[:, 0], ours[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area == pytest.approx(ref.volume, rel=1e-9, abs=1e-9)


def test_dist2_to_hull_examples():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert dist2_to_hull((0.5, 0.5), sq) == 0.0
    assert dist2_to_hull((0, 2), np.array([[-1, 0], [1, 0]], float)) == 4.0


def test_dist2_to_hull_random_vs_dense_sampling():
    rng = np.random.default_rng(11)
    for _ in range(20):
        hull = convex_hull_2d(PointSet2(rng.normal(size=(8, 2))))
        x = rng.normal(scale=2, size=2)
        ring = np.vstack([hull, hull[:1]])
        t = np.linspace(0, 1, 20001)[:, None]
        dense = np.vstack([a + t * (b - a) for a, b in zip(ring[:-1], ring[1:])])
        ref = float(((dense - x) ** 2).sum(1).min())
        # Inside test via the brute-force half-planes.
        e = np.roll(hull, -1, axis=0) - hull
        inside = np.all(e[:, 0] * (x[1] - hull[:, 1]) - e[:, 1] * (x[0] - hull[:, 0]) >= 0)
        assert dist2_to_hull(tuple(x), hull) == pytest.approx(0.0 if inside else ref, abs=1e-6)


def test_landscape_examples():
    assert landscape_map(TWO, (0, 0)) == pytest.approx(1.0)
    assert landscape_map(FOUR, (0, 0)) == pytest.approx(5.0)
    assert landscape_map(TWO, (0.3, 0.2)) == 0.0


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=8),
       st.floats(-3, 3), st.floats(-3, 3))
def test_landscape_between_zero_and_dist2(pts, x, y):
    k = PointSet2(pts)
    d2 = float(((k.points - [x, y]) ** 2).sum(1).min())
    v = landscape_map(k, (x, y))
    assert 0.0 <= v <= d2 + 1e-12


def test_separation_angle_examples():
    assert separation_angle(TWO, (0, 0)) == pytest.approx(math.pi)
    assert separation_angle(TWO, (0.5, 0.1)) == 0.0
    # The maximum over all six pairs is attained by the antipodal pair
    # (2, 1), (-2, -1); the pair (2, 1), (-2, 1) subtends acos(-0.6).
    assert separation_angle(FOUR, (0, 0)) == pytest.approx(math.pi)
    assert separation_angle(PointSet2([[2, 1], [-2, 1]]), (0, 0)) == pytest.approx(math.acos(-0.6))
    with pytest.raises(ValueError):
        separation_angle(TWO, (1, 0))


# -- exact finite evaluator and grid routes ------------------------------------------

def test_mam_finite_matches_closed_forms():
    fp = FourPoint(2.0, 0.5)
    rng = np.random.default_rng(0)
    for lam in (0.5, 4.0):
        for x, y in rng.uniform(-3, 3, (100, 2)):
            assert mam_finite(FOUR, (x, y), lam)[0] == pytest.approx(fp.mam_direct(lam, x, y), abs=1e-10)
            assert mam_finite(TWO, (x, y), lam)[0] == pytest.approx(
                TwoPoint(1.0).mam_direct(lam, x, y), abs=1e-10)


def test_mam_finite_singleton_zero():
    assert mam_finite(PointSet2([[1, 2]]), (0.3, -4), 3.0)[0] == 0.0
    with pytest.raises(ValueError):
        mam_finite(TWO, (0, 0), 0.0)


def test_mam_finite_vs_grid():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (5, 2))
    h = 0.01
    spec = GridSpec.from_bounds(-2.5, 2.5, -2.5, 2.5, h)
    lam = 2.0
    res = mam_field(PointSet2(pts), spec, MamParams(lam))
    for x, y in rng.uniform(-1, 1, (40, 2)):
        i, j = spec.nearest_index(x, y)
        if not res.trusted[j, i]:
            continue
        xs, ys = spec.world(i, j)
        exact, _ = mam_finite(pts, (float(xs), float(ys)), lam)
        assert abs(res.m_field.values[j, i] - exact) <= 5 * h * (1 + lam) ** 2


def test_mam_local_matches_full_grid():
    h = 0.01
    pts = np.array([[-1, 0.1], [0.9, -0.2], [0.1, 1.0]])
    lam = 2.0
    for x in [(0.0, 0.0), (0.3, 0.4), (-0.5, -0.5)]:
        local, d2 = mam_local(PointSet2(pts), x, lam, h)
        full, d2f, trusted = mam_at(PointSet2(pts), x, lam, GridSpec.from_bounds(-4, 4, -4, 4, h))
        assert trusted
        assert d2 == pytest.approx(d2f, abs=1e-12)
        assert abs(local - full) <= 5 * h * (1 + lam) ** 2


# -- checks -----------------------------------------------------------------------

def test_limit_probe_two_point_branch():
    spec = GridSpec.from_bounds(-3, 3, -3, 3, 0.01)
    for lam, err in limit_convergence_probe(TWO, (0.0, 0.5), [1.0, 4.0, 16.0], spec):
        assert err <= 5 * 0.01 * (1 + lam)


def test_limit_probe_four_point_vertex():
    spec = GridSpec.from_bounds(-3, 3, -3, 3, 0.01)
    for lam, err in limit_convergence_probe(FOUR, (0.0, 0.0), [1.0, 4.0, 16.0], spec):
        assert err <= 5 * 0.01 * (1 + lam)


def test_angle_bound_examples():
    spec = GridSpec.from_bounds(-3, 3, -3, 3, 0.01)
    r = angle_bound_check(TWO, (0.0, 0.0), 1.0, spec)
    assert r.passed and r.details["lower_bound"] == pytest.approx(r.details["dist2"])
    r = angle_bound_check(FOUR, (0.0, 0.0), 4.0, spec)
    assert r.passed
    # Equidistant from three points of an equilateral triangle's vertices.
    tri = PointSet2([[math.cos(t), math.sin(t)] for t in (0.2, 0.2 + 2.1, 0.2 + 4.2)])
    assert angle_bound_check(tri, (0.0, 0.0), 2.0, spec).passed


def test_support_in_neighbourhood_two_point():
    spec = GridSpec.from_bounds(-2, 2, -2, 2, 0.01)
    for lam in (1.0, 2.0):
        r = support_in_vlk_check(TWO, TwoPoint(1.0).medial_axis(), lam, spec)
        assert r.passed and r.details["support_cells"] > 0


def test_support_in_neighbourhood_four_point():
    spec = GridSpec.from_bounds(-3, 3, -3, 3, 0.01)
    r = support_in_vlk_check(FOUR, FourPoint(2.0, 0.5).medial_axis(), 4.0, spec)
    assert r.passed and r.details["support_cells"] > 0


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=6),
       st.floats(0.5, 8))
def test_bounds_hold_exactly_for_finite_sets(pts, lam):
    k = PointSet2(pts)
    rng = np.random.default_rng(len(k))
    for x in rng.uniform(-1.5, 1.5, (5, 2)):
        m, d2 = mam_finite(k, tuple(x), lam)
        assert -1e-9 <= m <= (1 + 1e-9) * d2 + 1e-9
