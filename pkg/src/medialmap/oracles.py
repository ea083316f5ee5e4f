"""Closed-form dist^2, lower transform and medial axis map for analytic shapes.

Each shape evaluates its formulas branch by branch. A query that falls in
no listed branch raises :class:`BranchGapError` instead of extrapolating.

Shapes and the set K they describe:

* TwoPoint(alpha): K = {(-alpha, 0), (alpha, 0)}.
* IntervalComplement: K = (-1, 1)^c along x; y is ignored.
* BallComplement(rho): K = complement of the open disc of radius rho.
* FourPoint(b, eps): K = {(+-b, +-eps*b)}.
* Strip(r): K = boundary of (-r, inf) x (-r, r).
* Rectangle(r): K = boundary of (-1.5r, 1.5r) x (-r, r).
* Oval(r): K = boundary of the r-neighbourhood of the segment from
  (-r/2, 0) to (r/2, 0).
* Staircase(c): K = complement of {x + y > c} U {x > 0, y > 0} (one step);
  with ``periodic`` the step repeats with shift (c, -c).
* CircleSubset(r0, points): a finite K on the circle |p| = r0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mam import convex_hull_2d, dist2_to_hull, landscape_map
from .fields import PointSet2


class BranchGapError(ValueError):
    """The query point is not covered by any closed-form branch."""


class UnsupportedShapeError(ValueError):
    pass


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be > 0, got {lam}")
    return lam


def _positive(**params: float) -> None:
    for name, v in params.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be > 0, got {v}")


# -- medial axis descriptors -------------------------------------------------

@dataclass(frozen=True, slots=True)
class Segment:
    p: tuple[float, float]
    q: tuple[float, float]

    def dist(self, x: float, y: float) -> float:
        px, py = self.p
        dx, dy = self.q[0] - px, self.q[1] - py
        L2 = dx * dx + dy * dy
        t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((x - px) * dx + (y - py) * dy) / L2))
        return math.hypot(x - px - t * dx, y - py - t * dy)


@dataclass(frozen=True, slots=True)
class Ray:
    p: tuple[float, float]
    d: tuple[float, float]

    def dist(self, x: float, y: float) -> float:
        px, py = self.p
        dx, dy = self.d
        t = max(0.0, ((x - px) * dx + (y - py) * dy) / (dx * dx + dy * dy))
        return math.hypot(x - px - t * dx, y - py - t * dy)


@dataclass(frozen=True, slots=True)
class Line:
    p: tuple[float, float]
    d: tuple[float, float]

    def dist(self, x: float, y: float) -> float:
        px, py = self.p
        dx, dy = self.d
        return abs((x - px) * dy - (y - py) * dx) / math.hypot(dx, dy)


@dataclass(frozen=True, slots=True)
class Dot:
    p: tuple[float, float]

    def dist(self, x: float, y: float) -> float:
        return math.hypot(x - self.p[0], y - self.p[1])


@dataclass(frozen=True, slots=True)
class MedialAxis:
    parts: tuple

    def dist(self, x: float, y: float) -> float:
        return min(part.dist(x, y) for part in self.parts)

    def dist_grid(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        f = np.frompyfunc(self.dist, 2, 1)
        return f(X, Y).astype(np.float64)


# -- shapes ------------------------------------------------------------------

class OracleShape:
    """Base class. Subclasses implement ``_eval`` returning (dist2, lower)."""

    tag: str = ""

    def evaluate(self, lam: float, x: float, y: float) -> tuple[float, float, float]:
        lam = _check_lambda(lam)
        d2, low = self._eval(lam, float(x), float(y))
        return d2, low, (1.0 + lam) * (d2 - low)

    def dist2(self, x: float, y: float) -> float:
        raise NotImplementedError

    def _eval(self, lam: float, x: float, y: float) -> tuple[float, float]:
        raise NotImplementedError

    def medial_axis(self) -> MedialAxis:
        raise UnsupportedShapeError(f"{self.tag}: no recorded medial axis")

    def minf(self, x: float, y: float) -> float:
        raise UnsupportedShapeError(f"{self.tag}: no landscape map")


@dataclass(frozen=True, slots=True)
class TwoPoint(OracleShape):
    alpha: float = 1.0
    tag = "two_point"

    def __post_init__(self) -> None:
        _positive(alpha=self.alpha)

    def points(self) -> np.ndarray:
        return np.array([[-self.alpha, 0.0], [self.alpha, 0.0]])

    def dist2(self, x: float, y: float) -> float:
        return (abs(x) - self.alpha) ** 2 + y * y

    def _eval(self, lam, x, y):
        a = self.alpha
        d2 = self.dist2(x, y)
        if abs(x) <= a / (1 + lam):
            return d2, lam / (1 + lam) * a * a - lam * x * x + y * y
        return d2, d2

    def mam_direct(self, lam: float, x: float, y: float) -> float:
        """The map coded straight from its own closed form."""
        a = self.alpha
        if abs(x) <= a / (1 + lam):
            return (1 + lam) ** 2 * (abs(x) - a / (1 + lam)) ** 2
        return 0.0

    def medial_axis(self) -> MedialAxis:
        return MedialAxis((Line((0.0, 0.0), (0.0, 1.0)),))

    def minf(self, x, y):
        return landscape_map(PointSet2(self.points()), (x, y), 1e-9)


@dataclass(frozen=True, slots=True)
class IntervalComplement(OracleShape):
    tag = "interval_complement"

    def dist2(self, x: float, y: float = 0.0) -> float:
        return (1 - abs(x)) ** 2 if abs(x) < 1 else 0.0

    def _eval(self, lam, x, y):
        ax = abs(x)
        if ax <= 1 / (lam + 1):
            return self.dist2(x), lam / (lam + 1) - lam * x * x
        if ax <= 1:
            return self.dist2(x), (1 - ax) ** 2
        return 0.0, 0.0

    def medial_axis(self) -> MedialAxis:
        return MedialAxis((Line((0.0, 0.0), (0.0, 1.0)),))

    def minf(self, x, y):
        return 1.0 if x == 0 else 0.0


@dataclass(frozen=True, slots=True)
class BallComplement(OracleShape):
    rho: float = 1.0
    tag = "ball_complement"

    def __post_init__(self) -> None:
        _positive(rho=self.rho)

    def dist2(self, x, y):
        r = math.hypot(x, y)
        return (self.rho - r) ** 2 if r < self.rho else 0.0

    def _eval(self, lam, x, y):
        r = math.hypot(x, y)
        rho = self.rho
        if r <= rho / (1 + lam):
            return self.dist2(x, y), lam / (1 + lam) * rho * rho - lam * r * r
        if r <= rho:
            return self.dist2(x, y), (rho - r) ** 2
        return 0.0, 0.0

    def medial_axis(self) -> MedialAxis:
        return MedialAxis((Dot((0.0, 0.0)),))

    def minf(self, x, y):
        return self.rho ** 2 if x == 0 and y == 0 else 0.0


@dataclass(frozen=True, slots=True)
class FourPoint(OracleShape):
    b: float = 2.0
    eps: float = 0.5
    tag = "four_point"

    def __post_init__(self) -> None:
        _positive(b=self.b, eps=self.eps)
        if not self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    @property
    def c(self) -> float:
        return self.eps * self.b

    def points(self) -> np.ndarray:
        b, c = self.b, self.c
        return np.array([[b, c], [b, -c], [-b, c], [-b, -c]])

    def dist2(self, x, y):
        return (abs(x) - self.b) ** 2 + (abs(y) - self.c) ** 2

    def _g(self, lam, x, y):
        bl = self.b / (1 + lam)
        cl = self.c / (1 + lam)
        ax, ay = abs(x), abs(y)
        if ax <= bl and ay <= cl:
            return 0.0
        if ax >= bl and ay <= cl:
            return (ax - bl) ** 2
        if ax <= bl and ay >= cl:
            return (ay - cl) ** 2
        return (ax - bl) ** 2 + (ay - cl) ** 2

    def _eval(self, lam, x, y):
        b, c = self.b, self.c
        low = (1 + lam) * self._g(lam, x, y) + lam / (1 + lam) * (b * b + c * c) - lam * (x * x + y * y)
        return self.dist2(x, y), low

    def mam_direct(self, lam, x, y):
        """(1+lam)^2 (dist^2 to K/(1+lam) - dist^2 to co[K]/(1+lam))."""
        bl = self.b / (1 + lam)
        cl = self.c / (1 + lam)
        near = (abs(x) - bl) ** 2 + (abs(y) - cl) ** 2
        hull = max(abs(x) - bl, 0.0) ** 2 + max(abs(y) - cl, 0.0) ** 2
        return (1 + lam) ** 2 * (near - hull)

    def medial_axis(self) -> MedialAxis:
        return MedialAxis((Line((0.0, 0.0), (0.0, 1.0)), Line((0.0, 0.0), (1.0, 0.0))))

    def minf(self, x, y):
        return landscape_map(PointSet2(self.points()), (x, y), 1e-9)


def _wedge_g(lam: float, u: float, v: float) -> float:
    """Corner function of the strip, in coordinates u, v measured from two
    perpendicular walls meeting at the origin."""
    if u >= 0 and v >= 0:
        if u <= v * lam / (1 + lam):
            return u * u
        if v <= u * lam / (1 + lam):
            return v * v
        m = (u + v) * (1 + lam) / (2 * lam + 1)
        return lam / (1 + lam) * m * m - lam * ((u - m) ** 2 + (v - m) ** 2)
    if u <= 0 and v >= 0:
        return u * u
    if u >= 0 and v <= 0:
        return v * v
    return u * u + v * v


@dataclass(frozen=True, slots=True)
class Strip(OracleShape):
    r: float = 1.0
    tag = "strip"

    def __post_init__(self) -> None:
        _positive(r=self.r)

    def dist2(self, x, y):
        r = self.r
        ay = abs(y)
        if x >= 0:
            return (ay - r) ** 2
        if -r <= x <= 0:
            return (ay - r) ** 2 if ay >= abs(x) else (abs(x) - r) ** 2
        if ay <= r:
            return (abs(x) - r) ** 2
        return (abs(x) - r) ** 2 + (ay - r) ** 2

    def _eval(self, lam, x, y):
        r = self.r
        rl = r / (1 + lam)
        d2 = self.dist2(x, y)
        if -r <= x <= 0 and -r <= y and x + y <= -rl:
            return d2, _wedge_g(lam, x + r, y + r)
        if -r <= x <= 0 and -r <= -y and x - y <= -rl:
            return d2, _wedge_g(lam, x + r, r - y)
        if x <= 0 and -rl <= x + y and -rl <= x - y:
            return d2, r * r * lam / (1 + lam) - lam * (x * x + y * y)
        if x >= 0 and abs(y) <= rl:
            return d2, r * r * lam / (1 + lam) - lam * y * y
        if x >= 0 and rl <= abs(y):
            return d2, (abs(y) - r) ** 2
        if x >= -r and abs(y) >= r:
            return d2, (abs(y) - r) ** 2
        if x <= -r and abs(y) <= r:
            return d2, (abs(x) - r) ** 2
        if x <= -r and abs(y) >= r:
            return d2, (abs(x) - r) ** 2 + (abs(y) - r) ** 2
        raise BranchGapError(f"strip: ({x}, {y}) not covered")

    def minf(self, x, y):
        r = self.r
        tol = 1e-9 * max(1.0, r)
        if x < -r or abs(y) > r or self.medial_axis().dist(x, y) > tol:
            return 0.0
        if x >= -tol:
            # Opposite edges, plus the far edge at the junction: x lies in the hull.
            return r * r
        # Two perpendicular edges: the hull chord passes at d/sqrt(2).
        return 0.5 * (x + r) ** 2

    def medial_axis(self) -> MedialAxis:
        r = self.r
        return MedialAxis((Ray((0.0, 0.0), (1.0, 0.0)),
                           Segment((-r, -r), (0.0, 0.0)),
                           Segment((-r, r), (0.0, 0.0))))


@dataclass(frozen=True, slots=True)
class Rectangle(OracleShape):
    """Rectangle (-1.5r, 1.5r) x (-r, r), built from two mirrored strips."""
    r: float = 1.0
    tag = "rectangle"

    def __post_init__(self) -> None:
        _positive(r=self.r)

    def _strip_coords(self, x, y):
        return (x + self.r / 2, y) if x <= 0 else (-x + self.r / 2, y)

    def dist2(self, x, y):
        return Strip(self.r).dist2(*self._strip_coords(x, y))

    def _eval(self, lam, x, y):
        return Strip(self.r)._eval(lam, *self._strip_coords(x, y))

    def minf(self, x, y):
        return Strip(self.r).minf(*self._strip_coords(x, y))

    def medial_axis(self) -> MedialAxis:
        r = self.r
        h = r / 2
        a = 1.5 * r
        return MedialAxis((Segment((-h, 0.0), (h, 0.0)),
                           Segment((-a, -r), (-h, 0.0)), Segment((-a, r), (-h, 0.0)),
                           Segment((a, -r), (h, 0.0)), Segment((a, r), (h, 0.0))))


@dataclass(frozen=True, slots=True)
class Oval(OracleShape):
    """Two caps of radius r centred at (+-r/2, 0) joined by (-r/2, r/2) x (-r, r)."""
    r: float = 1.0
    tag = "oval"

    def __post_init__(self) -> None:
        _positive(r=self.r)

    def inside(self, x, y) -> bool:
        h = self.r / 2
        px = min(max(x, -h), h)
        return math.hypot(x - px, y) < self.r

    def dist2(self, x, y):
        r = self.r
        if abs(x) <= r / 2:
            return (abs(y) - r) ** 2
        if x + r / 2 <= 0:
            return (math.hypot(x + r / 2, y) - r) ** 2
        return (math.hypot(x - r / 2, y) - r) ** 2

    def _eval(self, lam, x, y):
        r = self.r
        d2 = self.dist2(x, y)
        if not self.inside(x, y):
            raise BranchGapError(f"oval: lower transform given only inside the domain, got ({x}, {y})")
        rl = r / (1 + lam)
        if x + r / 2 <= 0:
            s = math.hypot(x + r / 2, y)
            if s <= rl:
                return d2, lam * r * r / (1 + lam) - lam * s * s
            return d2, (s - r) ** 2
        if x - r / 2 >= 0:
            s = math.hypot(x - r / 2, y)
            if s <= rl:
                return d2, lam * r * r / (1 + lam) - lam * s * s
            return d2, (s - r) ** 2
        if abs(y) <= rl:
            return d2, lam * r * r / (1 + lam) - lam * y * y
        return d2, (abs(y) - r) ** 2

    def medial_axis(self) -> MedialAxis:
        h = self.r / 2
        return MedialAxis((Segment((-h, 0.0), (h, 0.0)),))

    def minf(self, x, y):
        # The centre segment sees two opposite boundary points; elsewhere K(x)
        # is a single point.
        if self.medial_axis().dist(x, y) <= 1e-9 * max(1.0, self.r):
            return self.r * self.r
        return 0.0


@dataclass(frozen=True, slots=True)
class Staircase(OracleShape):
    """One stair step of size c (or a periodic staircase of them).

    K is the closed region {x + y <= c} minus the open quadrant {x > 0, y > 0};
    the maps below are those of K, nonzero on the region outside it.
    """
    c: float = 1.0
    periodic: bool = False
    tag = "staircase"

    def __post_init__(self) -> None:
        _positive(c=self.c)

    def _shift(self, x, y):
        if not self.periodic:
            return x, y
        i = round((x - y) / (2 * self.c))
        return x - i * self.c, y + i * self.c

    def in_k(self, x, y) -> bool:
        x, y = self._shift(x, y)
        return x + y <= self.c and (x <= 0 or y <= 0)

    def dist2(self, x, y):
        x, y = self._shift(x, y)
        return self._dist2_single(x, y)

    def _dist2_single(self, x, y):
        c = self.c
        if x + y <= c and (x <= 0 or y <= 0):
            return 0.0
        if x <= y and 0 <= x <= c and 0 <= y <= c:
            return x * x
        if x >= y and 0 <= x <= c and 0 <= y <= c:
            return y * y
        if y >= c and 0 <= y - x <= c:
            return x * x + (y - c) ** 2
        if x >= c and 0 <= x - y <= c:
            return (x - c) ** 2 + y * y
        if x + y >= c and (y - x >= c or x - y >= c):
            return 0.5 * (x + y - c) ** 2
        raise BranchGapError(f"staircase: ({x}, {y}) not covered")

    def _eval(self, lam, x, y):
        x, y = self._shift(x, y)
        c = self.c
        d2 = self._dist2_single(x, y)
        if d2 == 0.0 and x + y <= c and (x <= 0 or y <= 0):
            # Points of K: dist^2 vanishes and so does the lower transform.
            return 0.0, 0.0
        sq = 0 <= x <= c and 0 <= y <= c
        cl = c / (1 + lam)
        if sq and x <= y * lam / (1 + lam):
            return d2, x * x
        if sq and y <= x * lam / (1 + lam):
            return d2, y * y
        if sq and lam * x / (1 + lam) <= y <= (1 + lam) * x / lam and x + y <= (1 + 2 * lam) * c / (1 + lam):
            m = (1 + lam) * (x + y) / (1 + 2 * lam)
            return d2, (lam * (1 + lam) * ((x + y) / (1 + 2 * lam)) ** 2
                        - lam * (x - m) ** 2 - lam * (y - m) ** 2)
        if x + y >= c and (y - x >= c or x - y >= c):
            return d2, 0.5 * (x + y - c) ** 2
        if y >= c and cl <= y - x <= c:
            return d2, x * x + (y - c) ** 2
        if x >= c and cl <= x - y <= c:
            return d2, (x - c) ** 2 + y * y
        if x + y >= (1 + 2 * lam) * cl and -cl <= y - x <= cl:
            return d2, 0.5 * (lam * c * c / (1 + lam) - lam * (y - x) ** 2 + (x + y - c) ** 2)
        raise BranchGapError(f"staircase: ({x}, {y}) not covered")

    def medial_axis(self, extent: int = 64) -> MedialAxis:
        if not self.periodic:
            return MedialAxis((Ray((0.0, 0.0), (1.0, 1.0)),))
        c = self.c
        return MedialAxis(tuple(Ray((i * c, -i * c), (1.0, 1.0)) for i in range(-extent, extent + 1)))

    def minf(self, x, y):
        x, y = self._shift(x, y)
        if x != y or x < 0:
            return 0.0
        return 0.5 * min(x, self.c) ** 2


@dataclass(frozen=True)
class CircleSubset(OracleShape):
    r0: float = 1.0
    points: tuple = field(default=((1.0, 0.0), (-1.0, 0.0)))
    tag = "circle_subset"

    def __post_init__(self) -> None:
        _positive(r0=self.r0)
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("circle subset needs at least one point")
        radii = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(np.abs(radii - self.r0) > 1e-12 * max(1.0, self.r0)):
            raise ValueError("circle subset points must lie on |p| = r0")
        object.__setattr__(self, "points", tuple(map(tuple, pts)))

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def dist2(self, x, y):
        p = self.array()
        return float(np.min((p[:, 0] - x) ** 2 + (p[:, 1] - y) ** 2))

    def _eval(self, lam, x, y):
        hull = convex_hull_2d(PointSet2(self.array() / (1 + lam)))
        low = (lam * self.r0 ** 2 / (1 + lam) + (1 + lam) * dist2_to_hull((x, y), hull)
               - lam * (x * x + y * y))
        return self.dist2(x, y), low

    def minf(self, x, y):
        return landscape_map(PointSet2(self.array()), (x, y), 1e-9)


def oracle_eval(shape: OracleShape, lam: float, x: tuple[float, float]) -> tuple[float, float, float]:
    """(dist^2, lower transform, medial axis map) at x."""
    return shape.evaluate(lam, x[0], x[1])


def oracle_mk(shape: OracleShape) -> MedialAxis:
    return shape.medial_axis()


def oracle_minf(shape: OracleShape, x: tuple[float, float]) -> float:
    return shape.minf(x[0], x[1])


def oracle_grid(shape: OracleShape, lam: float, X: np.ndarray, Y: np.ndarray,
                covered: bool = False):
    """Evaluate the oracle over coordinate arrays.

    Returns (dist2, lower, mam) arrays; with ``covered`` a fourth boolean
    array marks the points where a branch applied (others hold NaN).
    """
    lam = _check_lambda(lam)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d2 = np.full(X.shape, np.nan)
    low = np.full(X.shape, np.nan)
    ok = np.zeros(X.shape, dtype=bool)
    for idx in np.ndindex(X.shape):
        try:
            a, b = shape._eval(lam, float(X[idx]), float(Y[idx]))
        except BranchGapError:
            if not covered:
                raise
            continue
        d2[idx], low[idx] = a, b
        ok[idx] = True
    m = (1 + lam) * (d2 - low)
    if covered:
        return d2, low, m, ok
    return d2, low, m
