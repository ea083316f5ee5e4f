"""Quadratic lower transform C(f) = co[f + lam|.|^2] - lam|.|^2 on grids.

Two independent routes:

* opening: grayscale opening by the structuring function -lam|x|^2, computed
  with the separable erosion/dilation of :mod:`medialmap.edt`;
* iterative: Jacobi sweeps towards the grid convex envelope of f + lam|x|^2
  along a fixed set of lattice directions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .edt import _run_blocks, quad_dilate_arrays, quad_erode_arrays
from .fields import GridSpec, ScalarField2

# Lattice directions used by the iterative envelope. The four axis and
# diagonal directions are the minimal stencil; the wider ones shrink the
# gap to the true convex envelope for directions between them.
STENCIL_4 = ((1, 0), (0, 1), (1, 1), (1, -1))
STENCIL_8 = STENCIL_4 + ((2, 1), (1, 2), (2, -1), (1, -2))
STENCIL_16 = STENCIL_8 + ((3, 1), (1, 3), (3, -1), (1, -3), (3, 2), (2, 3), (3, -2), (2, -3))


class BackendKind(enum.Enum):
    OPENING = "opening"
    ITERATIVE = "iterative"


class EnvelopeNotConverged(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"convex envelope did not converge: residual {residual:.3e} after {iterations} sweeps")
        self.residual = residual
        self.iterations = iterations


class BorderInvalidError(ValueError):
    """The evaluation window does not fit inside the grid."""


@dataclass(frozen=True, slots=True)
class LowerTransformBackend:
    kind: BackendKind = BackendKind.OPENING
    tol: float | None = None          # None: 1e-10 * (max g - min g)
    max_iters: int | None = None      # None: 10 * (nx + ny)
    stencil: tuple[tuple[int, int], ...] = STENCIL_4
    threads: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if len(self.stencil) == 0:
            raise ValueError("stencil must be nonempty")


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lambda must be > 0, got {lam}")
    return lam


# -- opening route ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class OpeningResult:
    lower: np.ndarray
    trusted: np.ndarray     # bool, see opening_arrays
    border_margin: int


def _border_distance(shape: tuple[int, int]) -> np.ndarray:
    ny, nx = shape
    di = np.minimum(np.arange(nx), nx - 1 - np.arange(nx))
    dj = np.minimum(np.arange(ny), ny - 1 - np.arange(ny))
    return np.minimum(dj[:, None], di[None, :])


def _near_border(ai: np.ndarray, aj: np.ndarray, shape: tuple[int, int], margin: int) -> np.ndarray:
    ny, nx = shape
    bad = np.zeros(ai.shape, dtype=bool)
    # A degenerate axis (fewer than 2*margin+1 samples) cannot be tested.
    if nx > 2 * margin:
        bad |= (ai < margin) | (ai > nx - 1 - margin)
    if ny > 2 * margin:
        bad |= (aj < margin) | (aj > ny - 1 - margin)
    return bad


def opening_arrays(f: np.ndarray, lam: float, h: float, threads: int = 1,
                   margin: int = 2, check_erosion: bool = False) -> OpeningResult:
    """Opening of f by -lam|x|^2 plus a per-cell trust mask.

    A cell is trusted when the maximising sample of the dilation lies at least
    ``margin`` cells inside the grid. For f = dist^2 the dilation objective is
    strictly concave, so an interior grid maximiser means the unrestricted
    maximiser is nearby and the clipped grid did not cut it off. With
    ``check_erosion`` the erosion minimiser at that sample must be interior
    too, which matters when K extends beyond the grid.
    """
    ero, ei, ej = quad_erode_arrays(f, lam, h, threads, with_arg=check_erosion)
    low, di, dj = quad_dilate_arrays(ero, lam, h, threads, with_arg=True)
    bad = _near_border(di, dj, f.shape, margin)
    if check_erosion:
        bad |= _near_border(ei[dj, di], ej[dj, di], f.shape, margin)
    # Round-off can lift the opening a hair above f; it is anti-extensive.
    low = np.minimum(low, f)
    trusted = ~bad
    if trusted.all():
        bm = 0
    else:
        bm = int(_border_distance(f.shape)[bad].max()) + 1
    return OpeningResult(low, trusted, bm)


def lower_transform_opening(f: ScalarField2, lam: float, threads: int = 1) -> ScalarField2:
    """(f eroded by -lam|x|^2) dilated by -lam|x|^2."""
    lam = _check_lambda(lam)
    res = opening_arrays(f.values, lam, f.spec.spacing_h, threads)
    return ScalarField2(f.spec, res.lower)


# -- iterative route --------------------------------------------------------

def _dyadic_steps(n: int) -> np.ndarray:
    steps = [1]
    while steps[-1] * 2 < n:
        steps.append(steps[-1] * 2)
    return np.array(steps, dtype=np.int64)


def convex_envelope_arrays(g: np.ndarray, cfg: LowerTransformBackend) -> tuple[np.ndarray, float, int]:
    """Grid convex envelope of g along the stencil directions.

    Jacobi sweeps u <- min(u, (u(x+kd) + u(x-kd))/2) over stencil directions d
    and dyadic step lengths k, starting from u = g. Any step k is implied by
    step 1 at the fixed point, so the long steps only speed up convergence.
    Returns (u, residual, sweeps).
    """
    g = np.ascontiguousarray(g, dtype=np.float64)
    ny, nx = g.shape
    span = float(g.max() - g.min())
    tol = cfg.tol if cfg.tol is not None else max(1e-10 * span, 1e-300)
    max_iters = cfg.max_iters if cfg.max_iters is not None else 10 * (nx + ny)
    dirs = np.array(cfg.stencil, dtype=np.int64)
    steps = _dyadic_steps(max(nx, ny))
    u = g.copy()
    out = np.empty_like(u)
    residual = np.inf
    for it in range(1, max_iters + 1):
        changes = _run_blocks(_kernels.envelope_sweep_rows, ny, cfg.threads, u, out, dirs, steps)
        residual = max(changes)
        u, out = out, u
        if residual <= tol:
            return u, residual, it
    raise EnvelopeNotConverged(residual, max_iters)


def convex_envelope_grid(g: ScalarField2, backendcfg: LowerTransformBackend | None = None) -> ScalarField2:
    cfg = backendcfg or LowerTransformBackend(BackendKind.ITERATIVE)
    u, _, _ = convex_envelope_arrays(g.values, cfg)
    return ScalarField2(g.spec, u)


def _centred_quadratic(spec: GridSpec) -> np.ndarray:
    # |x - c|^2 about the grid centre, from indices only, so that moving the
    # origin changes nothing; the envelope is invariant under the affine
    # difference to |x|^2.
    h = spec.spacing_h
    xi = (np.arange(spec.nx) - 0.5 * (spec.nx - 1)) * h
    yj = (np.arange(spec.ny) - 0.5 * (spec.ny - 1)) * h
    return yj[:, None] ** 2 + xi[None, :] ** 2


def lower_transform_iterative(f: ScalarField2, lam: float,
                              cfg: LowerTransformBackend | None = None) -> ScalarField2:
    """co[f + lam|x|^2] - lam|x|^2 through the iterative grid envelope."""
    lam = _check_lambda(lam)
    cfg = cfg or LowerTransformBackend(BackendKind.ITERATIVE)
    q = lam * _centred_quadratic(f.spec)
    u, _, _ = convex_envelope_arrays(f.values + q, cfg)
    return ScalarField2(f.spec, np.minimum(u - q, f.values))


def lower_transform(f: ScalarField2, lam: float, cfg: LowerTransformBackend | None = None) -> ScalarField2:
    cfg = cfg or LowerTransformBackend()
    if cfg.kind is BackendKind.OPENING:
        return lower_transform_opening(f, lam, cfg.threads)
    return lower_transform_iterative(f, lam, cfg)


# -- locality ----------------------------------------------------------------

def locality_radius(dist_at_x: float, lam: float) -> float:
    """Radius 2*dist/lam of the ball that determines the lower transform at x."""
    if dist_at_x < 0:
        raise ValueError("distance must be >= 0")
    lam = _check_lambda(lam)
    return 2.0 * dist_at_x / lam


def lower_transform_at(f: ScalarField2, distfield: ScalarField2, lam: float,
                       x: tuple[float, float], pad: int = 3) -> float:
    """Lower transform of f at the sample nearest x, from a local window only.

    ``distfield`` holds dist^2. The supporting paraboloid at x has its apex
    within r/2 of x and the erosion minimiser at the apex lies within r of x
    (r the locality radius), so the opening of the square sub-grid of
    half-width r around x reproduces the global value.
    """
    lam = _check_lambda(lam)
    spec = f.spec
    i, j = spec.nearest_index(*x)
    d = float(np.sqrt(max(distfield.values[j, i], 0.0)))
    r = locality_radius(d, lam)
    h = spec.spacing_h
    if r < h:
        return float(f.values[j, i])
    w = int(np.ceil(r / h)) + pad
    if i - w < 0 or j - w < 0 or i + w >= spec.nx or j + w >= spec.ny:
        raise BorderInvalidError(
            f"window of radius {r:.4g} around ({x[0]:.4g}, {x[1]:.4g}) exceeds the grid")
    sub = np.ascontiguousarray(f.values[j - w:j + w + 1, i - w:i + w + 1])
    res = opening_arrays(sub, lam, h)
    return float(res.lower[w, w])
