"""Squared distance transforms and quadratic erosion/dilation.

Both rest on the separable lower envelope of parabolas: a quadratic
structuring function lam*|x-y|^2 splits into one pass per axis, each pass
exact on the grid.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .fields import BinaryMask2, EmptySetError, GridSpec, PointSet2, ScalarField2

BRUTE_FORCE_MAX_POINTS = 64


def _run_blocks(kernel, n_rows: int, threads: int, *args):
    """Run ``kernel(*args, start, stop)`` over row blocks, optionally on threads."""
    threads = max(1, int(threads))
    if threads == 1 or n_rows < 2 * threads:
        return [kernel(*args, 0, n_rows)]
    bounds = np.linspace(0, n_rows, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futs = [ex.submit(kernel, *args, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
        return [f.result() for f in futs]


def _envelope_pass(f: np.ndarray, w: float, threads: int) -> tuple[np.ndarray, np.ndarray]:
    f = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty_like(f)
    arg = np.empty(f.shape, dtype=np.int64)
    _run_blocks(_kernels.envelope_rows, f.shape[0], threads, f, w, out, arg)
    return out, arg


def _separable_envelope(f: np.ndarray, w: float, threads: int = 1, with_arg: bool = False):
    """min over grid y of f(y) + w*|i-y|^2 in index units; optionally the argmin."""
    a, ax = _envelope_pass(f, w, threads)            # along x (rows)
    b, ay = _envelope_pass(a.T, w, threads)          # along y (columns of a)
    out = np.ascontiguousarray(b.T)
    if not with_arg:
        return out, None, None
    arg_j = np.ascontiguousarray(ay.T)
    cols = np.broadcast_to(np.arange(f.shape[1]), f.shape)
    arg_i = ax[arg_j, cols]
    return out, arg_i, arg_j


# -- distance transforms ----------------------------------------------------

def edt_points(k: PointSet2, spec: GridSpec) -> ScalarField2:
    """Squared distance from every sample to the nearest point of k.

    Brute force for small sets; an exact nearest-neighbour query otherwise.
    """
    k.require_nonempty()
    X, Y = spec.coords()
    pts = k.points
    if len(pts) <= BRUTE_FORCE_MAX_POINTS:
        out = np.full(spec.shape, np.inf)
        for px, py in pts:
            np.minimum(out, (X - px) ** 2 + (Y - py) ** 2, out=out)
        return ScalarField2(spec, out)
    tree = cKDTree(pts)
    _, idx = tree.query(np.column_stack([X.ravel(), Y.ravel()]))
    near = pts[idx]
    d2 = (X.ravel() - near[:, 0]) ** 2 + (Y.ravel() - near[:, 1]) ** 2
    return ScalarField2(spec, d2.reshape(spec.shape))


def edt_mask(mask: BinaryMask2, threads: int = 1) -> ScalarField2:
    """Squared world distance from each cell centre to the nearest true cell."""
    bits = np.ascontiguousarray(mask.bits)
    if not bits.any():
        raise EmptySetError("empty set K")
    # Pass 1: exact 1-D distance along columns; pass 2: parabola envelope along rows.
    colT = np.empty(bits.T.shape)
    bT = np.ascontiguousarray(bits.T)
    _run_blocks(_kernels.column_distance_rows, bT.shape[0], threads, bT, colT)
    rows, _ = _envelope_pass(np.ascontiguousarray(colT.T), 1.0, threads)
    h = mask.spec.spacing_h
    return ScalarField2(mask.spec, rows * (h * h))


# -- quadratic erosion and dilation -----------------------------------------

class QuadKind(enum.Enum):
    ERODE = "erode"
    DILATE = "dilate"


@dataclass(frozen=True, slots=True)
class QuadTransformKind:
    kind: QuadKind
    lam: float

    def __post_init__(self) -> None:
        # lam = 0 is allowed for erosion only, where it gives the global minimum.
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.lam == 0 and self.kind is QuadKind.DILATE:
            raise ValueError("lambda must be > 0 for dilation")

    def apply(self, f: ScalarField2, threads: int = 1) -> ScalarField2:
        if self.kind is QuadKind.ERODE:
            if self.lam == 0:
                return ScalarField2(f.spec, np.full(f.spec.shape, f.values.min()))
            return quad_erode(f, self.lam, threads)
        return quad_dilate(f, self.lam, threads)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise ValueError(f"lambda must be > 0, got {lam}")
    return lam


def quad_erode_arrays(f: np.ndarray, lam: float, h: float, threads: int = 1, with_arg: bool = False):
    """Array form of :func:`quad_erode`; returns (values, arg_i, arg_j)."""
    return _separable_envelope(f, lam * h * h, threads, with_arg)


def quad_dilate_arrays(g: np.ndarray, lam: float, h: float, threads: int = 1, with_arg: bool = False):
    out, ai, aj = _separable_envelope(-np.asarray(g), lam * h * h, threads, with_arg)
    return -out, ai, aj


def quad_erode(f: ScalarField2, lam: float, threads: int = 1) -> ScalarField2:
    """min over grid samples y of f(y) + lam*|x-y|^2."""
    lam = _check_lambda(lam)
    out, _, _ = quad_erode_arrays(f.values, lam, f.spec.spacing_h, threads)
    return ScalarField2(f.spec, out)


def quad_dilate(g: ScalarField2, lam: float, threads: int = 1) -> ScalarField2:
    """max over grid samples y of g(y) - lam*|x-y|^2."""
    lam = _check_lambda(lam)
    out, _, _ = quad_dilate_arrays(g.values, lam, g.spec.spacing_h, threads)
    return ScalarField2(g.spec, out)
