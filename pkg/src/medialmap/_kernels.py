"""Compiled inner loops. All kernels release the GIL and work on row blocks."""

from __future__ import annotations

import numpy as np
from numba import njit

_INF = np.inf


@njit(cache=True, nogil=True)
def _envelope_line(f, w, out, arg, v, z):
    # Lower envelope of the parabolas q -> f[p] + w*(q - p)^2 over p.
    # Entries with f = +inf are skipped; an all-inf line stays inf.
    n = f.shape[0]
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == _INF:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -_INF
            z[1] = _INF
            continue
        while True:
            p = v[k]
            s = ((fq + w * q * q) - (f[p] + w * p * p)) / (2.0 * w * (q - p))
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        z[k] = -_INF if k == 0 else s
        z[k + 1] = _INF
    if k < 0:
        for q in range(n):
            out[q] = _INF
            arg[q] = -1
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        d = q - p
        out[q] = f[p] + w * d * d
        arg[q] = p


@njit(cache=True, nogil=True)
def envelope_rows(f, w, out, arg, start, stop):
    """Apply the 1-D parabola envelope to rows start..stop-1 of f (last axis)."""
    n = f.shape[1]
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    for r in range(start, stop):
        _envelope_line(f[r], w, out[r], arg[r], v, z)


@njit(cache=True, nogil=True)
def column_distance_rows(bits, out, start, stop):
    """Squared index distance along rows to the nearest true entry (inf if none)."""
    n = bits.shape[1]
    for r in range(start, stop):
        row = bits[r]
        o = out[r]
        last = -1
        for q in range(n):
            if row[q]:
                last = q
            o[q] = _INF if last < 0 else float((q - last) * (q - last))
        last = -1
        for q in range(n - 1, -1, -1):
            if row[q]:
                last = q
            if last >= 0:
                d = float((last - q) * (last - q))
                if d < o[q]:
                    o[q] = d


@njit(cache=True, nogil=True)
def envelope_sweep_rows(u, out, dirs, steps, start, stop):
    """One Jacobi sweep of u <- min(u, (u(x+kd)+u(x-kd))/2) on rows start..stop-1.

    Returns the largest decrease in the block.
    """
    ny, nx = u.shape
    nd = dirs.shape[0]
    ns = steps.shape[0]
    change = 0.0
    for j in range(start, stop):
        for i in range(nx):
            best = u[j, i]
            for a in range(nd):
                di = dirs[a, 0]
                dj = dirs[a, 1]
                for b in range(ns):
                    k = steps[b]
                    i0 = i - k * di
                    j0 = j - k * dj
                    i1 = i + k * di
                    j1 = j + k * dj
                    if i0 < 0 or i0 >= nx or i1 < 0 or i1 >= nx:
                        break
                    if j0 < 0 or j0 >= ny or j1 < 0 or j1 >= ny:
                        break
                    m = 0.5 * (u[j0, i0] + u[j1, i1])
                    if m < best:
                        best = m
            d = u[j, i] - best
            if d > change:
                change = d
            out[j, i] = best
    return change
