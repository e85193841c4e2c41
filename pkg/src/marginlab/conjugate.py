"""Fenchel conjugates, support functions, and infimal convolution on grids.

The conjugate of a gridded f at a dual node s is the exact finite maximum
of <s, x> - f(x) over nodes with f(x) < +inf; sup over an empty domain is
-inf, and any node with f(x) = -inf makes the conjugate identically +inf.
A linear-time transform (lower convex hull + monotone merge) reproduces
the brute-force values on sorted 1-D data and separable multi-D data.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import (
    INF,
    Axis,
    DualGrid,
    Grid,
    GriddedFunction,
    ext_add,
    ext_add_arrays,
)
from .errors import DimensionMismatch, GridMismatch, UnsupportedShape

_CHUNK = 4096


def thread_count() -> int:
    """Worker cap from MARGINLAB_THREADS (default 1)."""
    try:
        n = int(os.environ.get("MARGINLAB_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, n)


def max_dots_minus(queries: np.ndarray, points: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """max over rows p of <q, p> - v(p), per query row q.

    All inputs finite; empty `points` yields -inf per query.  Work is
    chunked over queries, optionally across threads (deterministic
    assembly by chunk index).
    """
    queries = np.asarray(queries, dtype=np.float64)
    if points.shape[0] == 0:
        return np.full(queries.shape[0], -INF)
    out = np.empty(queries.shape[0], dtype=np.float64)
    chunk = max(64, min(_CHUNK, 4_000_000 // points.shape[0]))

    def work(lo: int) -> None:
        hi = min(lo + chunk, queries.shape[0])
        out[lo:hi] = (queries[lo:hi] @ points.T - vals[None, :]).max(axis=1)

    starts = range(0, queries.shape[0], chunk)
    workers = thread_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return out


def _validate_dual(f: GriddedFunction, duals: Grid) -> None:
    if duals.dim != f.grid.dim:
        raise DimensionMismatch(
            f"dual grid is {duals.dim}-dimensional, primal is {f.grid.dim}-dimensional"
        )


def conjugate_at(f: GriddedFunction, points: np.ndarray, return_argmax: bool = False):
    """Exact conjugate values of f at arbitrary dual points.

    With return_argmax=True also returns, per point, the flat index of the
    first maximizing node (-1 on the degenerate all-inf branches).  Ties go
    to the lowest node index.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != f.grid.dim:
        raise DimensionMismatch("dual points and grid dimension disagree")
    k = points.shape[0]
    if (f.values == -INF).any():
        vals = np.full(k, INF)
        return (vals, np.full(k, -1)) if return_argmax else vals
    dom = f.dom_mask
    if not dom.any():
        vals = np.full(k, -INF)
        return (vals, np.full(k, -1)) if return_argmax else vals
    X = f.grid.nodes[dom]
    fv = f.values[dom]
    if not return_argmax:
        return max_dots_minus(points, X, fv)
    scores = points @ X.T - fv[None, :]
    arg_local = scores.argmax(axis=1)
    vals = scores[np.arange(k), arg_local]
    arg = np.flatnonzero(dom)[arg_local]
    return vals, arg


def conjugate(f: GriddedFunction, duals: DualGrid) -> GriddedFunction:
    """Brute-force Fenchel conjugate sampled at every dual node."""
    _validate_dual(f, duals)
    vals = conjugate_at(f, duals.nodes)
    return GriddedFunction(duals, vals, provenance="conjugate")


def _lower_hull(x: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the lower convex hull of the graph points (x ascending)."""
    hx: list[float] = []
    hv: list[float] = []
    for xi, vi in zip(x, v):
        # pop while the incoming slope does not increase (multiplied-out form)
        while len(hx) >= 2 and (hv[-1] - hv[-2]) * (xi - hx[-1]) >= (vi - hv[-1]) * (
            hx[-1] - hx[-2]
        ):
            hx.pop()
            hv.pop()
        hx.append(float(xi))
        hv.append(float(vi))
    return np.asarray(hx), np.asarray(hv)


def _fast_1d(x: np.ndarray, v: np.ndarray, s: np.ndarray) -> np.ndarray:
    finite = v < INF
    hx, hv = _lower_hull(x[finite], v[finite])
    if hx.shape[0] == 1:
        return s * hx[0] - hv[0]
    slopes = (hv[1:] - hv[:-1]) / (hx[1:] - hx[:-1])
    j = np.searchsorted(slopes, s, side="right")
    return s * hx[j] - hv[j]


def _separable_parts(f: GriddedFunction) -> list[np.ndarray] | None:
    """Per-axis line samples g_k if f(x) = sum_k g_k(x_k) - (d-1) f(base).

    The base node is the first finite node; returns None if the
    decomposition does not reproduce f (relative tolerance 1e-12,
    infinities must match exactly).
    """
    shape = f.grid.shape
    V = f.reshaped()
    finite = np.isfinite(V)
    if not finite.any():
        return None
    base = np.unravel_index(int(np.argmax(finite.reshape(-1))), shape)
    fbase = V[base]
    parts = []
    for k in range(f.grid.dim):
        sel = list(base)
        sel[k] = slice(None)
        parts.append(np.asarray(V[tuple(sel)], dtype=np.float64))
    total = np.zeros(shape)
    for k, g in enumerate(parts):
        sh = [1] * f.grid.dim
        sh[k] = shape[k]
        total = ext_add_arrays(total, g.reshape(sh))
    total = ext_add_arrays(total, np.full(shape, -(f.grid.dim - 1) * fbase))
    both_inf = (total == INF) & (V == INF)
    scale = np.maximum(1.0, np.abs(V, where=np.isfinite(V), out=np.ones(shape)))
    close = np.isfinite(total) & np.isfinite(V) & (np.abs(total - V) <= 1e-12 * scale)
    if not (both_inf | close).all():
        return None
    return parts + [np.float64(fbase)]


def conjugate_fast(f: GriddedFunction, duals: DualGrid) -> GriddedFunction:
    """Linear-time Legendre transform; matches `conjugate` within 1e-12.

    1-D data always works.  Multi-D data must be separable (a sum of
    per-axis terms, detected against the data itself); otherwise
    UnsupportedShape is raised.
    """
    _validate_dual(f, duals)
    if (f.values == -INF).any():
        return GriddedFunction(duals, np.full(duals.size, INF), provenance="conjugate_fast")
    if not f.dom_mask.any():
        return GriddedFunction(duals, np.full(duals.size, -INF), provenance="conjugate_fast")
    if f.grid.dim == 1:
        vals = _fast_1d(f.grid.axis_coords[0], f.values, duals.axis_coords[0])
        return GriddedFunction(duals, vals, provenance="conjugate_fast")
    parts = _separable_parts(f)
    if parts is None:
        raise UnsupportedShape(
            "multi-dimensional input is not separable; conjugate_fast handles "
            "1-D or separable data only"
        )
    *gs, fbase = parts
    total = np.zeros(duals.shape)
    for k, g in enumerate(gs):
        part = _fast_1d(f.grid.axis_coords[k], g, duals.axis_coords[k])
        sh = [1] * duals.dim
        sh[k] = duals.shape[k]
        total = ext_add_arrays(total, part.reshape(sh))
    total = ext_add_arrays(total, np.full(duals.shape, (f.grid.dim - 1) * float(fbase)))
    return GriddedFunction(duals, total.reshape(-1), provenance="conjugate_fast")


def biconjugate(f: GriddedFunction, duals: DualGrid) -> GriddedFunction:
    """Conjugate of the conjugate, sampled back on the primal grid."""
    fstar = conjugate(f, duals)
    back = conjugate(fstar, f.grid)
    return GriddedFunction(f.grid, back.values, provenance="biconjugate")


def support_function(points: np.ndarray, duals: DualGrid) -> GriddedFunction:
    """Support function of a finite point set at every dual node."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.size == 0:
        return GriddedFunction(duals, np.full(duals.size, -INF), provenance="support")
    if points.shape[1] != duals.dim:
        raise DimensionMismatch("points and dual grid dimension disagree")
    vals = max_dots_minus(duals.nodes, points, np.zeros(points.shape[0]))
    return GriddedFunction(duals, vals, provenance="support")


def inf_convolution(
    g1: GriddedFunction, g2: GriddedFunction, out: Grid
) -> GriddedFunction:
    """Exact infimal convolution onto `out` grid nodes.

    A split (x1, x2) is admissible for an out node x when x1 + x2 matches x
    within 1e-9 per coordinate; nodes with no admissible split fall back to
    the nearest pairwise sum (reported in provenance) when one exists
    within the out box, else stay +inf.
    """
    if g1.grid != g2.grid:
        raise GridMismatch("inf_convolution inputs must share one grid")
    X = g1.grid.nodes
    n = g1.grid.size
    acc = np.full(out.size, INF)
    lo = np.array([a.lo for a in out.axes])
    step = np.array([a.step for a in out.axes])
    counts = np.array(out.shape)
    for i in range(n):
        sums = X[i] + X
        idx = np.rint((sums - lo) / step).astype(np.int64)
        inside = ((idx >= 0) & (idx < counts)).all(axis=1)
        if not inside.any():
            continue
        recon = lo + idx[inside] * step
        ok = np.abs(recon - sums[inside]).max(axis=1) <= 1e-9
        if not ok.any():
            continue
        flat = np.ravel_multi_index(idx[inside][ok].T, out.shape)
        vals = ext_add_arrays(g1.values[i], g2.values[inside][ok])
        np.minimum.at(acc, flat, vals)
    missing = np.flatnonzero(acc == INF)
    relaxed = 0
    if missing.size:
        lo1 = np.array([a.lo for a in g1.grid.axes])
        step1 = np.array([a.step for a in g1.grid.axes])
        counts1 = np.array(g1.grid.shape)
        for m in missing:
            t = out.coords(int(m))
            best = (INF, None)
            for i in range(n):
                r = t - X[i]
                j_multi = np.clip(np.rint((r - lo1) / step1).astype(np.int64), 0, counts1 - 1)
                dist = float(np.abs(lo1 + j_multi * step1 - r).max())
                if dist < best[0] - 1e-12:
                    best = (dist, (i, int(np.ravel_multi_index(j_multi, g1.grid.shape))))
            if best[1] is not None:
                i, j = best[1]
                acc[m] = float(ext_add(g1.values[i], g2.values[j]))
                relaxed += 1
    prov = "inf_convolution"
    if relaxed:
        prov += f" ({relaxed} out node(s) relaxed to nearest pairwise sum)"
    return GriddedFunction(out, acc, provenance=prov)


def default_dual_grid(f: GriddedFunction, count: int | None = None) -> DualGrid:
    """Symmetric dual box covering the max finite secant slope per axis.

    The bound is rounded up to the next power of two (at least 1) so that
    dyadic data keeps exact dual nodes; counts default to the primal count,
    bumped to odd so the origin is a node.
    """
    V = f.reshaped()
    axes = []
    for k, ax in enumerate(f.grid.axes):
        with np.errstate(invalid="ignore"):
            d = np.diff(V, axis=k)
        lead = np.isfinite(np.moveaxis(V, k, 0)[:-1])
        trail = np.isfinite(np.moveaxis(V, k, 0)[1:])
        both = np.moveaxis(lead & trail, 0, k)
        slopes = np.abs(d[both]) / ax.step if both.any() else np.array([1.0])
        m = max(float(slopes.max()), 1.0)
        bound = 2.0 ** math.ceil(math.log2(m)) if m > 1.0 else 1.0
        if bound < m:
            bound *= 2.0
        c = count if count is not None else ax.count
        if c % 2 == 0:
            c += 1
        axes.append(Axis(-bound, bound, max(3, c)))
    return Grid(tuple(axes))
