"""Set-valued maps F: X => Y as boolean graph masks on grid products.

The graph lives on xgrid x ygrid as a (xsize, ysize) boolean array; the
conjugate of F is the support function of the graph point set evaluated at
stacked duals (x*, y*).  Constructors cover the Lagrange form g_i(y) <= x_i,
explicit xy-constraint lists c_k(x, y) <= 0, explicit graph point lists,
and the full graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as _expr
from .core import (
    INF,
    NODE_TOL,
    DualGrid,
    Grid,
    GriddedFunction,
    axis_names,
    name_environment,
    product_grid,
    product_names,
)
from .conjugate import max_dots_minus
from .errors import DimensionMismatch, NotANode

__all__ = [
    "SetValuedMap",
    "full_map",
    "map_from_inequalities",
    "map_from_constraints",
    "map_from_points",
    "map_conjugate",
    "map_conjugate_at",
    "lipschitz_estimate_map",
]


@dataclass(frozen=True)
class SetValuedMap:
    """Graph mask of F on xgrid x ygrid; row x, column y, both flat order."""

    xgrid: Grid
    ygrid: Grid
    graph: np.ndarray
    provenance: tuple[str, ...] | None = None

    def __post_init__(self):
        g = np.asarray(self.graph, dtype=bool)
        if g.shape != (self.xgrid.size, self.ygrid.size):
            raise DimensionMismatch(
                f"graph shape {g.shape} does not match "
                f"({self.xgrid.size}, {self.ygrid.size})"
            )
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "graph", g)

    @property
    def dom_mask(self) -> np.ndarray:
        return self.graph.any(axis=1)

    @property
    def is_proper(self) -> bool:
        return bool(self.graph.any())

    def values_at(self, xi: int) -> np.ndarray:
        """Flat y-node indices of F at the x node `xi`."""
        return np.flatnonzero(self.graph[xi])

    def contains(self, xi: int, yi: int) -> bool:
        return bool(self.graph[xi, yi])

    @cached_property
    def graph_points(self) -> np.ndarray:
        """Stacked (x, y) coordinates of the true graph cells, shape (N, m+n)."""
        xi, yi = np.nonzero(self.graph)
        pts = np.hstack([self.xgrid.nodes[xi], self.ygrid.nodes[yi]])
        pts.setflags(write=False)
        return pts

    @cached_property
    def graph_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(x indices, y indices) of the true graph cells."""
        xi, yi = np.nonzero(self.graph)
        return xi, yi


def full_map(xgrid: Grid, ygrid: Grid) -> SetValuedMap:
    """F(x) = Y for every x."""
    return SetValuedMap(
        xgrid,
        ygrid,
        np.ones((xgrid.size, ygrid.size), dtype=bool),
        provenance=("full",),
    )


def map_from_inequalities(
    g_exprs: Sequence[str], xgrid: Grid, ygrid: Grid
) -> SetValuedMap:
    """Lagrange constraint map F(x) = {y : g_i(y) <= x_i, i = 1..m}.

    One expression per x axis; feasibility tolerance 1e-9.
    """
    if len(g_exprs) != xgrid.dim:
        raise DimensionMismatch(
            f"{len(g_exprs)} inequalities for a {xgrid.dim}-dimensional x-grid"
        )
    names = axis_names("y", ygrid.dim)
    aliases = {"y": "y1"} if ygrid.dim == 1 else {}
    env = name_environment(ygrid, names, aliases)
    gvals = np.empty((xgrid.dim, ygrid.size))
    for i, text in enumerate(g_exprs):
        ast = _expr.parse_and_check(text, list(env))
        gvals[i] = np.broadcast_to(
            np.asarray(_expr.evaluate(ast, env), dtype=np.float64), (ygrid.size,)
        )
    X = xgrid.nodes
    graph = (gvals.T[None, :, :] <= X[:, None, :] + NODE_TOL).all(axis=2)
    prov = tuple(f"{g} - x{i + 1} <= 0" for i, g in enumerate(g_exprs))
    return SetValuedMap(xgrid, ygrid, graph, provenance=prov)


def map_from_constraints(
    c_exprs: Sequence[str], xgrid: Grid, ygrid: Grid
) -> SetValuedMap:
    """Graph {(x, y) : c_k(x, y) <= 0 for all k}, tolerance 1e-9."""
    pg = product_grid(xgrid, ygrid)
    names, aliases = product_names(xgrid.dim, ygrid.dim)
    env = name_environment(pg, names, aliases)
    mask = np.ones(pg.size, dtype=bool)
    for text in c_exprs:
        ast = _expr.parse_and_check(text, list(env))
        vals = np.broadcast_to(
            np.asarray(_expr.evaluate(ast, env), dtype=np.float64), (pg.size,)
        )
        with np.errstate(invalid="ignore"):
            mask &= vals <= NODE_TOL
    graph = mask.reshape(xgrid.size, ygrid.size)
    return SetValuedMap(
        xgrid, ygrid, graph, provenance=tuple(f"{c} <= 0" for c in c_exprs)
    )


def map_from_points(
    points: Sequence[Sequence[float]], xgrid: Grid, ygrid: Grid
) -> SetValuedMap:
    """Graph from explicit (x..., y...) coordinate rows (must hit nodes)."""
    graph = np.zeros((xgrid.size, ygrid.size), dtype=bool)
    m = xgrid.dim
    for row in points:
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        if row.shape[0] != m + ygrid.dim:
            raise DimensionMismatch(
                f"graph point has {row.shape[0]} coordinates, expected {m + ygrid.dim}"
            )
        xi = xgrid.index_of(row[:m])
        yi = ygrid.index_of(row[m:])
        graph[xi, yi] = True
    return SetValuedMap(xgrid, ygrid, graph, provenance=("points",))


def map_conjugate_at(F: SetValuedMap, points: np.ndarray) -> np.ndarray:
    """Support function of the graph at arbitrary stacked (x*, y*) points."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != F.xgrid.dim + F.ygrid.dim:
        raise DimensionMismatch("dual points must stack x* and y* coordinates")
    pts = F.graph_points
    if pts.shape[0] == 0:
        return np.full(points.shape[0], -INF)
    return max_dots_minus(points, pts, np.zeros(pts.shape[0]))


def map_conjugate(F: SetValuedMap, xduals: DualGrid, yduals: DualGrid) -> GriddedFunction:
    """F*(x*, y*) = support of the graph, on the product dual grid."""
    if xduals.dim != F.xgrid.dim or yduals.dim != F.ygrid.dim:
        raise DimensionMismatch("dual grids must match the map's x/y dimensions")
    duals = product_grid(xduals, yduals)
    vals = map_conjugate_at(F, duals.nodes)
    return GriddedFunction(duals, vals, provenance="map_conjugate")


def lipschitz_estimate_map(F: SetValuedMap) -> float:
    """Smallest Lipschitz modulus of F over all node pairs (sum norms).

    ell = max over x != u in dom F of excess(F(u), F(x)) / ||x - u||_1 where
    excess is the one-sided Hausdorff distance in the y sum norm.  Returns
    +inf when dom F is not the whole x-grid (the definition quantifies over
    every pair of x nodes).
    """
    dom = F.dom_mask
    if not dom.all():
        return INF
    nx = F.xgrid.size
    if nx == 1:
        return 0.0
    Y = F.ygrid.nodes
    D = np.abs(Y[:, None, :] - Y[None, :, :]).sum(axis=2)
    X = F.xgrid.nodes
    members = [np.flatnonzero(F.graph[i]) for i in range(nx)]
    ell = 0.0
    for u in range(nx):
        for x in range(nx):
            if x == u:
                continue
            excess = float(D[np.ix_(members[u], members[x])].min(axis=1).max())
            dist = float(np.abs(X[x] - X[u]).sum())
            ell = max(ell, excess / dist)
    return ell
