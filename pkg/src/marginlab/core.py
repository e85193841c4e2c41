"""Extended-real values, rectangular grids, and grid-sampled functions.

Values live in [-inf, +inf] with the lower-addition conventions used for
inf-type formulas: a + (+inf) = +inf and a + (-inf) = -inf for finite a,
and (+inf) + (-inf) := +inf.  sup over an empty set is -inf, inf over an
empty set is +inf.  NaN is never a legal payload.

Grids are uniform per axis: node i on an axis is lo + i*(hi-lo)/(count-1),
nodes are enumerated row-major (C order), and refinement by an integer
factor keeps the original nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import expr as _expr
from .errors import (
    DimensionMismatch,
    GridMismatch,
    NonFiniteExpression,
    NotANode,
)

INF = math.inf
NODE_TOL = 1e-9


# --- extended reals ---------------------------------------------------------


@dataclass(frozen=True, order=True)
class ExtReal:
    """An extended real number; addition follows the lower convention."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real payload")
        object.__setattr__(self, "value", v)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __add__(self, other: "ExtReal | float") -> "ExtReal":
        return ext_add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "ExtReal":
        return ExtReal(-self.value)

    def __sub__(self, other: "ExtReal | float") -> "ExtReal":
        return ext_add(self, -_coerce(other))

    def __float__(self) -> float:
        return self.value

    def __eq__(self, other) -> bool:
        if isinstance(other, ExtReal):
            return self.value == other.value
        if isinstance(other, (int, float)):
            return self.value == float(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __repr__(self) -> str:
        return f"ExtReal({render_value(self.value)})"


POS_INF = ExtReal(INF)
NEG_INF = ExtReal(-INF)


def _coerce(v: "ExtReal | float") -> ExtReal:
    return v if isinstance(v, ExtReal) else ExtReal(float(v))


def ext_add(a: "ExtReal | float", b: "ExtReal | float") -> ExtReal:
    """Totalized addition: +inf dominates -inf."""
    x, y = _coerce(a).value, _coerce(b).value
    if x == INF or y == INF:
        return POS_INF
    if x == -INF or y == -INF:
        return NEG_INF
    return ExtReal(x + y)


def ext_scale(c: float, v: "ExtReal | float") -> ExtReal:
    """Scalar multiple with the test-harness convention 0 * (+-inf) := 0."""
    x = _coerce(v).value
    if c == 0.0:
        return ExtReal(0.0)
    return ExtReal(c * x)


def ext_add_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Broadcast lower addition over float arrays that may hold +-inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        out = a + b
    pos = (a == INF) | (b == INF)
    neg = ((a == -INF) | (b == -INF)) & ~pos
    out = np.where(pos, INF, out)
    out = np.where(neg, -INF, out)
    return out


def render_value(v: float) -> "float | str":
    """JSON-friendly rendering: infinities become '+inf' / '-inf' strings."""
    if v == INF:
        return "+inf"
    if v == -INF:
        return "-inf"
    return float(v)


# --- grids ------------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    """A closed interval [lo, hi] sampled at `count` uniform nodes."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("axis endpoints must be finite")
        if self.hi <= self.lo:
            raise ValueError(f"axis needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise ValueError("axis needs at least 2 nodes")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    def coords(self) -> np.ndarray:
        i = np.arange(self.count, dtype=np.float64)
        return self.lo + (i * (self.hi - self.lo)) / (self.count - 1)


@dataclass(frozen=True)
class Grid:
    """Product of uniform axes; nodes are enumerated row-major."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        if not self.axes:
            raise ValueError("grid needs at least one axis")
        object.__setattr__(self, "axes", tuple(self.axes))

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple[float, float, int]]) -> "Grid":
        return cls(tuple(Axis(lo, hi, int(c)) for lo, hi, c in bounds))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def axis_coords(self) -> tuple[np.ndarray, ...]:
        return tuple(a.coords() for a in self.axes)

    @cached_property
    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (size, dim), row-major order."""
        mesh = np.meshgrid(*self.axis_coords, indexing="ij")
        out = np.stack(mesh, axis=-1).reshape(self.size, self.dim)
        out.setflags(write=False)
        return out

    def coords(self, flat: int) -> np.ndarray:
        return self.nodes[flat]

    def multi(self, flat: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.unravel_index(flat, self.shape))

    def flat(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(k) for k in multi), self.shape))

    def index_of(self, point: Sequence[float], tol: float = NODE_TOL) -> int:
        """Flat index of the node matching `point` within `tol` per axis."""
        p = np.asarray(point, dtype=np.float64).reshape(-1)
        if p.shape[0] != self.dim:
            raise DimensionMismatch(
                f"point has {p.shape[0]} coordinates, grid has {self.dim} axes"
            )
        multi = []
        for k, ax in enumerate(self.axes):
            i = int(round((p[k] - ax.lo) / ax.step))
            if i < 0 or i >= ax.count or abs(ax.coords()[i] - p[k]) > tol:
                raise NotANode(f"{p.tolist()} is not a grid node (axis {k})")
            multi.append(i)
        return self.flat(multi)

    def refine(self, factor: int) -> "Grid":
        """Same box, (count-1)*factor + 1 nodes per axis; keeps old nodes."""
        if factor < 1 or int(factor) != factor:
            raise ValueError("refinement factor must be a positive integer")
        return Grid(
            tuple(Axis(a.lo, a.hi, (a.count - 1) * int(factor) + 1) for a in self.axes)
        )

    def boundary_mask(self) -> np.ndarray:
        """Flat mask of nodes with some coordinate on the bounding box."""
        idx = np.stack(
            np.meshgrid(*(np.arange(c) for c in self.shape), indexing="ij"), axis=-1
        ).reshape(self.size, self.dim)
        on_edge = (idx == 0) | (idx == np.array(self.shape) - 1)
        return on_edge.any(axis=1)


# Dual grids share the geometry of primal grids; the axes are read as
# slope/dual-variable boxes.  Keeping one type keeps every grid utility
# available on both sides of a conjugacy.
DualGrid = Grid


def product_grid(a: Grid, b: Grid) -> Grid:
    return Grid(a.axes + b.axes)


def refine(grid: Grid, factor: int) -> Grid:
    return grid.refine(factor)


# --- gridded functions -------------------------------------------------------


@dataclass(frozen=True)
class GriddedFunction:
    """Extended-real values attached to the nodes of a grid.

    `values` is a flat float64 array (row-major node order); +-inf encode
    the extended values and NaN is rejected.  `provenance` optionally keeps
    the expression or construction the data came from.
    """

    grid: Grid
    values: np.ndarray
    provenance: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.grid.size:
            raise GridMismatch(
                f"{v.shape[0]} values for a grid of {self.grid.size} nodes"
            )
        if np.isnan(v).any():
            raise ValueError("NaN is not a legal gridded value")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dom_mask(self) -> np.ndarray:
        """Nodes where the value is < +inf (the effective domain)."""
        return self.values < INF

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def is_proper(self) -> bool:
        return bool(self.dom_mask.any() and not (self.values == -INF).any())

    def value_at(self, flat: int) -> float:
        return float(self.values[flat])

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def with_values(self, values: np.ndarray, provenance: str | None = None) -> "GriddedFunction":
        return GriddedFunction(self.grid, values, provenance or self.provenance)


def ext_sum(f: GriddedFunction, g: GriddedFunction) -> GriddedFunction:
    """Pointwise lower-addition sum of two functions on one grid."""
    if f.grid != g.grid:
        raise GridMismatch("functions live on different grids")
    return GriddedFunction(f.grid, ext_add_arrays(f.values, g.values), provenance="sum")


# --- expressions on grids -----------------------------------------------------


def axis_names(prefix: str, dim: int) -> tuple[str, ...]:
    """Canonical variable names: x1..xd (or y1..yd)."""
    return tuple(f"{prefix}{k + 1}" for k in range(dim))


def name_environment(
    grid: Grid, names: Sequence[str], aliases: Mapping[str, str] | None = None
) -> dict[str, np.ndarray]:
    """Column arrays for each variable name (plus aliases) over all nodes."""
    if len(names) != grid.dim:
        raise DimensionMismatch(
            f"{len(names)} variable names for a {grid.dim}-dimensional grid"
        )
    cols = grid.nodes
    env = {name: cols[:, k] for k, name in enumerate(names)}
    for alias, target in (aliases or {}).items():
        env[alias] = env[target]
    return env


def default_names(grid: Grid, prefix: str = "x") -> tuple[tuple[str, ...], dict[str, str]]:
    names = axis_names(prefix, grid.dim)
    aliases = {prefix: names[0]} if grid.dim == 1 else {}
    return names, aliases


def product_names(m: int, n: int) -> tuple[tuple[str, ...], dict[str, str]]:
    """Variable names for a phi grid: x-axes then y-axes, 1-D aliases."""
    names = axis_names("x", m) + axis_names("y", n)
    aliases: dict[str, str] = {}
    if m == 1:
        aliases["x"] = "x1"
    if n == 1:
        aliases["y"] = "y1"
    return names, aliases


def eval_on_grid(
    text: str,
    grid: Grid,
    names: Sequence[str] | None = None,
    aliases: Mapping[str, str] | None = None,
    domain: Sequence[str] = (),
) -> GriddedFunction:
    """Evaluate expression text at every grid node.

    `domain` is an optional list of constraint expressions c(vars) <= 0
    (tolerance 1e-9); nodes violating any constraint are declared
    infeasible and map to +inf without the main expression being checked
    there.  A NaN/inf result on a feasible node raises NonFiniteExpression
    with the node coordinates.
    """
    if names is None:
        names, defaults = default_names(grid)
        aliases = {**defaults, **(aliases or {})}
    env = name_environment(grid, names, aliases)
    allowed = list(env)

    feasible = np.ones(grid.size, dtype=bool)
    for ctext in domain:
        cast = _expr.parse_and_check(ctext, allowed)
        cvals = np.broadcast_to(
            np.asarray(_expr.evaluate(cast, env), dtype=np.float64), (grid.size,)
        )
        with np.errstate(invalid="ignore"):
            feasible &= cvals <= NODE_TOL

    ast = _expr.parse_and_check(text, allowed)
    raw = np.broadcast_to(
        np.asarray(_expr.evaluate(ast, env), dtype=np.float64), (grid.size,)
    ).copy()
    bad = feasible & ~np.isfinite(raw)
    if bad.any():
        node = int(np.flatnonzero(bad)[0])
        raise NonFiniteExpression(
            f"{text!r} is not finite at node {grid.coords(node).tolist()}"
        )
    raw[~feasible] = INF
    prov = text if not domain else f"{text} where {' and '.join(d + ' <= 0' for d in domain)}"
    return GriddedFunction(grid, raw, provenance=prov)
