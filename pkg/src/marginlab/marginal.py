"""Optimal value (marginal) functions mu(x) = inf {phi(x,y) : y in F(x)}.

Infima are exact minima over the finite y-grid, so mu(x) is +inf exactly
when F(x) meets no finite phi(x, .) node, -inf exactly when some feasible
phi value is -inf, and attained otherwise.  Alongside the construction the
module carries the structural checks that relate mu to phi and F: domain
identity, strict-epigraph projection, midpoint convexity, semicontinuity
probes under refinement, and the global Lipschitz bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import INF, Grid, GriddedFunction, product_grid
from .errors import GridMismatch, NotFiniteAtPoint
from .setmap import SetValuedMap

ATTAINED = "attained"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class MarginalResult:
    """mu on the x-grid plus per-node minimizer lists and status labels."""

    mu: GriddedFunction
    argmin: tuple[tuple[int, ...], ...]
    status: tuple[str, ...]


def _resolve_x(grid: Grid, x) -> int:
    if isinstance(x, (int, np.integer)):
        i = int(x)
        if i < 0 or i >= grid.size:
            raise IndexError(f"x node index {i} out of range")
        return i
    return grid.index_of(x)


def _check_product(phi: GriddedFunction, F: SetValuedMap) -> None:
    if phi.grid != product_grid(F.xgrid, F.ygrid):
        raise GridMismatch("phi must live on the product of F's x and y grids")


def marginal(phi: GriddedFunction, F: SetValuedMap) -> MarginalResult:
    """Minimize phi(x, .) over F(x) at every x node."""
    _check_product(phi, F)
    V = phi.values.reshape(F.xgrid.size, F.ygrid.size)
    masked = np.where(F.graph, V, INF)
    mu = masked.min(axis=1)
    argmin = []
    status = []
    for i in range(F.xgrid.size):
        v = mu[i]
        if v == INF:
            argmin.append(())
            status.append(INFEASIBLE)
        elif v == -INF:
            argmin.append(())
            status.append(UNBOUNDED)
        else:
            argmin.append(tuple(int(j) for j in np.flatnonzero(masked[i] == v)))
            status.append(ATTAINED)
    return MarginalResult(
        GriddedFunction(F.xgrid, mu, provenance="marginal"),
        tuple(argmin),
        tuple(status),
    )


def eta_solutions(
    phi: GriddedFunction, F: SetValuedMap, x, eta: float
) -> np.ndarray:
    """Near-optimal set S_eta(x) = {y in F(x) : phi(x,y) < mu(x) + eta}.

    The inequality is strict; x must have finite mu.  Nonempty for every
    eta > 0 because the minimum is attained on the grid.
    """
    _check_product(phi, F)
    xi = _resolve_x(F.xgrid, x)
    V = phi.values.reshape(F.xgrid.size, F.ygrid.size)
    masked = np.where(F.graph[xi], V[xi], INF)
    mu_x = masked.min()
    if not np.isfinite(mu_x):
        raise NotFiniteAtPoint(f"mu is not finite at x node {xi}")
    return np.flatnonzero(masked < mu_x + eta)


def domain_identity_check(
    phi: GriddedFunction, F: SetValuedMap
) -> tuple[bool, int | None]:
    """dom mu == projection of (dom phi intersect gph F) onto x, exactly.

    Returns (ok, witness flat x index of the first discrepancy).
    """
    _check_product(phi, F)
    mu = marginal(phi, F).mu
    lhs = mu.dom_mask
    finite_phi = (phi.values < INF).reshape(F.xgrid.size, F.ygrid.size)
    rhs = (finite_phi & F.graph).any(axis=1)
    if bool((lhs == rhs).all()):
        return True, None
    return False, int(np.flatnonzero(lhs != rhs)[0])


@dataclass(frozen=True)
class EpigraphReport:
    ok: bool
    checked: int
    violations: tuple[tuple[float, int, str], ...]  # (lambda, x index, kind)


def epigraph_projection_check(
    phi: GriddedFunction, F: SetValuedMap, lambdas: Sequence[float]
) -> EpigraphReport:
    """Strict-epigraph identity and epigraph chain at sampled levels.

    For each level lam and x node: mu(x) < lam iff some y in F(x) has
    phi(x,y) < lam (exact); and the non-strict chain
    (exists y in F(x): phi <= lam)  implies  mu(x) <= lam, while
    mu(x) < lam implies the former.
    """
    _check_product(phi, F)
    V = phi.values.reshape(F.xgrid.size, F.ygrid.size)
    mu = np.where(F.graph, V, INF).min(axis=1)
    violations: list[tuple[float, int, str]] = []
    checked = 0
    for lam in lambdas:
        strict_proj = (F.graph & (V < lam)).any(axis=1)
        loose_proj = (F.graph & (V <= lam)).any(axis=1)
        strict_epi = mu < lam
        loose_epi = mu <= lam
        checked += strict_epi.shape[0]
        for i in np.flatnonzero(strict_epi != strict_proj):
            violations.append((float(lam), int(i), "strict-identity"))
        for i in np.flatnonzero(strict_epi & ~loose_proj):
            violations.append((float(lam), int(i), "chain-lower"))
        for i in np.flatnonzero(loose_proj & ~loose_epi):
            violations.append((float(lam), int(i), "chain-upper"))
    return EpigraphReport(not violations, checked, tuple(violations))


def convexity_check(
    f: GriddedFunction, tol: float = 1e-9
) -> tuple[bool, tuple[int, int, int] | None]:
    """Midpoint convexity over every node pair whose midpoint is a node.

    f(mid) <= (f(x) + f(u)) / 2 under the lower-addition conventions;
    returns (ok, witness (i, j, mid) flat indices).
    """
    shape = np.array(f.grid.shape)
    n = f.grid.size
    M = np.stack(
        np.meshgrid(*(np.arange(c) for c in shape), indexing="ij"), axis=-1
    ).reshape(n, f.grid.dim)
    v = f.values
    for i in range(n):
        both = (M[i] + M) % 2 == 0
        cand = np.flatnonzero(both.all(axis=1))
        cand = cand[cand > i]
        if cand.size == 0:
            continue
        mids = (M[i] + M[cand]) // 2
        mid_flat = np.ravel_multi_index(mids.T, tuple(shape))
        a, b = v[i], v[cand]
        with np.errstate(invalid="ignore"):
            rhs = 0.5 * a + 0.5 * b
        pos = (a == INF) | (b == INF)
        neg = ((a == -INF) | (b == -INF)) & ~pos
        rhs = np.where(pos, INF, rhs)
        rhs = np.where(neg, -INF, rhs)
        bad = ~(v[mid_flat] <= rhs + tol)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            return False, (i, int(cand[k]), int(mid_flat[k]))
    return True, None


class RebuildableProblem(Protocol):
    """Anything that can re-instantiate (phi, F) at a refinement factor."""

    def build(self, factor: int) -> tuple[GriddedFunction, SetValuedMap]: ...


@dataclass(frozen=True)
class ProbeLevel:
    factor: int
    cell: float
    nbhd_min: float
    nbhd_max: float


@dataclass(frozen=True)
class SemicontinuityReport:
    mu_at_x0: float
    levels: tuple[ProbeLevel, ...]
    lsc_consistent: bool
    usc_consistent: bool


def _gaps_consistent(gaps: Sequence[float], tol: float = 1e-6) -> bool:
    monotone = all(g2 <= g1 + tol for g1, g2 in zip(gaps, gaps[1:]))
    settled = gaps[-1] <= tol or gaps[-1] <= 0.5 * gaps[0] + tol
    return monotone and settled


def semicontinuity_probe(
    problem: RebuildableProblem, x0: Sequence[float], levels: int = 3
) -> SemicontinuityReport:
    """Neighborhood min/max of mu around x0 across dyadic refinements.

    At level k the problem is rebuilt at factor 2**k and mu is scanned over
    the one-cell node neighborhood of x0 (which persists on refined grids).
    With gap_min = mu(x0) - min and gap_max = max - mu(x0), a side is
    consistent when its gaps shrink monotonically (1e-6 slack) and either
    end below 1e-6 or at most half the initial gap.
    """
    stats: list[ProbeLevel] = []
    mu_x0 = None
    for k in range(levels):
        factor = 2**k
        phi, F = problem.build(factor)
        res = marginal(phi, F)
        xi = F.xgrid.index_of(x0)
        if k == 0:
            mu_x0 = res.mu.value_at(xi)
            if not np.isfinite(mu_x0):
                raise NotFiniteAtPoint(f"mu is not finite at x0 = {list(x0)}")
        multi = np.array(F.xgrid.multi(xi))
        offsets = np.stack(
            np.meshgrid(*([np.array([-1, 0, 1])] * F.xgrid.dim), indexing="ij"),
            axis=-1,
        ).reshape(-1, F.xgrid.dim)
        nbrs = multi + offsets
        inside = ((nbrs >= 0) & (nbrs < np.array(F.xgrid.shape))).all(axis=1)
        flat = np.ravel_multi_index(nbrs[inside].T, F.xgrid.shape)
        vals = res.mu.values[flat]
        stats.append(
            ProbeLevel(
                factor,
                max(a.step for a in F.xgrid.axes),
                float(vals.min()),
                float(vals.max()),
            )
        )
    assert mu_x0 is not None
    gaps_min = [mu_x0 - s.nbhd_min for s in stats]
    gaps_max = [s.nbhd_max - mu_x0 for s in stats]
    return SemicontinuityReport(
        mu_x0,
        tuple(stats),
        _gaps_consistent(gaps_min),
        _gaps_consistent(gaps_max),
    )


@dataclass(frozen=True)
class LipschitzReport:
    l_hat: float
    bound: float
    ok: bool
    witness: tuple[int, int] | None = None


def lipschitz_probe(
    mu: GriddedFunction, ell_phi: float, ell_F: float
) -> LipschitzReport:
    """Check the global estimate L_hat <= ell_F * ell_phi + ell_phi.

    L_hat is the max sum-norm difference quotient of mu over finite node
    pairs; the bound is the product/sum of the supplied moduli of phi and
    F.  Tolerance 1e-9.
    """
    finite = np.flatnonzero(mu.finite_mask)
    X = mu.grid.nodes
    l_hat = 0.0
    witness = None
    for a in range(finite.size):
        i = finite[a]
        js = finite[a + 1 :]
        if js.size == 0:
            continue
        num = np.abs(mu.values[js] - mu.values[i])
        den = np.abs(X[js] - X[i]).sum(axis=1)
        q = num / den
        k = int(q.argmax())
        if q[k] > l_hat:
            l_hat = float(q[k])
            witness = (int(i), int(js[k]))
    bound = ell_F * ell_phi + ell_phi
    return LipschitzReport(l_hat, bound, l_hat <= bound + 1e-9, witness)
