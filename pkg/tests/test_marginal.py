"""Marginal functions: oracle equality, exact identities, probes."""

import math

import numpy as np
import pytest

from marginlab import (
    ATTAINED,
    INFEASIBLE,
    UNBOUNDED,
    Grid,
    GridMismatch,
    GriddedFunction,
    NotFiniteAtPoint,
    SetValuedMap,
    convexity_check,
    domain_identity_check,
    epigraph_projection_check,
    eta_solutions,
    eval_on_grid,
    full_map,
    lipschitz_estimate_map,
    lipschitz_probe,
    map_from_constraints,
    marginal,
    semicontinuity_probe,
)

from helpers import load_fixture, oracle_marginal, random_problem

INF = math.inf


def phi_modulus(phi):
    """Max sum-norm difference quotient of phi over finite node pairs."""
    finite = np.flatnonzero(phi.finite_mask)
    X = phi.grid.nodes
    best = 0.0
    for a in range(finite.size - 1):
        i = finite[a]
        js = finite[a + 1 :]
        num = np.abs(phi.values[js] - phi.values[i])
        den = np.abs(X[js] - X[i]).sum(axis=1)
        best = max(best, float((num / den).max()))
    return best


class TestMarginalOracle:
    def test_matches_loop_oracle_on_100_instances(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            phi, F = random_problem(rng)
            res = marginal(phi, F)
            values, argmins, statuses = oracle_marginal(phi, F)
            np.testing.assert_array_equal(res.mu.values, values)
            assert res.argmin == tuple(argmins)
            assert res.status == tuple(statuses)

    def test_statuses(self):
        X = Grid.from_bounds([(0.0, 2.0, 3)])
        Y = Grid.from_bounds([(0.0, 1.0, 2)])
        graph = np.array([[True, True], [False, False], [True, True]])
        F = SetValuedMap(X, Y, graph)
        phi = GriddedFunction(
            Grid.from_bounds([(0.0, 2.0, 3), (0.0, 1.0, 2)]),
            [1.0, 2.0, 0.0, 0.0, -INF, 5.0],
        )
        res = marginal(phi, F)
        assert res.status == (ATTAINED, INFEASIBLE, UNBOUNDED)
        assert res.mu.values[0] == 1.0
        assert res.mu.values[1] == INF
        assert res.mu.values[2] == -INF
        assert res.argmin[0] == (0,)
        assert res.argmin[1] == ()

    def test_feasible_but_everywhere_infinite_counts_as_infeasible(self):
        X = Grid.from_bounds([(0.0, 1.0, 2)])
        Y = Grid.from_bounds([(0.0, 1.0, 2)])
        phi = GriddedFunction(
            Grid.from_bounds([(0.0, 1.0, 2), (0.0, 1.0, 2)]), [INF, INF, 0.0, 0.0]
        )
        res = marginal(phi, full_map(X, Y))
        assert res.status == (INFEASIBLE, ATTAINED)

    def test_grid_mismatch(self):
        X = Grid.from_bounds([(0.0, 1.0, 2)])
        Y = Grid.from_bounds([(0.0, 1.0, 2)])
        phi = GriddedFunction(Grid.from_bounds([(0.0, 1.0, 4)]), [0.0] * 4)
        with pytest.raises(GridMismatch):
            marginal(phi, full_map(X, Y))


class TestExactIdentities:
    def test_domain_identity_on_random_instances(self):
        rng = np.random.default_rng(31)
        for _ in range(60):
            phi, F = random_problem(rng)
            ok, witness = domain_identity_check(phi, F)
            assert ok and witness is None

    def test_epigraph_projection_on_random_instances(self):
        rng = np.random.default_rng(37)
        levels = [-2.0, -0.5, 0.0, 0.5, 2.0, 100.0]
        for _ in range(60):
            phi, F = random_problem(rng)
            rep = epigraph_projection_check(phi, F, levels)
            assert rep.ok, rep.violations
            assert rep.checked == len(levels) * F.xgrid.size


class TestEtaSolutions:
    def test_strict_threshold(self):
        spec = load_fixture("quadratic_halfline")
        phi, F = spec.build()
        ys = eta_solutions(phi, F, [0.0], 0.0626)
        got = {tuple(F.ygrid.coords(int(j))) for j in ys}
        assert got == {(0.0,), (0.25,)}
        assert eta_solutions(phi, F, [0.0], 0.0625).size == 1

    def test_infeasible_x_raises(self):
        X = Grid.from_bounds([(0.0, 1.0, 2)])
        Y = Grid.from_bounds([(0.0, 1.0, 2)])
        phi = GriddedFunction(
            Grid.from_bounds([(0.0, 1.0, 2), (0.0, 1.0, 2)]), [INF, INF, 0.0, 0.0]
        )
        with pytest.raises(NotFiniteAtPoint):
            eta_solutions(phi, full_map(X, Y), [0.0], 1.0)


class TestConvexityCheck:
    def test_convex_data_passes(self):
        g = Grid.from_bounds([(-1.0, 1.0, 9)])
        f = eval_on_grid("x^2", g)
        ok, witness = convexity_check(f)
        assert ok and witness is None

    def test_midpoint_violation_is_witnessed(self):
        g = Grid.from_bounds([(-1.0, 1.0, 3)])
        f = GriddedFunction(g, [0.0, 1.0, 0.0])
        ok, witness = convexity_check(f)
        assert not ok
        assert witness == (0, 2, 1)

    def test_plus_inf_endpoints_never_bind(self):
        g = Grid.from_bounds([(-1.0, 1.0, 3)])
        f = GriddedFunction(g, [INF, 100.0, INF])
        ok, _ = convexity_check(f)
        assert ok


class TestSemicontinuityProbe:
    def test_jump_is_lsc_but_not_usc(self):
        spec = load_fixture("f_not_lsc")
        rep = semicontinuity_probe(spec, [0.0], levels=3)
        assert rep.mu_at_x0 == -1.0
        assert len(rep.levels) == 3
        assert rep.lsc_consistent
        assert not rep.usc_consistent

    def test_continuous_instance_is_consistent_both_ways(self):
        spec = load_fixture("quadratic_halfline")
        rep = semicontinuity_probe(spec, [0.0], levels=3)
        assert rep.lsc_consistent and rep.usc_consistent

    def test_refinement_shrinks_cells(self):
        spec = load_fixture("quadratic_halfline")
        rep = semicontinuity_probe(spec, [0.0], levels=3)
        cells = [lv.cell for lv in rep.levels]
        assert cells[0] > cells[1] > cells[2]


class TestLipschitzBound:
    @pytest.mark.parametrize("name", ["abs_diff_window", "quadratic_halfline"])
    def test_estimate_below_product_bound(self, name):
        spec = load_fixture(name)
        phi, F = spec.build()
        mu = marginal(phi, F).mu
        ell_phi = phi_modulus(phi)
        ell_map = lipschitz_estimate_map(F)
        rep = lipschitz_probe(mu, ell_phi, ell_map)
        assert rep.ok
        assert rep.l_hat <= rep.bound + 1e-9
        assert rep.bound == ell_map * ell_phi + ell_phi
        assert rep.witness is not None

    def test_exact_quotient_on_known_instance(self):
        spec = load_fixture("abs_diff_window")
        phi, F = spec.build()
        mu = marginal(phi, F).mu
        rep = lipschitz_probe(mu, 1.0, 0.0)
        assert rep.l_hat == pytest.approx(1.0)
        assert rep.bound == 1.0

    def test_violation_is_reported(self):
        g = Grid.from_bounds([(0.0, 1.0, 3)])
        f = GriddedFunction(g, [0.0, 5.0, 10.0])
        rep = lipschitz_probe(f, 1.0, 1.0)
        assert not rep.ok
        assert rep.l_hat == pytest.approx(10.0)
