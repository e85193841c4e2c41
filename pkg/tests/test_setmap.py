"""Set-valued maps on grids: constructors, graph support function, moduli."""

import math

import numpy as np
import pytest

from marginlab import (
    DimensionMismatch,
    Grid,
    NotANode,
    SetValuedMap,
    full_map,
    lipschitz_estimate_map,
    map_conjugate,
    map_conjugate_at,
    map_from_constraints,
    map_from_inequalities,
    map_from_points,
    product_grid,
    support_function,
)

INF = math.inf

X = Grid.from_bounds([(-1.0, 1.0, 5)])
Y = Grid.from_bounds([(0.0, 2.0, 5)])


class TestConstructors:
    def test_full_map(self):
        F = full_map(X, Y)
        assert F.graph.all()
        assert F.dom_mask.all()
        assert F.is_proper

    def test_graph_shape_enforced(self):
        with pytest.raises(DimensionMismatch):
            SetValuedMap(X, Y, np.ones((3, 3), dtype=bool))

    def test_inequalities_match_direct_predicate(self):
        F = map_from_inequalities(["1 - y"], X, Y)
        for xi in range(X.size):
            for yi in range(Y.size):
                want = 1.0 - Y.coords(yi)[0] <= X.coords(xi)[0] + 1e-9
                assert F.contains(xi, yi) == want

    def test_inequalities_count_must_match_x_dim(self):
        with pytest.raises(DimensionMismatch):
            map_from_inequalities(["1 - y", "y - 1"], X, Y)

    def test_constraints_joint_predicate(self):
        F = map_from_constraints(["x - y"], X, Y)
        for xi in range(X.size):
            for yi in range(Y.size):
                want = X.coords(xi)[0] - Y.coords(yi)[0] <= 1e-9
                assert F.contains(xi, yi) == want

    def test_points_land_on_nodes(self):
        F = map_from_points([[0.0, 1.0], [0.5, 0.5]], X, Y)
        assert F.graph.sum() == 2
        assert F.contains(X.index_of([0.0]), Y.index_of([1.0]))
        with pytest.raises(NotANode):
            map_from_points([[0.3, 1.0]], X, Y)
        with pytest.raises(DimensionMismatch):
            map_from_points([[0.0, 1.0, 2.0]], X, Y)

    def test_values_at(self):
        F = map_from_points([[0.0, 1.0], [0.0, 2.0]], X, Y)
        np.testing.assert_array_equal(
            F.values_at(X.index_of([0.0])), [Y.index_of([1.0]), Y.index_of([2.0])]
        )
        assert F.values_at(0).size == 0
        np.testing.assert_array_equal(F.dom_mask, [False, False, True, False, False])


class TestGraphSupport:
    def test_matches_support_function_of_graph_points(self):
        F = map_from_constraints(["abs(x) - y"], X, Y)
        xd = Grid.from_bounds([(-2.0, 2.0, 5)])
        yd = Grid.from_bounds([(-2.0, 2.0, 5)])
        got = map_conjugate(F, xd, yd)
        want = support_function(F.graph_points, product_grid(xd, yd))
        np.testing.assert_array_equal(got.values, want.values)

    def test_empty_graph_gives_minus_inf(self):
        F = SetValuedMap(X, Y, np.zeros((X.size, Y.size), dtype=bool))
        vals = map_conjugate_at(F, np.array([[0.0, 0.0], [1.0, -1.0]]))
        assert (vals == -INF).all()

    def test_dual_point_arity(self):
        F = full_map(X, Y)
        with pytest.raises(DimensionMismatch):
            map_conjugate_at(F, np.array([[0.0]]))


class TestLipschitzEstimate:
    def test_translation_map_has_unit_modulus(self):
        g = Grid.from_bounds([(0.0, 1.0, 5)])
        graph = g.nodes[:, None, 0] <= g.nodes[None, :, 0] + 1e-9
        F = SetValuedMap(g, g, graph)  # F(x) = {y >= x}
        assert lipschitz_estimate_map(F) == pytest.approx(1.0)

    def test_constant_map_has_zero_modulus(self):
        F = full_map(X, Y)
        assert lipschitz_estimate_map(F) == 0.0

    def test_partial_domain_is_infinite(self):
        F = map_from_points([[0.0, 1.0]], X, Y)
        assert lipschitz_estimate_map(F) == INF
