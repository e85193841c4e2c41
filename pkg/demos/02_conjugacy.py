"""Convex conjugates on finite grids: brute force, fast transform, duality.

The conjugate of a gridded extended-real function f is

    f*(s) = max over nodes x with f(x) < +inf of <s, x> - f(x),

evaluated on a separate dual grid.  The brute-force form is quadratic in
the node counts; the fast form runs the linear-time lower-hull transform
and must agree to machine precision.  Conjugating twice yields the
largest convex minorant representable on the grids.
"""

import numpy as np

from marginlab import (
    INF,
    Grid,
    GriddedFunction,
    biconjugate,
    conjugate,
    conjugate_fast,
    default_dual_grid,
    eval_on_grid,
    inf_convolution,
    render_value,
    support_function,
)


def main():
    grid = Grid.from_bounds([(-2.0, 2.0, 9)])

    # 1. f(x) = |x| with a +inf node: conjugates ignore +inf nodes, and
    # f* is the indicator-like max of <s,x> - f(x) over the finite ones.
    vals = np.abs(grid.nodes[:, 0])
    vals[0] = INF
    f = GriddedFunction(grid, vals)
    duals = default_dual_grid(f, 9)
    lo, hi = duals.axes[0].lo, duals.axes[0].hi
    print(f"f = |x| on [-2, 2] with f(-2) = +inf, duals on [{lo}, {hi}]")

    slow = conjugate(f, duals)
    fast = conjugate_fast(f, duals)
    dev = np.max(np.abs(slow.values - fast.values))
    print(f"  brute-force vs fast transform: max deviation {dev}")
    assert dev == 0.0

    print("\n  s      f*(s)")
    for s, v in zip(duals.nodes[:, 0], slow.values):
        print(f"  {s:+5.1f}  {render_value(v):>7}")

    # 2. Fenchel-Young holds pointwise: f(x) + f*(s) >= s x at every
    # node pair, with equality exactly when s supports f at x.
    pair = grid.nodes @ duals.nodes.T
    lhs = f.values[:, None] + slow.values[None, :]
    assert np.all(lhs[np.isfinite(lhs)] >= pair[np.isfinite(lhs)] - 1e-12)
    tight = int(np.sum(np.isfinite(lhs) & (np.abs(lhs - pair) <= 1e-12)))
    print(f"\nFenchel-Young: no violations, {tight} tight node pairs")

    # 3. The biconjugate is the largest grid-representable convex
    # minorant: it flattens the dent of a w-shaped function.
    w = GriddedFunction(grid, np.minimum((grid.nodes[:, 0] + 1) ** 2,
                                         (grid.nodes[:, 0] - 1) ** 2))
    w_cc = biconjugate(w, default_dual_grid(w, 17))
    print("\n  x      w(x)    (w*)*(x)")
    for x, a, b in zip(grid.nodes[:, 0], w.values, w_cc.values):
        print(f"  {x:+5.1f}  {a:6.2f}  {b:8.2f}")
    assert np.all(w_cc.values <= w.values + 1e-12)

    # 4. Conjugates swap addition and infimal convolution:
    # (g1 box g2)* = g1* + g2* on the dual grid.
    g1 = eval_on_grid("x^2", grid)
    g2 = eval_on_grid("abs(x)", grid)
    out = Grid.from_bounds([(-4.0, 4.0, 17)])
    box = inf_convolution(g1, g2, out)
    lhs2 = conjugate(box, duals).values
    rhs2 = conjugate(g1, duals).values + conjugate(g2, duals).values
    print(f"\n(x^2 box |x|)* vs x^2* + |x|*: max gap "
          f"{np.max(np.abs(lhs2 - rhs2)):.3g} (box sampled on a wider grid)")

    # 5. Support functions are conjugates of indicators: for the point
    # cloud {(-1, 0), (1, 0), (0, 2)} the support function is the max dot.
    pts = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    sduals = Grid.from_bounds([(-1.0, 1.0, 3), (-1.0, 1.0, 3)])
    sigma = support_function(pts, sduals)
    expect = (sduals.nodes @ pts.T).max(axis=1)
    assert np.array_equal(sigma.values, expect)
    print(f"support function of a 3-point cloud on a 3x3 dual grid: "
          f"{sigma.values.tolist()}")


if __name__ == "__main__":
    main()
