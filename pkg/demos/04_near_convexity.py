"""Near convexity of node sets: closures, interiors, and preservation.

A set of grid nodes S is int-nearly-convex when the integer hull of S is
contained in the grid closure of S (one-cell dilation) and every hull
node interior to S's bounding structure actually belongs to S.  The
verdict comes with a witness node when it fails, and it is preserved by
intersections with convex rasters, by node-preserving linear images, and
by raster refinement.
"""

from pathlib import Path

import numpy as np

from marginlab import (
    Grid,
    RasterSet,
    closure,
    dump_raster,
    hull_raster,
    image_preservation_check,
    interior,
    intersection_preservation_check,
    is_int_nearly_convex,
    load_raster,
    projection_map,
    refine_raster,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def load(name):
    return load_raster((FIXTURES / f"{name}.raster").read_text())


def show(title, S):
    print(f"{title}:")
    for line in dump_raster(S).splitlines()[1:]:
        print(f"  {line}")


def main():
    # 1. Closure dilates by one cell, interior erodes to cell-deep nodes.
    g = Grid.from_bounds([(-1.0, 1.0, 5), (-1.0, 1.0, 5)])
    mask = np.zeros(g.shape, dtype=bool)
    mask[1:4, 1:4] = True
    S = RasterSet(g, mask)
    show("a 3x3 block", S)
    show("its closure", closure(S))
    show("its interior", interior(S))
    show("its integer hull", hull_raster(S))

    # 2. Three verdicts: a box with an open corner is still nearly
    # convex; two diagonal segments are not (their hull leaves the
    # closure); a box missing its center is not, and the missing center
    # is named as the witness.
    for name in ("open_box_corner", "two_segments", "punctured_box"):
        rep = is_int_nearly_convex(load(name))
        wit = "" if rep.witness is None else (
            f", witness {rep.witness} ({rep.witness_kind})")
        print(f"\n{name}: nearly convex = {rep.verdict}{wit}")

    # 3. Preservation: intersecting two nearly convex boxes stays nearly
    # convex, and so does the coordinate projection of one of them.
    left, right = load("box_left"), load("box_right")
    inter = intersection_preservation_check(left, right)
    print(f"\nintersection of overlapping boxes nearly convex: {inter.verdict}")
    img = image_preservation_check(left, projection_map(2, (0,)))
    print(f"projection to the x1 axis nearly convex: {img.verdict} "
          f"(image lives on {img.image_grid.shape})")

    # 4. Verdicts are stable under raster refinement: doubling the
    # resolution keeps members at their coordinates and changes nothing.
    for name in ("open_box_corner", "punctured_box"):
        coarse = is_int_nearly_convex(load(name)).verdict
        fine = is_int_nearly_convex(refine_raster(load(name), 2)).verdict
        print(f"refine x2 keeps {name} verdict: {coarse} -> {fine}")
        assert coarse == fine


if __name__ == "__main__":
    main()
