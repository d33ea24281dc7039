import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minviol.geometry import (
    GeometryError,
    is_convex,
    is_simple,
    normalize,
    point_in_polygon,
    polygon_contains,
    polygon_intersects,
    segments_intersect,
    signed_area,
)
from minviol.world import Mode, Pose, Region, Vehicle, WorldModel, footprint, footprints, label, wrap_angle

SQUARE = [(0, 0), (2, 0), (2, 2), (0, 2)]
L_SHAPE = [(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)]


class TestPolygons:
    def test_normalize_ccw(self):
        cw = normalize(SQUARE[::-1])
        assert signed_area(cw) > 0

    def test_drops_closing_vertex(self):
        assert len(normalize(SQUARE + [SQUARE[0]])) == 4

    @pytest.mark.parametrize("bad", [[(0, 0), (1, 0)], [(0, 0), (1, 1), (2, 2)], [(0, 0), (2, 2), (2, 0), (0, 2)]])
    def test_degenerate(self, bad):
        with pytest.raises(GeometryError):
            normalize(bad)

    def test_convexity(self):
        assert is_convex(normalize(SQUARE))
        assert not is_convex(normalize(L_SHAPE))
        assert is_simple(normalize(L_SHAPE))

    def test_point_in_polygon_closed(self):
        sq = normalize(SQUARE)
        assert point_in_polygon((1, 1), sq)
        assert point_in_polygon((2, 1), sq)  # on the boundary
        assert not point_in_polygon((3, 1), sq)

    def test_segments(self):
        assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
        assert segments_intersect((0, 0), (1, 0), (1, 0), (2, 0))  # touching endpoints
        assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))

    def test_touching_polygons_intersect(self):
        other = [(2, 0), (3, 0), (3, 1), (2, 1)]
        assert polygon_intersects(SQUARE, other)
        assert not polygon_intersects(SQUARE, [(2.1, 0), (3, 0), (3, 1), (2.1, 1)])

    def test_nonconvex_contains(self):
        L = normalize(L_SHAPE)
        assert polygon_contains(L, [(0.1, 0.1), (3.9, 0.1), (3.9, 0.9), (0.1, 0.9)])
        # spans the notch: corners inside, body outside
        assert not polygon_contains(L, [(0.5, 0.5), (3, 0.5), (3, 3), (0.5, 3)])

    def test_nonconvex_intersects(self):
        L = normalize(L_SHAPE)
        assert not polygon_intersects(L, [(2, 2), (3, 2), (3, 3), (2, 3)])
        assert polygon_intersects(L, [(0.5, 2), (3, 2), (3, 3), (0.5, 3)])


class TestVehicle:
    def test_footprint_heading_zero(self):
        v = Vehicle(half_length=2.0, half_width=1.0, rear_axle_offset=1.0)
        fp = footprint((0.0, 0.0, 0.0), v)
        np.testing.assert_allclose(fp, [[-1, -1], [3, -1], [3, 1], [-1, 1]])

    def test_footprint_rotated(self):
        v = Vehicle(half_length=2.0, half_width=1.0, rear_axle_offset=1.0)
        fp = footprint((1.0, 1.0, math.pi / 2), v)
        np.testing.assert_allclose(fp, [[2, 0], [2, 4], [0, 4], [0, 0]], atol=1e-12)

    def test_bounding_radius(self):
        v = Vehicle()
        corners = footprints(np.array([[0.0, 0.0, 0.3]]), v)[0]
        assert np.linalg.norm(corners, axis=1).max() <= v.bounding_radius + 1e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            Vehicle(half_length=0.0)

    @given(st.floats(-20, 20))
    def test_wrap(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
        assert Pose.make(0, 0, a).theta == w


def _world():
    return WorldModel(
        [
            Region("road", [(-10, -3.5), (60, -3.5), (60, 3.5), (-10, 3.5)], Mode.CONTAINMENT),
            Region("lane", [(-10, -3.5), (60, -3.5), (60, 0), (-10, 0)], Mode.OVERLAP),
            Region("box", [(17, -2.5), (23, -2.5), (23, -1), (17, -1)], Mode.OVERLAP),
            Region("oct", [(14, -3), (16, -4.5), (24, -4.5), (26, -3), (26, 0.5), (24, 2), (16, 2), (14, 0.5)], Mode.OVERLAP),
            Region("ell", [(30, -3), (40, -3), (40, -2), (32, -2), (32, 3), (30, 3)], Mode.OVERLAP),
            Region("pocket", [(40, -3), (50, -3), (50, 3), (48, 3), (48, -1), (42, -1), (42, 3), (40, 3)], Mode.CONTAINMENT),
        ]
    )


def _reference(world, pose):
    fp = footprint(pose, world.vehicle)
    out = set()
    for r in world.regions:
        hit = polygon_intersects(fp, r.polygon) if r.mode is Mode.OVERLAP else polygon_contains(r.polygon, fp)
        if hit:
            out.add(r.name)
    return frozenset(out)


class TestLabeling:
    def test_examples(self):
        w = _world()
        assert label((0.0, 1.5, 0.0), w) == {"road"}
        assert label((0.0, -1.5, 0.0), w) == {"road", "lane"}
        assert label((18.0, -1.7, 0.0), w) == {"road", "lane", "box", "oct"}
        assert label((0.0, 3.0, 0.0), w) == {"lane"} - {"lane"}  # off the road, touches nothing

    def test_batch_matches_scalar_reference(self):
        w = _world()
        rng = np.random.default_rng(3)
        poses = np.column_stack([rng.uniform(-5, 55, 3000), rng.uniform(-5, 5, 3000), rng.uniform(-math.pi, math.pi, 3000)])
        masks = w.label_masks(poses)
        for pose, m in zip(poses, masks):
            assert w.mask_to_label(m) == _reference(w, pose)

    def test_boundary_touch_counts(self):
        # car front edge exactly on the box's left edge x = 17
        w = _world()
        v = w.vehicle
        x = 17.0 - v.rear_axle_offset - v.half_length
        assert "box" in label((x, -1.7, 0.0), w)
        assert "box" not in label((x - 1e-3, -1.7, 0.0), w)

    def test_duplicate_names(self):
        with pytest.raises(GeometryError):
            WorldModel([Region("a", SQUARE, "overlap"), Region("a", SQUARE, "overlap")])

    def test_alphabet(self):
        assert _world().alphabet == {"road", "lane", "box", "oct", "ell", "pocket"}

    @given(st.floats(-5, 55), st.floats(-5, 5), st.floats(-math.pi, math.pi))
    def test_single_matches_reference(self, x, y, th):
        w = _world()
        assert w.label((x, y, th)) == _reference(w, (x, y, th))
