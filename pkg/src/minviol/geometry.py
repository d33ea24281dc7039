"""Closed-set polygon predicates.

Polygons are ``(n, 2)`` float arrays of vertices.  Boundaries belong to the
sets, so touching polygons intersect and a polygon touching the inside of
another's boundary is still contained.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-12


class GeometryError(ValueError):
    """Degenerate or malformed polygon."""


def as_polygon(vertices) -> np.ndarray:
    poly = np.asarray(vertices, dtype=float)
    if poly.ndim == 2 and len(poly) > 3 and np.array_equal(poly[0], poly[-1]):
        poly = poly[:-1]  # explicitly closed ring
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise GeometryError(f"a polygon needs at least 3 (x, y) vertices, got shape {poly.shape}")
    return poly


def signed_area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def normalize(vertices) -> np.ndarray:
    """Validate a simple polygon and return it in counter-clockwise order."""
    poly = as_polygon(vertices)
    area = signed_area(poly)
    if abs(area) <= EPS:
        raise GeometryError("zero-area polygon")
    if not is_simple(poly):
        raise GeometryError("self-intersecting polygon")
    return poly if area > 0 else poly[::-1].copy()


def is_convex(poly) -> bool:
    d1 = np.roll(poly, -1, axis=0) - poly
    d2 = np.roll(d1, -1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return bool(np.all(cross >= -EPS) or np.all(cross <= EPS))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p) -> bool:
    return (
        min(a[0], b[0]) - EPS <= p[0] <= max(a[0], b[0]) + EPS
        and min(a[1], b[1]) - EPS <= p[1] <= max(a[1], b[1]) + EPS
    )


def segments_intersect(a, b, c, d) -> bool:
    """Closed segment intersection test for ``ab`` and ``cd``."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > EPS and o2 < -EPS) or (o1 < -EPS and o2 > EPS)) and (
        (o3 > EPS and o4 < -EPS) or (o3 < -EPS and o4 > EPS)
    ):
        return True
    if abs(o1) <= EPS and _on_segment(a, b, c):
        return True
    if abs(o2) <= EPS and _on_segment(a, b, d):
        return True
    if abs(o3) <= EPS and _on_segment(c, d, a):
        return True
    if abs(o4) <= EPS and _on_segment(c, d, b):
        return True
    return False


def _proper_cross(a, b, c, d) -> bool:
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    return o1 * o2 < -EPS and o3 * o4 < -EPS


def is_simple(poly) -> bool:
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if segments_intersect(a, b, poly[j], poly[(j + 1) % n]):
                return False
    return True


def point_in_polygon(point, poly) -> bool:
    """Closed point-in-polygon test (boundary counts as inside)."""
    x, y = float(point[0]), float(point[1])
    n = len(poly)
    inside = False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if abs(_orient(a, b, (x, y))) <= EPS and _on_segment(a, b, (x, y)):
            return True
        if (a[1] > y) != (b[1] > y):
            xcross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x < xcross:
                inside = not inside
    return inside


def _axes(poly) -> np.ndarray:
    edges = np.roll(poly, -1, axis=0) - poly
    return np.stack([-edges[:, 1], edges[:, 0]], axis=1)


def _sat_intersects(a, b) -> bool:
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa, pb = a @ axis, b @ axis
        if pa.max() < pb.min() - EPS or pb.max() < pa.min() - EPS:
            return False
    return True


def _check(poly):
    poly = as_polygon(poly)
    if abs(signed_area(poly)) <= EPS:
        raise GeometryError("zero-area polygon")
    return poly


def polygon_intersects(a, b) -> bool:
    """Whether the closed polygons ``a`` and ``b`` share at least one point."""
    a, b = _check(a), _check(b)
    if is_convex(a) and is_convex(b):
        return _sat_intersects(a, b)
    na, nb = len(a), len(b)
    for i in range(na):
        for j in range(nb):
            if segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]):
                return True
    return point_in_polygon(a[0], b) or point_in_polygon(b[0], a)


def polygon_contains(outer, inner) -> bool:
    """Whether closed polygon ``inner`` lies within closed polygon ``outer``."""
    outer, inner = _check(outer), _check(inner)
    if not all(point_in_polygon(p, outer) for p in inner):
        return False
    if is_convex(outer):
        return True
    no, ni = len(outer), len(inner)
    for i in range(no):
        for j in range(ni):
            if _proper_cross(outer[i], outer[(i + 1) % no], inner[j], inner[(j + 1) % ni]):
                return False
    # a reflex vertex of the outer boundary poking into the inner polygon
    for p in outer:
        if point_in_polygon(p, inner) and not _on_boundary(p, inner):
            return False
    # edge midpoints of inner must lie in outer as well
    mids = 0.5 * (inner + np.roll(inner, -1, axis=0))
    return all(point_in_polygon(m, outer) for m in mids)


def _on_boundary(p, poly) -> bool:
    n = len(poly)
    return any(
        abs(_orient(poly[i], poly[(i + 1) % n], p)) <= EPS and _on_segment(poly[i], poly[(i + 1) % n], p)
        for i in range(n)
    )


# --------------------------------------------------------------------------
# batched tests of many oriented rectangles against several convex polygons


class ConvexRegionBatch:
    """Vectorised closed-set tests of oriented rectangles against convex polygons.

    Each polygon comes with a flag: ``True`` asks whether the rectangle
    overlaps it, ``False`` whether the polygon contains the rectangle.
    Rectangles are given by centres ``(m, 2)``, heading cosines and sines
    ``(m,)`` and half extents along and across the heading.
    """

    def __init__(self, polys, overlap):
        polys = [np.asarray(p, dtype=float) for p in polys]
        self.overlap = np.asarray(overlap, dtype=bool)
        axes, lo, hi, offsets, starts = [], [], [], [], []
        for poly in polys:
            a = _axes(poly)
            if signed_area(poly) < 0:
                a = -a  # keep normals pointing inward
            a = a / np.linalg.norm(a, axis=1, keepdims=True)
            proj = poly @ a.T
            starts.append(sum(len(x) for x in axes))
            axes.append(a)
            lo.append(proj.min(axis=0))
            hi.append(proj.max(axis=0))
            offsets.append(np.einsum("ij,ij->i", a, poly))
        self.n = len(polys)
        if not self.n:
            return
        self.axes = np.concatenate(axes)
        # axes shared between polygons (up to sign) are projected once
        unique, self.axis_dir, self.axis_sign = {}, [], []
        for ax_, ay_ in self.axes.tolist():
            key, sign = ((ax_, ay_), 1.0) if (ax_, ay_) > (-ax_, -ay_) else ((-ax_, -ay_), -1.0)
            self.axis_dir.append(unique.setdefault(key, len(unique)))
            self.axis_sign.append(sign)
        self.dirs = np.array(list(unique), dtype=float)
        self.axis_dir = np.asarray(self.axis_dir)
        self.axis_sign = np.asarray(self.axis_sign)
        self.lo, self.hi = np.concatenate(lo), np.concatenate(hi)
        self.offsets = np.concatenate(offsets)
        self.starts = np.asarray(starts)
        self.axis_overlap = np.repeat(self.overlap, [len(a) for a in axes])
        ov = [p for p, o in zip(polys, self.overlap) if o]
        self.has_overlap = bool(ov)
        if ov:
            self.verts = np.concatenate(ov)
            self.vert_starts = np.cumsum([0] + [len(p) for p in ov[:-1]])

    def evaluate(self, centres, c, s, hl, hw) -> np.ndarray:
        """Boolean ``(m, n)`` answers, one column per polygon."""
        m = len(centres)
        if not self.n:
            return np.zeros((m, 0), dtype=bool)
        # elementwise only (no BLAS), so a pose's answer never depends on the batch it is in
        ux, uy = self.dirs[:, 0], self.dirs[:, 1]
        cx, cy = centres[:, 0:1], centres[:, 1:2]
        cc, ss = c[:, None], s[:, None]
        mid = (cx * ux + cy * uy)[:, self.axis_dir] * self.axis_sign  # (m, na)
        ext = (hl * np.abs(cc * ux + ss * uy) + hw * np.abs(cc * uy - ss * ux))[:, self.axis_dir]
        # per axis: True when this axis rules the answer out
        fail = np.where(
            self.axis_overlap,
            (mid + ext < self.lo - EPS) | (mid - ext > self.hi + EPS),
            mid - ext < self.offsets - EPS,
        )
        out = ~np.logical_or.reduceat(fail, self.starts, axis=1)
        if self.has_overlap:
            cols = np.flatnonzero(self.overlap)
            px, py = self.verts[:, 0:1], self.verts[:, 1:2]
            sep = np.zeros((len(cols), m), dtype=bool)
            for ux, uy, half in ((c, s, hl), (-s, c, hw)):
                pp = px * ux + py * uy  # (nv, m)
                cu = centres[:, 0] * ux + centres[:, 1] * uy
                sep |= np.maximum.reduceat(pp, self.vert_starts, axis=0) < cu - half - EPS
                sep |= np.minimum.reduceat(pp, self.vert_starts, axis=0) > cu + half + EPS
            out[:, cols] &= ~sep.T
        return out
