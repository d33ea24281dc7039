"""World model: named regions, the vehicle footprint and the labeling function."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import (
    ConvexRegionBatch,
    GeometryError,
    is_convex,
    normalize,
    polygon_contains,
    polygon_intersects,
)


def wrap_angle(theta: float) -> float:
    """Normalise an angle to ``(-pi, pi]``."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


class Pose(NamedTuple):
    x: float
    y: float
    theta: float

    @classmethod
    def make(cls, x, y, theta) -> "Pose":
        return cls(float(x), float(y), wrap_angle(float(theta)))


class Mode(str, Enum):
    CONTAINMENT = "containment"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class Vehicle:
    half_length: float = 2.4
    half_width: float = 0.9
    rear_axle_offset: float = 1.4  # geometric centre lies this far ahead of the rear axle

    def __post_init__(self):
        if self.half_length <= 0 or self.half_width <= 0:
            raise ValueError("vehicle dimensions must be positive")

    @property
    def bounding_radius(self) -> float:
        """Radius around the rear axle that encloses the whole footprint."""
        return math.hypot(abs(self.rear_axle_offset) + self.half_length, self.half_width)


@dataclass(frozen=True, eq=False)
class Region:
    name: str
    polygon: np.ndarray
    mode: Mode

    def __post_init__(self):
        object.__setattr__(self, "polygon", normalize(self.polygon))
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def convex(self) -> bool:
        return is_convex(self.polygon)

    def same_as(self, other: "Region") -> bool:
        return (
            self.name == other.name
            and self.mode == other.mode
            and self.polygon.shape == other.polygon.shape
            and bool(np.array_equal(self.polygon, other.polygon))
        )


def footprint(pose, vehicle: Vehicle) -> np.ndarray:
    """Oriented rectangle for a rear-axle pose, counter-clockwise from rear-right."""
    return footprints(np.asarray([pose], dtype=float), vehicle)[0]


def footprints(poses: np.ndarray, vehicle: Vehicle) -> np.ndarray:
    """Footprint corners for an ``(m, 3)`` pose array; returns ``(m, 4, 2)``."""
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
    hl, hw, off = vehicle.half_length, vehicle.half_width, vehicle.rear_axle_offset
    local = np.array([[off - hl, -hw], [off + hl, -hw], [off + hl, hw], [off - hl, hw]])
    xs = poses[:, None, 0] + c[:, None] * local[None, :, 0] - s[:, None] * local[None, :, 1]
    ys = poses[:, None, 1] + s[:, None] * local[None, :, 0] + c[:, None] * local[None, :, 1]
    return np.stack([xs, ys], axis=2)


@dataclass(eq=False)
class WorldModel:
    """Regions whose names form the proposition alphabet, plus the vehicle."""

    regions: Sequence[Region]
    vehicle: Vehicle = field(default_factory=Vehicle)

    def __post_init__(self):
        self.regions = tuple(self.regions)
        names = [r.name for r in self.regions]
        if len(set(names)) != len(names):
            raise GeometryError(f"duplicate region names: {names}")
        self.names = tuple(names)
        self._convex = [i for i, r in enumerate(self.regions) if r.convex]
        self._batch = ConvexRegionBatch(
            [self.regions[i].polygon for i in self._convex],
            [self.regions[i].mode is Mode.OVERLAP for i in self._convex],
        )
        self._bit_weights = np.asarray([1 << i for i in self._convex], dtype=np.int64)
        self._bits = {name: 1 << i for i, name in enumerate(self.names)}
        self._labels = {}

    @property
    def alphabet(self) -> frozenset:
        return frozenset(self.names)

    def label_masks(self, poses: np.ndarray) -> np.ndarray:
        """Bit-mask labels (bit ``i`` = region ``i``) for an ``(m, 3)`` pose array."""
        poses = np.asarray(poses, dtype=float).reshape(-1, 3)
        v = self.vehicle
        c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
        centres = np.empty((len(poses), 2))
        centres[:, 0] = poses[:, 0] + v.rear_axle_offset * c
        centres[:, 1] = poses[:, 1] + v.rear_axle_offset * s
        hits = self._batch.evaluate(centres, c, s, v.half_length, v.half_width)
        masks = (hits.astype(np.int64) * self._bit_weights).sum(axis=1)
        corners = None
        for i, region in enumerate(self.regions):
            if i in self._convex:
                continue
            if corners is None:
                corners = footprints(poses, v)
            if region.mode is Mode.OVERLAP:
                hit = np.array([polygon_intersects(fp, region.polygon) for fp in corners], dtype=bool)
            else:
                hit = np.array([polygon_contains(region.polygon, fp) for fp in corners], dtype=bool)
            masks |= hit.astype(np.int64) << i
        return masks

    def mask_to_label(self, mask: int) -> frozenset:
        mask = int(mask)
        label = self._labels.get(mask)
        if label is None:
            label = frozenset(n for i, n in enumerate(self.names) if mask >> i & 1)
            self._labels[mask] = label
        return label

    def label(self, pose) -> frozenset:
        return self.mask_to_label(self.label_masks(np.asarray([pose], dtype=float))[0])


def label(pose, world: WorldModel) -> frozenset:
    """Set of region names whose predicate holds for the vehicle at ``pose``."""
    return world.label(pose)
