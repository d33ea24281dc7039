"""Incremental construction of the weighted Kripke structure.

States are sampled poses; a transition carries the cost vector of the
Dubins trajectory between its endpoints (per-class unsafety, then time)
together with the labeled trajectory itself.  Rule violations are costs,
never constraints, so every steerable connection is kept (RRG) or
considered for rewiring (RRT*).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import LabeledTrajectory, Trajectory, steer, timed_word, timed_words
from .geometry import point_in_polygon, normalize
from .unsafety import CostVector, PrioritizedSpec, cost_add, unsafety_vector
from .world import Pose, WorldModel

log = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-6
CHUNK = 32  # trajectories labeled together; fixed so results never depend on thread count


class Variant(str, Enum):
    RRG = "rrg"
    RRT_STAR = "rrt-star"
    K_NEAREST_RRG = "k-rrg"
    K_NEAREST_RRT_STAR = "k-rrt-star"


@dataclass(frozen=True)
class ConnectionStrategy:
    variant: Variant = Variant.RRT_STAR
    gamma: float = 40.0
    gamma_k: float = 3.0
    dimension: int = 3
    propagate: bool = True
    theta_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.gamma <= 0 or self.gamma_k <= 0:
            raise ValueError("gamma constants must be positive")
        if self.dimension < 3:
            raise ValueError("dimension must be at least the state dimension (3)")

    @property
    def tree(self) -> bool:
        return self.variant in (Variant.RRT_STAR, Variant.K_NEAREST_RRT_STAR)

    @property
    def k_nearest(self) -> bool:
        return self.variant in (Variant.K_NEAREST_RRG, Variant.K_NEAREST_RRT_STAR)

    def radius(self, m: int) -> float:
        if m <= 1:
            return 0.0
        return (self.gamma * math.log(m) / m) ** (1.0 / self.dimension)

    def k(self, m: int) -> int:
        if m <= 1:
            return max(m, 0)
        return min(m, math.ceil(self.gamma_k * math.log(m)) + 1)


@dataclass(frozen=True)
class Bounds:
    low: tuple
    high: tuple

    def __post_init__(self):
        if len(self.low) != 3 or len(self.high) != 3:
            raise ValueError("bounds are (x, y, theta) boxes")
        if any(h < l for l, h in zip(self.low, self.high)):
            raise ValueError(f"empty bounds {self.low} .. {self.high}")


class Sampler:
    """Uniform i.i.d. poses from a box, reproducible for a fixed seed."""

    def __init__(self, bounds: Bounds, seed: int = 0):
        self.bounds = bounds
        self.rng = np.random.default_rng(seed)

    def sample(self) -> Pose:
        x, y, th = self.rng.uniform(self.bounds.low, self.bounds.high)
        return Pose(float(x), float(y), float(th))


@dataclass(frozen=True)
class Goal:
    """Goal region: ``x >= x_min`` for the rear axle, or a polygon containing it."""

    x_min: Optional[float] = None
    polygon: Optional[tuple] = None

    def __post_init__(self):
        if (self.x_min is None) == (self.polygon is None):
            raise ValueError("a goal needs exactly one of x_min or polygon")
        if self.polygon is not None:
            object.__setattr__(self, "polygon", tuple(map(tuple, normalize(self.polygon))))

    def contains(self, pose) -> bool:
        if self.x_min is not None:
            return pose[0] >= self.x_min
        return point_in_polygon(pose[:2], np.asarray(self.polygon))


@dataclass
class Edge:
    weight: CostVector
    labeled: LabeledTrajectory


@dataclass
class EdgeCoster:
    """Computes transition costs ``(unsafety..., time)`` for pose pairs."""

    world: WorldModel
    spec: PrioritizedSpec
    turning_radius: float = 1.0
    step: float = 0.1
    refine_tol: float = 1e-4

    def __call__(self, a, b):
        return transition_cost(a, b, self.world, self.spec, self.turning_radius, self.step, self.refine_tol)

    def relabel(self, traj: Trajectory):
        return cost_of(traj, self.world, self.spec, self.step, self.refine_tol)

    def many(self, pairs) -> list:
        """``[self(a, b) for a, b in pairs]`` with shared labeling calls."""
        trajs = [steer(a, b, self.turning_radius) for a, b in pairs]
        return self.relabel_many(trajs)

    def relabel_many(self, trajs) -> list:
        words = timed_words(trajs, self.world, self.step, self.refine_tol)
        return [
            (unsafety_vector(w, self.spec) + (t.total_time,), LabeledTrajectory(t, w))
            for t, w in zip(trajs, words)
        ]


def cost_of(traj: Trajectory, world, spec, step=0.1, refine_tol=1e-4):
    word = timed_word(traj, world, step, refine_tol)
    return unsafety_vector(word, spec) + (traj.total_time,), LabeledTrajectory(traj, word)


def transition_cost(a, b, world: WorldModel, spec: PrioritizedSpec, turning_radius=1.0, step=0.1, refine_tol=1e-4):
    """Steer from ``a`` to ``b`` and cost the resulting trajectory.

    Returns ``(cost_vector, labeled_trajectory)``; the last component of the
    cost is the trajectory duration.
    """
    return cost_of(steer(a, b, turning_radius), world, spec, step, refine_tol)


class WeightedKripke:
    """Sampled states, weighted transitions and (tree modes) best-known costs."""

    def __init__(self, init: Pose, cost_length: int, tree: bool = False, theta_weight: float = 1.0):
        self.cost_length = cost_length
        self.tree = tree
        self.theta_weight = theta_weight
        self.states: list = []
        self._arr = np.empty((64, 3))
        self.succ: list = []
        self.pred: list = []
        self.goal_ids: set = set()
        self.J: list = []  # tuple, or None for "infinity"
        self.parent: list = []
        self.children: list = []
        self.max_propagation_depth = 0
        self.init = self.add(init)
        self.J[self.init] = (0.0,) * cost_length

    def __len__(self):
        return len(self.states)

    def add(self, pose) -> int:
        pose = Pose(float(pose[0]), float(pose[1]), float(pose[2]))
        i = len(self.states)
        if i == len(self._arr):
            self._arr = np.concatenate([self._arr, np.empty_like(self._arr)])
        self._arr[i] = pose
        self.states.append(pose)
        self.succ.append({})
        self.pred.append(set())
        self.J.append(None)
        self.parent.append(None)
        self.children.append(set())
        return i

    def distances(self, pose) -> np.ndarray:
        arr = self._arr[: len(self.states)]
        dth = (arr[:, 2] - pose[2] + math.pi) % (2 * math.pi) - math.pi
        return np.sqrt((arr[:, 0] - pose[0]) ** 2 + (arr[:, 1] - pose[1]) ** 2 + (self.theta_weight * dth) ** 2)

    def nearest(self, pose) -> tuple:
        d = self.distances(pose)
        i = int(np.argmin(d))
        return i, float(d[i])

    def edge(self, src: int, dst: int) -> Edge:
        return self.succ[src][dst]

    def has_edge(self, src: int, dst: int) -> bool:
        return dst in self.succ[src]

    def edges(self):
        for src in range(len(self.states)):
            for dst in sorted(self.succ[src]):
                yield src, dst, self.succ[src][dst]

    @property
    def num_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    def set_edge(self, src: int, dst: int, edge: Edge):
        self.succ[src][dst] = edge
        self.pred[dst].add(src)

    def remove_incoming(self, dst: int):
        for src in self.pred[dst]:
            del self.succ[src][dst]
            if self.parent[dst] == src:
                self.children[src].discard(dst)
        self.pred[dst].clear()
        self.parent[dst] = None

    def recompute_costs(self):
        """Tree modes: rebuild every ``J`` from the init state along parent links."""
        if not self.tree:
            return
        self.J = [None] * len(self.states)
        self.J[self.init] = (0.0,) * self.cost_length
        self._propagate(self.init)

    def _propagate(self, root: int) -> int:
        depth_of = {root: 0}
        stack = [root]
        deepest = 0
        while stack:
            s = stack.pop()
            for c in sorted(self.children[s]):
                self.J[c] = cost_add(self.J[s], self.succ[s][c].weight)
                depth_of[c] = depth_of[s] + 1
                deepest = max(deepest, depth_of[c])
                stack.append(c)
        return deepest

    def set_init(self, state: int):
        """Make ``state`` the initial state; tree modes cut its parent link and recompute costs."""
        self.init = state
        if self.tree:
            self.remove_incoming(state)
            self.recompute_costs()

    def root_path(self, state: int) -> list:
        path = [state]
        while path[-1] != self.init:
            p = self.parent[path[-1]]
            if p is None:
                return []
            path.append(p)
        return path[::-1]


# --------------------------------------------------------------------------
# primitives


def sample(sampler: Sampler) -> Pose:
    return sampler.sample()


def near(pose, K: WeightedKripke, strat: ConnectionStrategy) -> list:
    """Neighbour state ids, ascending."""
    m = len(K)
    d = K.distances(pose)
    if strat.k_nearest:
        k = strat.k(m)
        idx = np.lexsort((np.arange(m), d))[:k]
        return sorted(int(i) for i in idx)
    r = strat.radius(m)
    return [int(i) for i in np.flatnonzero(d <= r)]


def connect_rrg(K: WeightedKripke, src: int, dst: int, cost: CostVector, labeled: LabeledTrajectory) -> bool:
    """Add ``src -> dst`` with its weight; re-adding an existing edge is a no-op."""
    if K.has_edge(src, dst):
        return False
    K.set_edge(src, dst, Edge(cost, labeled))
    return True


def connect_rrt(
    K: WeightedKripke,
    src: int,
    dst: int,
    cost: CostVector,
    labeled: LabeledTrajectory,
    propagate: bool = True,
) -> bool:
    """Make ``src`` the parent of ``dst`` if that strictly lowers ``J(dst)``."""
    if K.J[src] is None:
        return False
    candidate = cost_add(K.J[src], cost)
    if K.J[dst] is not None and not candidate < K.J[dst]:
        return False
    K.remove_incoming(dst)
    K.set_edge(src, dst, Edge(cost, labeled))
    K.parent[dst] = src
    K.children[src].add(dst)
    K.J[dst] = candidate
    if propagate:
        K.max_propagation_depth = max(K.max_propagation_depth, K._propagate(dst))
    return True


def _could_improve(K: WeightedKripke, src: int, dst: int) -> bool:
    """Cheap necessary condition for :func:`connect_rrt` to accept ``src -> dst``."""
    js, jd = K.J[src], K.J[dst]
    if js is None:
        return False
    if jd is None:
        return True
    a, b = K.states[src], K.states[dst]
    chord = math.hypot(a.x - b.x, a.y - b.y) * (1.0 - 1e-9)
    return js[:-1] + (js[-1] + chord,) < jd


class _Batch:
    """Costs pose pairs in fixed-size chunks, optionally on a thread pool."""

    def __init__(self, coster: EdgeCoster, workers: int):
        self.coster = coster
        self.pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def __call__(self, pairs):
        chunks = [pairs[i : i + CHUNK] for i in range(0, len(pairs), CHUNK)]
        if self.pool is None or len(chunks) < 2:
            parts = map(self.coster.many, chunks)
        else:
            parts = self.pool.map(self.coster.many, chunks)
        return [r for part in parts for r in part]

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _connect_all(K, pairs_ids, batch, strat):
    """Cost the candidate connections, then apply them in the given (sorted) order."""
    if strat.tree:
        todo = [(s, d) for s, d in pairs_ids if _could_improve(K, s, d)]
    else:
        todo = [(s, d) for s, d in pairs_ids if not K.has_edge(s, d)]
    results = batch([(K.states[s], K.states[d]) for s, d in todo])
    for (s, d), (c, lt) in zip(todo, results):
        if strat.tree:
            connect_rrt(K, s, d, c, lt, strat.propagate)
        else:
            connect_rrg(K, s, d, c, lt)


def grow(
    K: WeightedKripke,
    coster: EdgeCoster,
    strat: ConnectionStrategy,
    sampler: Sampler,
    goal: Goal,
    n: int,
    workers: int = 1,
) -> set:
    """Add ``n`` samples to ``K``; returns the set of goal state ids.

    For every sample: connect each near neighbour to it, then it to each
    near neighbour, then record it as a goal state if it lies in the goal.
    Edge costs are computed in batches (optionally on ``workers`` threads)
    before being applied in ascending neighbour id order, so results do not
    depend on ``workers``.  Tree modes skip connections whose chord-length
    lower bound already rules out an improvement.
    """
    batch = _Batch(coster, workers)
    try:
        for _ in range(n):
            s_new = sampler.sample()
            if len(K):
                _, dmin = K.nearest(s_new)
                if dmin <= DUPLICATE_TOL:
                    continue
            neighbours = near(s_new, K, strat)
            new = K.add(s_new)
            _connect_all(K, [(s, new) for s in neighbours], batch, strat)
            _connect_all(K, [(new, s) for s in neighbours], batch, strat)
            if goal.contains(s_new):
                K.goal_ids.add(new)
    finally:
        batch.close()
    return K.goal_ids
