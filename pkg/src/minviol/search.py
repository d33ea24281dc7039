"""Optimal trace extraction and the replanning loop."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import polyline
from .kripke import (
    ConnectionStrategy,
    EdgeCoster,
    Goal,
    Sampler,
    WeightedKripke,
    connect_rrg,
    connect_rrt,
    grow,
    near,
)
from .unsafety import CostVector, PrioritizedSpec, cost_add
from .world import Pose, WorldModel

log = logging.getLogger(__name__)


@dataclass
class Trace:
    states: list
    weight: CostVector
    edge_weights: list
    geometry: np.ndarray = field(repr=False)

    def recomputed_weight(self) -> CostVector:
        total = (0.0,) * len(self.weight)
        for w in self.edge_weights:
            total = cost_add(total, w)
        return total

    def to_text(self, poses: list) -> str:
        """Plain-text serialisation: states, per-edge weights, total, polyline."""
        lines = [f"# total {_fmt(self.weight)}", "# states"]
        for s in self.states:
            x, y, th = poses[s]
            lines.append(f"state {s} {x!r} {y!r} {th!r}")
        lines.append("# edges")
        for a, b, w in zip(self.states, self.states[1:], self.edge_weights):
            lines.append(f"edge {a} {b} {_fmt(w)}")
        lines.append("# polyline")
        for x, y, th in self.geometry:
            lines.append(f"point {float(x)!r} {float(y)!r} {float(th)!r}")
        return "\n".join(lines) + "\n"


def _fmt(vec) -> str:
    return " ".join(repr(float(v)) for v in vec)


def shortest_costs(K: WeightedKripke, stop_at_goal: bool = True):
    """Lexicographic Dijkstra from ``K.init``; returns ``(dist, pred, best_goal)``."""
    zero = (0.0,) * K.cost_length
    dist = {K.init: zero}
    pred = {}
    done = set()
    heap = [(zero, K.init)]
    best_goal = None
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in K.goal_ids and best_goal is None:
            best_goal = u
            if stop_at_goal:
                break
        for v, edge in K.succ[u].items():
            if v in done:
                continue
            nd = cost_add(d, edge.weight)
            old = dist.get(v)
            if old is None or nd < old or (nd == old and u < pred.get(v, -1)):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred, best_goal


def extract_optimal(K: WeightedKripke, spacing: float = 0.25) -> Optional[Trace]:
    """Minimum-weight trace from the init state to the best goal state, or ``None``.

    Among goal states with equal weight, the smallest state id wins.
    """
    if not K.goal_ids:
        return None
    dist, pred, goal = shortest_costs(K)
    if goal is None:
        return None
    states = [goal]
    while states[-1] != K.init:
        states.append(pred[states[-1]])
    states.reverse()
    edge_weights = [K.succ[a][b].weight for a, b in zip(states, states[1:])]
    pieces = [polyline(K.succ[a][b].labeled.trajectory, spacing) for a, b in zip(states, states[1:])]
    if pieces:
        geometry = np.vstack([pieces[0]] + [p[1:] for p in pieces[1:]])
    else:
        geometry = np.asarray([K.states[K.init]], dtype=float)
    trace = Trace(states, dist[goal], edge_weights, geometry)
    return trace


def _bbox(points: np.ndarray, pad: float):
    return points[:, 0].min() - pad, points[:, 1].min() - pad, points[:, 0].max() + pad, points[:, 1].max() + pad


def _boxes_meet(a, b) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def changed_region_boxes(old: WorldModel, new: WorldModel) -> list:
    """Bounding boxes of every region that differs between two worlds (both versions)."""
    boxes = []
    old_by = {r.name: r for r in old.regions}
    new_by = {r.name: r for r in new.regions}
    for name in set(old_by) | set(new_by):
        a, b = old_by.get(name), new_by.get(name)
        if a is not None and b is not None and a.same_as(b):
            continue
        for r in (a, b):
            if r is not None:
                boxes.append(_bbox(r.polygon, 0.0))
    return boxes


@dataclass
class PlanningSession:
    """Keeps one weighted Kripke structure alive across planning iterations."""

    coster: EdgeCoster
    strategy: ConnectionStrategy
    sampler: Sampler
    goal: Goal
    init_pose: Pose
    samples_per_iteration: int = 20
    workers: int = 1
    reroot_threshold: float = 0.5
    dirty_only: bool = False
    kripke: WeightedKripke = field(init=False)
    last_trace: Optional[Trace] = field(init=False, default=None)

    def __post_init__(self):
        self.kripke = WeightedKripke(
            Pose(*self.init_pose),
            self.coster.spec.cost_length,
            tree=self.strategy.tree,
            theta_weight=self.strategy.theta_weight,
        )
        if self.goal.contains(self.init_pose):
            self.kripke.goal_ids.add(self.kripke.init)

    @property
    def world(self) -> WorldModel:
        return self.coster.world

    def update_world(self, world: WorldModel):
        """Swap in a new world and recompute the affected transition weights."""
        K = self.kripke
        old = self.coster.world
        self.coster.world = world
        boxes = changed_region_boxes(old, world) if self.dirty_only else None
        pad = world.vehicle.bounding_radius
        refreshed = 0
        for src, dst, edge in list(K.edges()):
            traj = edge.labeled.trajectory
            if boxes is not None:
                box = _bbox(polyline(traj, 0.5), pad)
                if not any(_boxes_meet(box, b) for b in boxes):
                    continue
            edge.weight, edge.labeled = self.coster.relabel(traj)
            refreshed += 1
        log.debug("refreshed %d edge weights", refreshed)
        K.recompute_costs()

    def reroot(self, pose) -> int:
        """Bind the current pose to a state and make it the init state."""
        K = self.kripke
        i, d = K.nearest(pose)
        if d <= self.reroot_threshold:
            if i != K.init:
                K.set_init(i)
            return K.init
        neighbours = near(pose, K, self.strategy)
        new = K.add(pose)
        K.set_init(new)
        for pairs in ([(s, new) for s in neighbours], [(new, s) for s in neighbours]):
            for s, t in pairs:
                c, lt = self.coster(K.states[s], K.states[t])
                if self.strategy.tree:
                    connect_rrt(K, s, t, c, lt, self.strategy.propagate)
                else:
                    connect_rrg(K, s, t, c, lt)
        if self.goal.contains(pose):
            K.goal_ids.add(new)
        return new

    def step(self, current_pose=None, world_update: Optional[WorldModel] = None, samples: Optional[int] = None):
        """One planning iteration: update init and weights, grow, extract."""
        if current_pose is not None:
            self.reroot(current_pose)
        if world_update is not None:
            self.update_world(world_update)
        n = self.samples_per_iteration if samples is None else samples
        grow(self.kripke, self.coster, self.strategy, self.sampler, self.goal, n, self.workers)
        self.last_trace = extract_optimal(self.kripke)
        return self.last_trace


def replan_step(session: PlanningSession, current_pose=None, world_update=None, samples=None):
    return session.step(current_pose, world_update, samples)
