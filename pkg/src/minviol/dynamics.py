"""Dubins-car steering and timed-word extraction along trajectories.

The car moves at unit speed with ``|turn rate| <= 1 / turning_radius``, so
the duration of a trajectory equals its arc length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .unsafety import TimedLetter, TimedWord
from .world import Pose, WorldModel, wrap_angle

TWO_PI = 2.0 * math.pi


def _mod2pi(a: float) -> float:
    r = math.fmod(a, TWO_PI)
    return r + TWO_PI if r < 0 else r


@dataclass(frozen=True)
class Trajectory:
    start: Pose
    segments: tuple  # ((kind, length), ...) with kind in "LSR"
    turning_radius: float = 1.0

    @property
    def total_time(self) -> float:
        return sum(length for _, length in self.segments)

    @property
    def word(self) -> str:
        return "".join(kind for kind, _ in self.segments)

    @cached_property
    def _starts(self) -> tuple:
        return tuple(self.segment_starts())

    def segment_starts(self) -> list:
        """Pose and arc-length offset at the start of every segment, then the end pose."""
        out = []
        pose, s = self.start, 0.0
        for kind, length in self.segments:
            out.append((pose, s))
            pose = _advance(pose, kind, length, self.turning_radius)
            s += length
        out.append((pose, s))
        return out

    @property
    def end(self) -> Pose:
        return self._starts[-1][0]


def _advance(pose, kind: str, s: float, r: float) -> Pose:
    x, y, th = pose
    if kind == "S":
        return Pose(x + s * math.cos(th), y + s * math.sin(th), th)
    if kind == "L":
        th2 = th + s / r
        return Pose(x + r * (math.sin(th2) - math.sin(th)), y - r * (math.cos(th2) - math.cos(th)), wrap_angle(th2))
    if kind == "R":
        th2 = th - s / r
        return Pose(x - r * (math.sin(th2) - math.sin(th)), y + r * (math.cos(th2) - math.cos(th)), wrap_angle(th2))
    raise ValueError(f"unknown segment kind {kind!r}")


# normalised (t, p, q) for each word, given d, alpha, beta; None when infeasible


def _lsl(d, a, b, sa, sb, ca, cb, cab):
    p2 = 2 + d * d - 2 * cab + 2 * d * (sa - sb)
    if p2 < 0:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return _mod2pi(-a + tmp), math.sqrt(p2), _mod2pi(b - tmp)


def _rsr(d, a, b, sa, sb, ca, cb, cab):
    p2 = 2 + d * d - 2 * cab + 2 * d * (sb - sa)
    if p2 < 0:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return _mod2pi(a - tmp), math.sqrt(p2), _mod2pi(-b + tmp)


def _lsr(d, a, b, sa, sb, ca, cb, cab):
    p2 = -2 + d * d + 2 * cab + 2 * d * (sa + sb)
    if p2 < 0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return _mod2pi(-a + tmp), p, _mod2pi(-b + tmp)


def _rsl(d, a, b, sa, sb, ca, cb, cab):
    p2 = -2 + d * d + 2 * cab - 2 * d * (sa + sb)
    if p2 < 0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return _mod2pi(a - tmp), p, _mod2pi(b - tmp)


def _rlr(d, a, b, sa, sb, ca, cb, cab):
    tmp = (6.0 - d * d + 2 * cab + 2 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(TWO_PI - math.acos(tmp))
    t = _mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, _mod2pi(a - b - t + p)


def _lrl(d, a, b, sa, sb, ca, cb, cab):
    tmp = (6.0 - d * d + 2 * cab + 2 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(TWO_PI - math.acos(tmp))
    t = _mod2pi(-a - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, _mod2pi(b - a - t + p)


_WORDS = (("LSL", _lsl), ("RSR", _rsr), ("LSR", _lsr), ("RSL", _rsl), ("RLR", _rlr), ("LRL", _lrl))


def _pose_error(p: Pose, q: Pose) -> float:
    return max(abs(p.x - q.x), abs(p.y - q.y), abs(wrap_angle(p.theta - q.theta)))


def _raw_candidates(a: Pose, b: Pose, r: float) -> list:
    if _pose_error(a, b) == 0.0:
        return [Trajectory(a, (), r)]  # the closed forms would loop a full circle
    dx, dy = b.x - a.x, b.y - a.y
    d = math.hypot(dx, dy) / r
    phi = math.atan2(dy, dx) if d > 0 else 0.0
    alpha, beta = _mod2pi(a.theta - phi), _mod2pi(b.theta - phi)
    args = (d, alpha, beta, math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta), math.cos(alpha - beta))
    out = []
    for word, solver in _WORDS:
        sol = solver(*args)
        if sol is not None:
            out.append(Trajectory(a, tuple((k, v * r) for k, v in zip(word, sol)), r))
    return out


def _reaches(traj: Trajectory, b: Pose) -> bool:
    # guards against branch-cut slips in the closed forms
    return _pose_error(traj.end, b) <= 1e-6 * max(1.0, traj.turning_radius)


def dubins_candidates(a, b, turning_radius: float = 1.0) -> list:
    """All feasible canonical Dubins paths from ``a`` to ``b``, in word order."""
    if turning_radius <= 0:
        raise ValueError("turning radius must be positive")
    a, b = Pose.make(*a), Pose.make(*b)
    return [t for t in _raw_candidates(a, b, turning_radius) if _reaches(t, b)]


def steer(a, b, turning_radius: float = 1.0) -> Trajectory:
    """Shortest Dubins path from pose ``a`` to pose ``b``."""
    if turning_radius <= 0:
        raise ValueError("turning radius must be positive")
    a, b = Pose.make(*a), Pose.make(*b)
    # stable sort keeps word order among equal lengths, as min() over dubins_candidates would
    for best in sorted(_raw_candidates(a, b, turning_radius), key=lambda t: t.total_time):
        if _reaches(best, b):
            segs = tuple((k, v) for k, v in best.segments if v > 0.0)
            return Trajectory(best.start, segs, turning_radius)
    raise RuntimeError(f"no Dubins path found from {a} to {b}")  # pragma: no cover


def sample_pose(traj: Trajectory, t: float) -> Pose:
    """Pose at time ``t`` along the trajectory."""
    total = traj.total_time
    if t < 0.0 or t > total + 1e-12:
        raise ValueError(f"t={t} outside [0, {total}]")
    pose, s = traj.start, float(t)
    for kind, length in traj.segments:
        if s <= length:
            return _advance(pose, kind, s, traj.turning_radius)
        pose = _advance(pose, kind, length, traj.turning_radius)
        s -= length
    return pose


def sample_poses(traj: Trajectory, ts) -> np.ndarray:
    """Vectorised :func:`sample_pose`; returns an ``(m, 3)`` array."""
    ts = np.asarray(ts, dtype=float)
    return _sample_many([traj], [ts])


class _SegmentTable:
    """Segment start poses of several trajectories, padded to a common count."""

    def __init__(self, trajs: Sequence[Trajectory]):
        n = max([len(t.segments) for t in trajs] + [1])
        shape = (len(trajs), n)
        self.x, self.y, self.th = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        self.s0 = np.full(shape, np.inf)
        self.sign, self.r = np.zeros(shape), np.ones(shape)
        for k, traj in enumerate(trajs):
            segs = traj.segments or (("S", 0.0),)
            for j, ((kind, _), ((x, y, th), s0)) in enumerate(zip(segs, traj._starts)):
                self.x[k, j], self.y[k, j], self.th[k, j] = x, y, th
                self.s0[k, j] = s0
                self.sign[k, j] = _SIGN[kind]
                self.r[k, j] = traj.turning_radius
        self.s0[:, 0] = 0.0

    def sample(self, which: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Poses of trajectory ``which[i]`` at time ``ts[i]``."""
        which = np.asarray(which, dtype=np.intp)
        ts = np.asarray(ts, dtype=float)
        if self.s0.shape[1] > 1:
            j = (ts[:, None] >= self.s0[which, 1:]).sum(axis=1)
        else:
            j = np.zeros(len(ts), dtype=np.intp)
        x0, y0, th0 = self.x[which, j], self.y[which, j], self.th[which, j]
        sign, r = self.sign[which, j], self.r[which, j]
        s = ts - self.s0[which, j]
        th = th0 + sign * s / r
        sin0, cos0 = np.sin(th0), np.cos(th0)
        out = np.empty((len(ts), 3))
        turning = sign != 0.0
        out[:, 0] = np.where(turning, x0 + sign * r * (np.sin(th) - sin0), x0 + s * cos0)
        out[:, 1] = np.where(turning, y0 - sign * r * (np.cos(th) - cos0), y0 + s * sin0)
        out[:, 2] = (th + math.pi) % TWO_PI - math.pi
        return out


def _sample_many(trajs: Sequence[Trajectory], times: Sequence[np.ndarray]) -> np.ndarray:
    """Poses at ``times[k]`` along ``trajs[k]`` for every k, stacked into one ``(m, 3)`` array."""
    if not trajs:
        return np.empty((0, 3))
    which = np.repeat(np.arange(len(trajs)), [len(t) for t in times])
    return _SegmentTable(trajs).sample(which, np.concatenate(times))


_SIGN = {"S": 0.0, "L": 1.0, "R": -1.0}


@dataclass(frozen=True)
class LabeledTrajectory:
    trajectory: Trajectory
    word: TimedWord


def _refine(table: _SegmentTable, world, brackets, tol, sections=4):
    """Locate label changes inside brackets ``(k, ta, ma, tb, mb)`` of trajectory ``k``.

    Every bracket is split into at most ``sections`` pieces and each piece
    whose endpoint labels differ is split again, until pieces are ``<= tol``
    wide.  All brackets of one level share a single labeling call.  Returns
    ``{k: [(time, new_mask), ...]}`` sorted by time.
    """
    if not brackets:
        return {}
    cols = list(zip(*brackets))
    k, ta, tb = np.array(cols[0], dtype=np.int64), np.array(cols[1], float), np.array(cols[3], float)
    ma, mb = np.array(cols[2], dtype=np.int64), np.array(cols[4], dtype=np.int64)
    found = []
    while len(k):
        n = np.ceil((tb - ta) / tol).astype(np.int64)
        done = n <= 1
        found.append((k[done], 0.5 * (ta[done] + tb[done]), mb[done]))
        live = ~done
        if not live.any():
            break
        k, ta, tb, ma, mb = k[live], ta[live], tb[live], ma[live], mb[live]
        n = np.minimum(n[live], sections)
        # every bracket expands to n + 1 points: ta, n - 1 interior points, tb
        size = n + 1
        owner = np.repeat(np.arange(len(n)), size)
        pos = np.arange(size.sum()) - np.repeat(np.cumsum(size) - size, size)
        first, last = pos == 0, pos == n[owner]
        inner = ~(first | last)
        t = np.empty(len(pos))
        t[first], t[last] = ta, tb
        oi = owner[inner]
        t[inner] = ta[oi] + (tb[oi] - ta[oi]) * (pos[inner] / n[oi])
        m = np.empty(len(pos), dtype=np.int64)
        m[first], m[last] = ma, mb
        m[inner] = world.label_masks(table.sample(k[oi], t[inner]))
        split = (owner[:-1] == owner[1:]) & (m[:-1] != m[1:])
        k = k[owner[:-1][split]]
        ta, tb = t[:-1][split], t[1:][split]
        ma, mb = m[:-1][split], m[1:][split]
    ks = np.concatenate([f[0] for f in found])
    ts = np.concatenate([f[1] for f in found])
    ms = np.concatenate([f[2] for f in found])
    order = np.lexsort((ms, ts, ks))
    changes = {}
    for kk, tt, mm in zip(ks[order].tolist(), ts[order].tolist(), ms[order].tolist()):
        changes.setdefault(kk, []).append((tt, mm))
    return changes


def timed_word(
    traj: Trajectory,
    world: WorldModel,
    step: float = 0.1,
    refine_tol: float = 1e-4,
) -> TimedWord:
    """Timed word of a trajectory: maximal runs of constant label with their durations.

    Labels are sampled on a grid no coarser than ``step``; each change is
    narrowed down to ``refine_tol`` by repeated subdivision of the
    bracketing interval.  Letters shorter than ``refine_tol`` are absorbed
    by a neighbour.
    """
    return timed_words([traj], world, step, refine_tol)[0]


def timed_words(trajs: Sequence[Trajectory], world: WorldModel, step: float = 0.1, refine_tol: float = 1e-4) -> list:
    """:func:`timed_word` for many trajectories, sharing labeling calls.

    A trajectory's word does not depend on which other trajectories are in
    the batch.
    """
    if not step > refine_tol > 0:
        raise ValueError("need step > refine_tol > 0")
    totals = [t.total_time for t in trajs]
    grids = [np.linspace(0.0, T, max(1, math.ceil(T / step)) + 1) if T > 0 else np.zeros(1) for T in totals]
    table = _SegmentTable(trajs)
    which = np.repeat(np.arange(len(trajs)), [len(g) for g in grids])
    flat = world.label_masks(table.sample(which, np.concatenate(grids))).tolist()
    brackets, masks, j = [], [], 0
    for k, grid in enumerate(grids):
        m = flat[j : j + len(grid)]
        j += len(grid)
        masks.append(m)
        brackets.extend((k, grid[i], m[i], grid[i + 1], m[i + 1]) for i in range(len(grid) - 1) if m[i] != m[i + 1])
    changes = _refine(table, world, brackets, refine_tol)
    words = []
    for k, total in enumerate(totals):
        if total <= 0.0:
            words.append(TimedWord((TimedLetter(world.mask_to_label(masks[k][0]), 0.0),)))
            continue
        runs = _merge_runs([(0.0, masks[k][0])] + changes.get(k, []), total, refine_tol)
        letters = []
        acc = 0.0
        for i, (t0, mask) in enumerate(runs):
            if i + 1 < len(runs):
                d = runs[i + 1][0] - t0
                acc += d
            else:
                d = max(total - acc, 0.0)
            letters.append(TimedLetter(world.mask_to_label(mask), float(d)))
        words.append(TimedWord(tuple(letters)))
    return words


def _merge_runs(starts, total, tol):
    runs = []
    for t, m in starts:
        if runs and runs[-1][1] == m:
            continue
        runs.append((float(t), m))
    changed = True
    while changed and len(runs) > 1:
        changed = False
        ends = [r[0] for r in runs[1:]] + [total]
        for i, ((t0, m), t1) in enumerate(zip(runs, ends)):
            if t1 - t0 < tol:
                if i == 0:
                    runs[1] = (0.0, runs[1][1])
                del runs[i]
                changed = True
                break
        merged = []
        for t, m in runs:
            if merged and merged[-1][1] == m:
                continue
            merged.append((t, m))
        runs = merged
    return runs


def label_trajectory(traj: Trajectory, world: WorldModel, step: float = 0.1, refine_tol: float = 1e-4) -> LabeledTrajectory:
    return LabeledTrajectory(traj, timed_word(traj, world, step, refine_tol))


def polyline(traj: Trajectory, spacing: float = 0.25) -> np.ndarray:
    """Dense ``(m, 3)`` samples along the trajectory, endpoints included."""
    total = traj.total_time
    n = max(1, math.ceil(total / spacing))
    return sample_poses(traj, np.linspace(0.0, total, n + 1))
