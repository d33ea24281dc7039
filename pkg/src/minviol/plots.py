"""SVG plots of the final graph and of the per-iteration cost curves."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402
from matplotlib.patches import Polygon as PolygonPatch  # noqa: E402

from .dynamics import polyline  # noqa: E402
from .world import Mode  # noqa: E402

plt.rcParams["svg.hashsalt"] = "minviol"  # stable element ids

_REGION_STYLE = {
    Mode.CONTAINMENT: dict(facecolor="none", edgecolor="0.4", linestyle="--", linewidth=0.8),
    Mode.OVERLAP: dict(facecolor="tab:red", edgecolor="tab:red", alpha=0.25),
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_path(session, trace, path, max_edges: int = 20000):
    """States, transitions (light) and the optimal trace (black) over the regions."""
    K = session.kripke
    fig, ax = plt.subplots(figsize=(12, 3.2))
    for region in session.world.regions:
        ax.add_patch(PolygonPatch(region.polygon, closed=True, label=region.name, **_REGION_STYLE[region.mode]))
    segs = []
    for n, (_, _, edge) in enumerate(K.edges()):
        if n >= max_edges:
            break
        segs.append(polyline(edge.labeled.trajectory, 0.5)[:, :2])
    ax.add_collection(LineCollection(segs, colors="lightsteelblue", linewidths=0.3))
    xy = [(s.x, s.y) for s in K.states]
    ax.scatter([p[0] for p in xy], [p[1] for p in xy], s=2, color="navy", zorder=3)
    if trace is not None:
        ax.plot(trace.geometry[:, 0], trace.geometry[:, 1], color="black", linewidth=1.5, zorder=4)
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    _save(fig, path)


def plot_costs(costs, seconds, spec, path):
    """Per-class unsafety of the extracted trace and wall time, per iteration."""
    fig, (a, b) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    its = list(range(1, len(costs) + 1))
    for k in range(spec.num_classes):
        ys = [math.nan if c is None else c[k] for c in costs]
        a.plot(its, ys, marker=".", label=f"class {k}")
    a.set_ylabel("level of unsafety")
    a.legend(loc="upper right", fontsize="small")
    b.plot(its, seconds, marker=".", color="0.3")
    b.set_ylabel("seconds")
    b.set_xlabel("iteration")
    _save(fig, path)
