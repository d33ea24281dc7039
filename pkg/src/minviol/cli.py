"""Command-line entry point: run a scenario, or lint it.

Usage::

    minviol SCENARIO.yaml [--seed N] [--iterations N] [--samples-per-iter N]
                          [--strategy rrg|rrt-star|k-rrg|k-rrt-star]
                          [--propagate on|off] [--workers N] [--out DIR]
    minviol SCENARIO.yaml --lint

``SCENARIO`` may also be the name of a bundled scenario (``overtake``).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import polyline
from .fltl import BudgetError, FormulaError, GXFormula, check_stutter_invariant_bounded, parse, propositions_of
from .geometry import GeometryError
from .scenario import ConfigError, ScenarioConfig, bundled_scenario_path, load_config
from .search import PlanningSession, Trace
from .world import Mode, Region

log = logging.getLogger("minviol")

STUTTER_MAX_LEN = 5
STUTTER_BUDGET = 16


@dataclass
class RunResult:
    costs: list = field(default_factory=list)  # one CostVector or None per iteration
    seconds: list = field(default_factory=list)
    session: Optional[PlanningSession] = None
    trace: Optional[Trace] = None


def run_session(cfg: ScenarioConfig, out: Optional[Path] = None, plots: bool = True) -> RunResult:
    """Run the replanning loop on a static world and (optionally) write artifacts."""
    session = cfg.session()
    result = RunResult(session=session)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for i in range(1, cfg.iterations + 1):
        t0 = time.perf_counter()
        trace = session.step()
        result.seconds.append(time.perf_counter() - t0)
        result.costs.append(None if trace is None else trace.weight)
        result.trace = trace
        if out is not None:
            text = "# no trace\n" if trace is None else trace.to_text(session.kripke.states)
            (out / f"trace_{i}.txt").write_text(text)
        log.info("iteration %d: %s (%.2fs)", i, result.costs[-1], result.seconds[-1])
    if out is not None:
        n = session.coster.spec.cost_length
        (out / "costs.tsv").write_text(costs_tsv(result.costs, n))
        (out / "timings.tsv").write_text(timings_tsv(result.seconds))
        (out / "graph_final.txt").write_text(graph_text(session))
        if plots:
            from . import plots as _plots

            _plots.plot_path(session, result.trace, out / "plot_path.svg")
            _plots.plot_costs(result.costs, result.seconds, session.coster.spec, out / "plot_costs.svg")
    return result


def costs_tsv(costs: list, length: int) -> str:
    """Tab-separated cost log; a missing trace is written as ``inf`` in every column."""
    classes = [f"class{k}" for k in range(length - 1)]
    lines = ["\t".join(["iteration", *classes, "time"])]
    for i, c in enumerate(costs, start=1):
        cells = ["inf"] * length if c is None else [repr(float(v)) for v in c]
        lines.append("\t".join([str(i), *cells]))
    return "\n".join(lines) + "\n"


def timings_tsv(seconds: list) -> str:
    lines = ["iteration\tseconds"]
    lines += [f"{i}\t{s:.6f}" for i, s in enumerate(seconds, start=1)]
    return "\n".join(lines) + "\n"


def graph_text(session: PlanningSession) -> str:
    """Adjacency dump, one record per line.

    ``state ID X Y THETA [init] [goal]`` then
    ``edge SRC DST W0 .. Wk pts X Y THETA X Y THETA ...``.
    """
    K = session.kripke
    lines = [f"# states {len(K)} edges {K.num_edges} cost_length {K.cost_length}"]
    for i, (x, y, th) in enumerate(K.states):
        tags = (" init" if i == K.init else "") + (" goal" if i in K.goal_ids else "")
        lines.append(f"state {i} {x!r} {y!r} {th!r}{tags}")
    for src, dst, edge in K.edges():
        pts = polyline(edge.labeled.trajectory, 0.5)
        w = " ".join(repr(float(v)) for v in edge.weight)
        p = " ".join(repr(float(v)) for v in pts.ravel())
        lines.append(f"edge {src} {dst} {w} pts {p}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# lint


def lint(cfg: ScenarioConfig) -> tuple:
    """Check a scenario without running it; returns ``(errors, warnings)`` as message lists."""
    errors, warnings = [], []
    alphabet = set(cfg.alphabet)
    used = set()
    for i, r in enumerate(cfg.rules):
        where = f"rules[{i}] ({r.name})"
        try:
            formula = parse(r.formula)
        except FormulaError as exc:
            errors.append(f"{where}: {exc}")
            continue
        if not isinstance(formula, GXFormula):
            errors.append(f"{where}: paired atoms are not allowed in rules")
            continue
        props = propositions_of(formula)
        used |= props
        unknown = sorted(props - alphabet)
        if unknown:
            errors.append(f"{where}: unknown proposition(s) {', '.join(unknown)}")
            continue
        try:
            ok = check_stutter_invariant_bounded(formula, props, STUTTER_MAX_LEN, STUTTER_BUDGET)
        except BudgetError as exc:
            warnings.append(f"{where}: stutter check skipped ({exc})")
            continue
        if not ok:
            warnings.append(f"{where}: not stutter invariant (bounded check, length <= {STUTTER_MAX_LEN})")
    for i, reg in enumerate(cfg.regions):
        try:
            Region(reg.name, reg.vertices, Mode(reg.mode))
        except GeometryError as exc:
            errors.append(f"regions[{i}] ({reg.name}): degenerate polygon: {exc}")
        except ValueError as exc:
            errors.append(f"regions[{i}] ({reg.name}): {exc}")
    names = {reg.name for reg in cfg.regions}
    for p in sorted(alphabet - names):
        errors.append(f"alphabet: proposition {p} has no region")
    for n in sorted(names - alphabet):
        errors.append(f"regions: {n} is not in the alphabet")
    for p in sorted(alphabet - used):
        warnings.append(f"alphabet: proposition {p} is not used by any rule")
    if not errors:
        try:
            cfg.build_spec()
        except ConfigError as exc:
            errors.append(str(exc))
    return errors, warnings


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minviol", description="Minimum-violation motion planning with prioritized rules.")
    ap.add_argument("config", help="scenario YAML file, or the name of a bundled scenario")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--samples-per-iter", type=int, dest="samples_per_iteration")
    ap.add_argument("--strategy", choices=["rrg", "rrt-star", "k-rrg", "k-rrt-star"])
    ap.add_argument("--propagate", choices=["on", "off"])
    ap.add_argument("--workers", type=int, help="threads for edge costing (results do not depend on it)")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--no-plots", action="store_true")
    ap.add_argument("--lint", action="store_true", help="check the scenario and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _resolve(config: str) -> Path:
    p = Path(config)
    if not p.exists() and p.suffix == "":
        bundled = bundled_scenario_path(config)
        if bundled.exists():
            return bundled
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    path = _resolve(args.config)
    try:
        cfg = load_config(path)
    except FileNotFoundError:
        print(f"error: {path}: no such file", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.lint:
        errors, warnings = lint(cfg)
        for w in warnings:
            print(f"warning: {w}")
        for e in errors:
            print(f"error: {e}")
        if not errors:
            print(f"ok: {len(cfg.rules)} rules, {len(cfg.regions)} regions")
        return 1 if errors else 0
    if any(v is not None and v < 0 for v in (args.iterations, args.samples_per_iteration)):
        print("error: --iterations and --samples-per-iter must be >= 0", file=sys.stderr)
        return 2
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    cfg = cfg.with_overrides(
        seed=args.seed,
        iterations=args.iterations,
        samples_per_iteration=args.samples_per_iteration,
        workers=args.workers,
        strategy=args.strategy,
        propagate=None if args.propagate is None else args.propagate == "on",
    )
    try:
        result = run_session(cfg, Path(args.out), plots=not args.no_plots)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    final = result.costs[-1] if result.costs else None
    if final is None:
        print("no trace" if cfg.iterations else "no iterations run")
    else:
        print("final cost " + " ".join(f"{v:.4f}" for v in final))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
