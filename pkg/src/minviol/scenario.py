"""Scenario files: YAML documents describing world, rules and planner settings.

See ``scenarios/overtake.yaml`` for the canonical example.  Every key is
documented in the README.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import yaml

from .fltl import FormulaError, GXFormula, parse
from .geometry import GeometryError
from .kripke import Bounds, ConnectionStrategy, EdgeCoster, Goal, Sampler, Variant
from .search import PlanningSession
from .unsafety import PrioritizedSpec, Rule
from .world import Mode, Pose, Region, Vehicle, WorldModel


class ConfigError(ValueError):
    """A scenario file is malformed; the message names the offending field."""


@dataclass
class RuleConfig:
    name: str
    formula: str
    weight: int = 1
    priority: int = 0


@dataclass
class RegionConfig:
    name: str
    vertices: list
    mode: str


@dataclass
class ScenarioConfig:
    alphabet: list
    regions: list
    rules: list
    init: tuple
    goal: dict
    bounds: dict
    vehicle: dict = field(default_factory=dict)
    turning_radius: float = 1.0
    strategy: dict = field(default_factory=dict)
    iterations: int = 40
    samples_per_iteration: int = 20
    seed: int = 0
    step: float = 0.1
    refine_tol: float = 1e-4
    workers: int = 1
    source: Optional[str] = None

    # ---- construction of library objects

    def build_spec(self) -> PrioritizedSpec:
        rules = []
        for i, r in enumerate(self.rules):
            try:
                formula = parse(r.formula)
            except FormulaError as exc:
                raise ConfigError(f"rules[{i}] ({r.name}): {exc}") from None
            if not isinstance(formula, GXFormula):
                raise ConfigError(f"rules[{i}] ({r.name}): paired atoms are not allowed in rules")
            rules.append(Rule(r.name, formula, r.weight, r.priority))
        try:
            return PrioritizedSpec(frozenset(self.alphabet), tuple(rules))
        except ValueError as exc:
            raise ConfigError(f"rules: {exc}") from None

    def build_world(self) -> WorldModel:
        regions = []
        for i, r in enumerate(self.regions):
            try:
                regions.append(Region(r.name, r.vertices, Mode(r.mode)))
            except (GeometryError, ValueError) as exc:
                raise ConfigError(f"regions[{i}] ({r.name}): {exc}") from None
        try:
            world = WorldModel(regions, Vehicle(**self.vehicle))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"vehicle/regions: {exc}") from None
        if set(world.names) != set(self.alphabet):
            raise ConfigError(
                f"region names {sorted(world.names)} must equal the alphabet {sorted(self.alphabet)}"
            )
        return world

    def build_strategy(self) -> ConnectionStrategy:
        try:
            return ConnectionStrategy(**self.strategy)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"strategy: {exc}") from None

    def build_goal(self) -> Goal:
        try:
            return Goal(**self.goal)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"goal: {exc}") from None

    def build_bounds(self) -> Bounds:
        try:
            b = self.bounds
            return Bounds(
                (float(b["x"][0]), float(b["y"][0]), float(b["theta"][0])),
                (float(b["x"][1]), float(b["y"][1]), float(b["theta"][1])),
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConfigError(f"bounds: {exc!s}") from None

    def session(self, workers: Optional[int] = None) -> PlanningSession:
        coster = EdgeCoster(self.build_world(), self.build_spec(), self.turning_radius, self.step, self.refine_tol)
        return PlanningSession(
            coster=coster,
            strategy=self.build_strategy(),
            sampler=Sampler(self.build_bounds(), self.seed),
            goal=self.build_goal(),
            init_pose=Pose.make(*self.init),
            samples_per_iteration=self.samples_per_iteration,
            workers=self.workers if workers is None else workers,
        )

    def with_overrides(self, **kw) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, strategy=dict(self.strategy))
        for key in ("seed", "iterations", "samples_per_iteration", "workers"):
            if kw.get(key) is not None:
                setattr(cfg, key, int(kw[key]))
        if kw.get("strategy") is not None:
            cfg.strategy["variant"] = kw["strategy"]
        if kw.get("propagate") is not None:
            cfg.strategy["propagate"] = kw["propagate"]
        return cfg


_TOP_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)} - {"source"}
_REQUIRED = ("alphabet", "regions", "rules", "init", "goal", "bounds")


_PI_EXPR = re.compile(r"^\s*(-?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def _angle(value) -> float:
    """Numbers, or strings such as ``"pi/4"``, ``"-pi/3"`` and ``"2*pi"``."""
    if isinstance(value, str):
        m = _PI_EXPR.match(value)
        if not m:
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"cannot read angle {value!r}") from None
        sign, coef, div = m.groups()
        out = (float(coef) if coef else 1.0) * math.pi / (float(div) if div else 1.0)
        return -out if sign else out
    return float(value)


def config_from_dict(doc: Any, source: Optional[str] = None) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    try:
        rules = [
            RuleConfig(str(r["name"]), str(r["formula"]), int(r.get("weight", 1)), int(r.get("priority", 0)))
            for r in doc["rules"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"rules: bad entry ({exc!s})") from None
    try:
        regions = [
            RegionConfig(str(r["name"]), [[float(v) for v in p] for p in r["vertices"]], str(r.get("mode", "overlap")))
            for r in doc["regions"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"regions: bad entry ({exc!s})") from None
    init = doc["init"]
    if not isinstance(init, (list, tuple)) or len(init) != 3:
        raise ConfigError("init: expected [x, y, theta]")
    bounds = dict(doc["bounds"])
    if "theta" in bounds:
        bounds["theta"] = [_angle(v) for v in bounds["theta"]]
    kw = {k: doc[k] for k in doc if k not in ("rules", "regions", "init", "bounds")}
    return ScenarioConfig(
        rules=rules,
        regions=regions,
        init=(float(init[0]), float(init[1]), _angle(init[2])),
        bounds=bounds,
        source=source,
        **kw,
    )


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML syntax error{where}") from None
    return config_from_dict(doc, str(path))


def bundled_scenario_path(name: str = "overtake") -> Path:
    return Path(str(resources.files("minviol") / "scenarios" / f"{name}.yaml"))


def load_bundled(name: str = "overtake") -> ScenarioConfig:
    return load_config(bundled_scenario_path(name))
