import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # the oracles module

from minviol.scenario import config_from_dict  # noqa: E402

SMALL = {
    "alphabet": ["road", "block"],
    "regions": [
        {"name": "road", "mode": "containment", "vertices": [[-5, -3], [25, -3], [25, 3], [-5, 3]]},
        {"name": "block", "mode": "overlap", "vertices": [[8, -2.5], [11, -2.5], [11, -0.5], [8, -0.5]]},
    ],
    "rules": [
        {"name": "avoid", "formula": "G !block", "priority": 0},
        {"name": "road", "formula": "G road", "priority": 1},
    ],
    "vehicle": {"half_length": 1.0, "half_width": 0.5, "rear_axle_offset": 0.5},
    "init": [0.0, -1.5, 0.0],
    "goal": {"x_min": 17.0},
    "bounds": {"x": [0.0, 20.0], "y": [-2.0, 2.0], "theta": ["-pi/6", "pi/6"]},
    "strategy": {"variant": "rrg", "gamma": 300.0, "theta_weight": 5.0},
    "iterations": 4,
    "samples_per_iteration": 15,
}


def small_config(**overrides):
    doc = {**SMALL, **overrides}
    return config_from_dict(doc, "small")


@pytest.fixture
def small():
    return small_config
