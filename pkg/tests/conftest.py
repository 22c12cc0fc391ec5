from pathlib import Path

import pytest

from decbayes.config import config_from_dict

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def small_config(**overrides):
    """A quick problem whose true parameter sits exactly on the grid."""
    raw = {
        "m": 4,
        "rounds": 10,
        "delta": 0.5,
        "batch_size": 3,
        "seed": 0,
        "grid": {"lower": [-2.0, -1.0], "upper": [2.0, 1.0], "points": [9, 9]},
        "prior": {"kind": "uniform"},
        "data": {
            "source": "synthetic",
            "theta_star": [1.0, 0.5],
            "informative_range": [1.0, 3.0],
            "restricted_range": [0.0, 1.0],
            "samples_per_agent": 20,
            "test_size": 50,
        },
    }
    for key, value in overrides.items():
        node = raw
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_dict(raw)


@pytest.fixture
def default_config_path():
    return CONFIG_DIR / "synthetic.yaml"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
