"""Run a comparison of modes on shared data and write the result files.

Files written per mode ``<mode>``:

``rounds_<mode>.csv``
    one row per (round, agent) with columns ``ROUND_COLUMNS``.
``final_beliefs_<mode>.json``
    grid points and every agent's final probability vector.
``connectivity_<mode>.csv``
    columns ``window,connected`` for each full B-round window.

plus one ``meta.json`` for the whole comparison.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import UNSTATED_DEFAULTS, SimulationConfig
from .engine import SimulationResult, build_data, run_simulation

log = logging.getLogger(__name__)

ROUND_COLUMNS = (
    "t",
    "agent",
    "mse",
    "belief_at_truth",
    "selected_neighbor",
    "consensus_gap",
    "bound",
    "k_theta",
)
CONNECTIVITY_COLUMNS = ("window", "connected")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


@dataclass
class ExperimentManifest:
    config: SimulationConfig
    out_dir: Path
    modes: Sequence[str]
    config_path: Optional[Path] = None
    emit_rounds: bool = True
    emit_final_beliefs: bool = True
    emit_connectivity: bool = True
    emit_metadata: bool = True
    wall_clock: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if not self.modes:
            raise ValueError("at least one mode must be requested")

    @classmethod
    def from_config(cls, config: SimulationConfig, out_dir, modes=None, config_path=None) -> "ExperimentManifest":
        emit = config.experiment.emit
        return cls(
            config=config,
            out_dir=Path(out_dir),
            modes=list(modes or config.modes),
            config_path=Path(config_path) if config_path else None,
            emit_rounds=emit.rounds,
            emit_final_beliefs=emit.final_beliefs,
            emit_connectivity=emit.connectivity,
            emit_metadata=emit.metadata,
            wall_clock=emit.wall_clock,
        )


@dataclass
class ExperimentOutcome:
    status: int
    results: dict[str, SimulationResult] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)


def fmt(value) -> str:
    """Shortest round-trip text for a number; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def round_rows(result: SimulationResult):
    for rec in result.records:
        for i in range(rec.m):
            yield (
                rec.t,
                i,
                rec.mse[i],
                None if rec.belief_at_truth is None else rec.belief_at_truth[i],
                rec.selected[i],
                rec.consensus_gap,
                None if rec.bound is None else rec.bound[i],
                None if rec.k_theta is None else rec.k_theta[i],
            )


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_mode_outputs(result: SimulationResult, manifest: ExperimentManifest) -> list[Path]:
    out = manifest.out_dir
    files = []
    if manifest.emit_rounds:
        p = out / f"rounds_{result.mode}.csv"
        _write_csv(p, ROUND_COLUMNS, round_rows(result))
        files.append(p)
    if manifest.emit_final_beliefs:
        p = out / f"final_beliefs_{result.mode}.json"
        grid = result.problem.grid
        _write_json(
            p,
            {
                "mode": result.mode,
                "grid_points": grid.points.tolist(),
                "truth_index": grid.truth_index,
                "beliefs": [b.probs.tolist() for b in result.final_beliefs],
            },
        )
        files.append(p)
    if manifest.emit_connectivity:
        p = out / f"connectivity_{result.mode}.csv"
        report = result.connectivity(manifest.config.b_window)
        _write_csv(p, CONNECTIVITY_COLUMNS, enumerate(report))
        files.append(p)
    return files


def run_experiment(manifest: ExperimentManifest) -> ExperimentOutcome:
    """Run every requested mode on one shared dataset.

    A failing mode is logged and skipped; the others still run.
    """
    cfg = manifest.config
    try:
        manifest.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {manifest.out_dir}: {err}") from err
    started = time.perf_counter()
    shared = build_data(cfg)
    outcome = ExperimentOutcome(EXIT_OK)
    for mode in manifest.modes:
        try:
            result = run_simulation(cfg.with_mode(mode), mode, shared)
            outcome.files += write_mode_outputs(result, manifest)
            outcome.results[mode] = result
        except OSError:
            raise
        except Exception as err:  # one broken mode must not sink the comparison
            log.error("mode %s failed: %s", mode, err)
            outcome.errors[mode] = f"{type(err).__name__}: {err}"
    if outcome.errors:
        outcome.status = EXIT_PARTIAL
    if manifest.emit_metadata:
        meta = {
            "artifact": "decbayes",
            "version": __version__,
            "config_path": str(manifest.config_path) if manifest.config_path else None,
            "resolved_config": cfg.resolved(),
            "seed": cfg.seed,
            "data_seed": cfg.data.seed,
            "modes": list(manifest.modes),
            "succeeded": [m for m in manifest.modes if m in outcome.results],
            "failed": outcome.errors,
            "unstated_defaults": list(UNSTATED_DEFAULTS),
        }
        if manifest.wall_clock:
            meta["wall_clock_seconds"] = time.perf_counter() - started
        p = manifest.out_dir / "meta.json"
        _write_json(p, meta)
        outcome.files.append(p)
    return outcome
