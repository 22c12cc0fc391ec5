"""Synthetic heterogeneous data, CSV ingestion, partitioning and minibatches."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .likelihood import ObservationBatch
from .rng import Purpose, substream


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class AgentDataset:
    agent_id: int
    batch: ObservationBatch

    def __post_init__(self):
        if len(self.batch) < 1:
            raise DataError(f"agent {self.agent_id} has an empty dataset")

    def __len__(self):
        return len(self.batch)


@dataclass(frozen=True)
class SyntheticSpec:
    theta_star: tuple[float, ...] = (-39.0, 0.63)
    noise_std: float = 1.0
    informative_range: tuple[float, float] = (85.0, 120.0)
    restricted_range: tuple[float, float] = (70.0, 85.0)
    informative_agent: int = 0
    samples_per_agent: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("informative_range", "restricted_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise DataError(f"{name} needs lo < hi, got [{lo}, {hi}]")
        if self.samples_per_agent < 1:
            raise DataError("samples_per_agent must be >= 1")
        if self.noise_std < 0:
            raise DataError("noise_std must be nonnegative")
        if len(self.theta_star) != 2:
            raise DataError("theta_star is (intercept, slope)")


def _labels(theta_star, x, noise_std, rng) -> np.ndarray:
    y = theta_star[0] + theta_star[1] * x
    if noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=x.shape)
    return y


def generate_synthetic(spec: SyntheticSpec, m: int) -> list[AgentDataset]:
    """One dataset per agent; only ``informative_agent`` sees the wide feature range."""
    if not 0 <= spec.informative_agent < m:
        raise DataError(f"informative_agent {spec.informative_agent} out of range for m={m}")
    out = []
    for i in range(m):
        rng = substream(spec.seed, Purpose.DATA, i)
        lo, hi = spec.informative_range if i == spec.informative_agent else spec.restricted_range
        x = rng.uniform(lo, hi, size=spec.samples_per_agent)
        y = _labels(spec.theta_star, x, spec.noise_std, rng)
        out.append(AgentDataset(i, ObservationBatch(x[:, None], y, i)))
    return out


def generate_test_set(spec: SyntheticSpec, size: int) -> ObservationBatch:
    """Held-out samples over the union of both feature ranges."""
    if size < 1:
        raise DataError("test set size must be >= 1")
    rng = substream(spec.seed, Purpose.TEST)
    lo = min(spec.informative_range[0], spec.restricted_range[0])
    hi = max(spec.informative_range[1], spec.restricted_range[1])
    x = rng.uniform(lo, hi, size=size)
    y = _labels(spec.theta_star, x, spec.noise_std, rng)
    return ObservationBatch(x[:, None], y, -1)


def load_csv(path, feature_columns: Sequence[str], label_column: str) -> ObservationBatch:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"CSV file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in [*feature_columns, label_column]:
            if col not in header:
                raise DataError(f"{path}: missing column {col!r} (have {header})")
        xs, ys = [], []
        for row_no, row in enumerate(reader, start=1):
            vals = []
            for col in [*feature_columns, label_column]:
                cell = row[col]
                try:
                    vals.append(float(cell))
                except (TypeError, ValueError):
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} in column {col!r} at row {row_no} "
                        f"(line {row_no + 1})"
                    ) from None
            xs.append(vals[:-1])
            ys.append(vals[-1])
    if not ys:
        raise DataError(f"{path}: no data rows (empty batch)")
    return ObservationBatch(np.array(xs), np.array(ys), 0)


def train_test_split(batch: ObservationBatch, test_fraction: float, seed: int):
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must lie in (0, 1)")
    n = len(batch)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise DataError(f"{n} rows are too few for a {test_fraction} test split")
    perm = substream(seed, Purpose.SPLIT).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return batch.take(train_idx), batch.take(test_idx, agent_id=-1)


def partition_by_feature(batch: ObservationBatch, m: int, informative_agent: int, threshold: float) -> list[AgentDataset]:
    """Rows with first feature >= threshold go to the informative agent.

    The remaining rows are dealt round-robin, in input order, to the other
    ``m - 1`` agents.
    """
    if m < 2:
        raise DataError("partitioning needs m >= 2")
    if not 0 <= informative_agent < m:
        raise DataError(f"informative_agent {informative_agent} out of range for m={m}")
    high = batch.features[:, 0] >= threshold
    if not high.any():
        raise DataError(f"no samples at or above threshold {threshold} (informative side empty)")
    if high.all():
        raise DataError(f"no samples below threshold {threshold} (restricted side empty)")
    others = [a for a in range(m) if a != informative_agent]
    low_idx = np.flatnonzero(~high)
    buckets: dict[int, list[int]] = {a: [] for a in others}
    for n, idx in enumerate(low_idx):
        buckets[others[n % len(others)]].append(int(idx))
    out = []
    for a in range(m):
        idx = np.flatnonzero(high) if a == informative_agent else np.array(buckets[a], dtype=int)
        if idx.size == 0:
            raise DataError(f"agent {a} receives no samples; lower m or add data")
        out.append(AgentDataset(a, batch.take(idx, agent_id=a)))
    return out


def sample_minibatch(dataset: AgentDataset, batch_size: int, round_index: int, seed: int) -> ObservationBatch:
    """Uniform draw with replacement, a pure function of (seed, agent, round)."""
    if batch_size < 1:
        raise DataError("batch_size must be >= 1")
    rng = substream(seed, Purpose.MINIBATCH, dataset.agent_id, round_index)
    idx = rng.integers(len(dataset), size=batch_size)
    return dataset.batch.take(idx)


def pooled(datasets: Sequence[AgentDataset], agent_id: int = 0) -> AgentDataset:
    return AgentDataset(agent_id, ObservationBatch.concat([d.batch for d in datasets], agent_id))


def write_datasets_csv(path, datasets: Sequence[AgentDataset], test: ObservationBatch | None = None):
    """Dump agent datasets (and optionally the test set) as ``split,agent,x...,y``."""
    d = datasets[0].batch.features.shape[1]
    xcols = ["x"] if d == 1 else [f"x{c}" for c in range(d)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "agent", *xcols, "y"])
        for ds in datasets:
            for xrow, y in zip(ds.batch.features, ds.batch.labels):
                w.writerow(["train", ds.agent_id, *map(repr, map(float, xrow)), repr(float(y))])
        if test is not None:
            for xrow, y in zip(test.features, test.labels):
                w.writerow(["test", "", *map(repr, map(float, xrow)), repr(float(y))])
