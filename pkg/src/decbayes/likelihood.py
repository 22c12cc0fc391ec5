"""Observation models evaluated over a parameter grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .belief import Belief, ParameterGrid


class LikelihoodError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ObservationBatch:
    """Feature rows (N, d_raw) and labels (N,) owned by one agent."""

    features: np.ndarray
    labels: np.ndarray
    agent_id: int = 0

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.labels, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise LikelihoodError(
                f"features ({x.shape[0]} rows) and labels ({y.shape[0]}) differ in length"
            )
        if y.shape[0] < 1:
            raise LikelihoodError("an observation batch needs at least one sample")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    def take(self, idx, agent_id=None) -> "ObservationBatch":
        return ObservationBatch(
            self.features[idx], self.labels[idx], self.agent_id if agent_id is None else agent_id
        )

    @classmethod
    def concat(cls, batches, agent_id=0) -> "ObservationBatch":
        return cls(
            np.concatenate([b.features for b in batches]),
            np.concatenate([b.labels for b in batches]),
            agent_id,
        )


class ObservationModel(Protocol):
    def log_likelihood_per_sample(self, batch: ObservationBatch, grid: ParameterGrid) -> np.ndarray:
        """Return an (N, K) array of log l(y_n | x_n, theta_k)."""


@dataclass(frozen=True)
class GaussianLinearModel:
    """y = theta . [1, x] + N(0, noise_std^2), known noise."""

    noise_std: float = 1.0
    intercept: bool = True

    def __post_init__(self):
        if not self.noise_std > 0:
            raise LikelihoodError(f"noise_std must be positive, got {self.noise_std}")

    def design(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if self.intercept:
            x = np.hstack([np.ones((x.shape[0], 1)), x])
        return x

    def _check_dims(self, design: np.ndarray, grid: ParameterGrid):
        if design.shape[1] != grid.dim:
            raise LikelihoodError(
                f"augmented feature dimension {design.shape[1]} != grid dimension {grid.dim}"
            )

    def predictions(self, features, grid: ParameterGrid) -> np.ndarray:
        """(N, K) array of theta_k . x_n."""
        xt = self.design(features)
        self._check_dims(xt, grid)
        return xt @ grid.points.T

    def log_likelihood_per_sample(self, batch: ObservationBatch, grid: ParameterGrid) -> np.ndarray:
        resid = batch.labels[:, None] - self.predictions(batch.features, grid)
        var = self.noise_std**2
        return -0.5 * np.log(2 * np.pi * var) - resid**2 / (2 * var)


def log_likelihood_over_grid(model: ObservationModel, batch: ObservationBatch, grid: ParameterGrid) -> np.ndarray:
    """Summed minibatch log-likelihood at every grid point, shape (K,)."""
    if len(batch) < 1:
        raise LikelihoodError("empty batch")
    return model.log_likelihood_per_sample(batch, grid).sum(axis=0)


def posterior_mean(belief: Belief, grid: ParameterGrid) -> np.ndarray:
    if len(belief) != grid.size:
        raise LikelihoodError(f"belief has {len(belief)} entries, grid has {grid.size}")
    return belief.probs @ grid.points


def predictive_mean(model: GaussianLinearModel, belief: Belief, grid: ParameterGrid, x) -> np.ndarray | float:
    """Mean of the posterior-predictive mixture at ``x`` (one row or many)."""
    theta_bar = posterior_mean(belief, grid)
    xt = model.design(x)
    if xt.shape[1] != grid.dim:
        raise LikelihoodError(f"augmented feature dimension {xt.shape[1]} != grid dimension {grid.dim}")
    out = xt @ theta_bar
    if np.ndim(x) <= 1 and xt.shape[0] == 1:
        return float(out[0])
    return out
