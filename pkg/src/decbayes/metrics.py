"""Per-round evaluation: test error, consensus, error-bound diagnostics, identifiability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .belief import Belief, ParameterGrid, kl_divergence, total_variation
from .likelihood import GaussianLinearModel, ObservationBatch, predictive_mean


class MetricsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RoundRecord:
    t: int
    mse: tuple[float, ...]
    belief_at_truth: Optional[tuple[float, ...]]
    selected: tuple[Optional[int], ...]
    kl_table: np.ndarray
    consensus_gap: float
    bound: Optional[tuple[float, ...]]
    k_theta: Optional[tuple[float, ...]]

    @property
    def m(self) -> int:
        return len(self.mse)


def test_mse(belief: Belief, grid: ParameterGrid, model: GaussianLinearModel, test: ObservationBatch) -> float:
    if test is None or len(test) == 0:
        raise MetricsError("empty test set")
    pred = np.atleast_1d(predictive_mean(model, belief, grid, test.features))
    return float(np.mean((test.labels - pred) ** 2))


def pairwise_tv(beliefs: Sequence[Belief]) -> np.ndarray:
    probs = np.stack([b.probs for b in beliefs])
    return 0.5 * np.abs(probs[:, None, :] - probs[None, :, :]).sum(axis=2)


def consensus_gap(beliefs: Sequence[Belief]) -> float:
    """Largest total-variation distance between any two agents."""
    if len(beliefs) < 2:
        return 0.0
    return float(pairwise_tv(beliefs).max())


def consensus_reached(beliefs: Sequence[Belief], tol: float = 0.05) -> bool:
    if not tol > 0:
        raise MetricsError("consensus tolerance must be positive")
    return consensus_gap(beliefs) <= tol


def kl_table(beliefs: Sequence[Belief]) -> np.ndarray:
    """``table[i, j] = KL(beliefs[i] || beliefs[j])``."""
    m = len(beliefs)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                out[i, j] = kl_divergence(beliefs[i], beliefs[j])
    return out


@dataclass(frozen=True)
class BoundDiagnostic:
    error: float
    bound: float
    k_theta: float

    @property
    def vacuous(self) -> bool:
        return self.bound >= 1.0


def error_bound_diagnostic(
    agent: int,
    belief: Belief,
    intermediates: Sequence[Belief],
    weight_row: np.ndarray,
    grid: ParameterGrid,
    epsilon: float = 0.01,
) -> BoundDiagnostic:
    """Error at the true grid point against the exponential-decay bound.

    ``k_theta`` is the minimum over wrong hypotheses of the weighted pointwise
    divergence contributions ``a log(a / b)`` from this agent's intermediate
    belief ``a`` to each neighbor's ``b``.
    """
    if grid.truth_index is None:
        raise MetricsError("bound diagnostic needs a known true parameter")
    star = grid.truth_index
    error = min(max(1.0 - float(belief.probs[star]), 0.0), 1.0)
    own = intermediates[agent]
    contrib = np.zeros(grid.size)
    for j, w in enumerate(weight_row):
        if j == agent or w <= 0:
            continue
        contrib += w * own.probs * (own.log_weights - intermediates[j].log_weights)
    wrong = np.delete(contrib, star)
    k_theta = float(wrong.min())
    bound = (grid.size - 1) * float(np.exp(-(k_theta - epsilon)))
    return BoundDiagnostic(error, bound, k_theta)


@dataclass(frozen=True)
class IdentifiabilityReport:
    per_agent: tuple[tuple[int, ...], ...]
    common: tuple[int, ...]

    @property
    def identifiable(self) -> bool:
        return len(self.common) == 1


def check_identifiability(model, grid: ParameterGrid, datasets, atol: float = 1e-9) -> IdentifiabilityReport:
    """Grid points observationally equivalent to the truth, per agent and jointly."""
    if grid.truth_index is None:
        raise MetricsError("identifiability check needs a known true parameter")
    per_agent = []
    common = set(range(grid.size))
    for ds in datasets:
        ll = model.log_likelihood_per_sample(ds.batch, grid)
        same = np.all(np.abs(ll - ll[:, [grid.truth_index]]) <= atol, axis=0)
        idx = tuple(int(k) for k in np.flatnonzero(same))
        per_agent.append(idx)
        common &= set(idx)
    return IdentifiabilityReport(tuple(per_agent), tuple(sorted(common)))


def rounds_to_threshold(mse_by_round: Sequence[Sequence[float]], threshold: float) -> int:
    """First 1-based round at which every agent's MSE is at or below ``threshold``.

    Returns ``len(mse_by_round) + 1`` when the threshold is never met.
    """
    for t, row in enumerate(mse_by_round, start=1):
        if max(row) <= threshold:
            return t
    return len(mse_by_round) + 1
