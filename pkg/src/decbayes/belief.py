"""Grid-discretized beliefs and their two closed-form update rules.

Beliefs are stored as natural-log weights so that repeated products of
likelihoods and geometric pooling never underflow.  Every belief is kept
strictly positive by a log floor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

LOG_FLOOR = -700.0
NORM_TOL = 1e-12


def logsumexp(values) -> float:
    v = np.asarray(values, dtype=float)
    top = v.max()
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.sum(np.exp(v - top))))


class BeliefError(ValueError):
    """Raised for malformed grids, beliefs or update inputs."""


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """K representative parameter vectors, shape (K, d)."""

    points: np.ndarray
    truth_index: Optional[int] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise BeliefError("grid points must be a (K, d) array")
        if pts.shape[0] < 2:
            raise BeliefError(f"grid needs K >= 2 points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise BeliefError("grid points must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise BeliefError("grid points must be distinct")
        if self.truth_index is not None and not 0 <= self.truth_index < pts.shape[0]:
            raise BeliefError(f"truth_index {self.truth_index} out of range [0, {pts.shape[0]})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_box(cls, lower, upper, points_per_dim, theta_star=None) -> "ParameterGrid":
        """Cartesian grid over a box, first coordinate varying slowest.

        When ``theta_star`` is given, ``truth_index`` is the nearest point.
        """
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        counts = np.broadcast_to(np.atleast_1d(points_per_dim), lower.shape)
        if lower.shape != upper.shape:
            raise BeliefError("grid lower/upper bounds differ in dimension")
        if np.any(upper <= lower):
            raise BeliefError("grid box needs lower < upper in every dimension")
        axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in zip(lower, upper, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        truth = None
        if theta_star is not None:
            truth = nearest_index(pts, theta_star)
        return cls(pts, truth)

    def with_truth(self, theta_star) -> "ParameterGrid":
        return ParameterGrid(self.points, nearest_index(self.points, theta_star))


def nearest_index(points: np.ndarray, theta) -> int:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[0] != points.shape[1]:
        raise BeliefError(f"parameter has dimension {theta.shape[0]}, grid has {points.shape[1]}")
    return int(np.argmin(np.sum((points - theta) ** 2, axis=1)))


@dataclass(frozen=True, eq=False)
class Belief:
    """A strictly positive probability vector over the grid, in log domain."""

    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.array(self.log_weights, dtype=float).ravel()
        if lw.shape[0] < 2:
            raise BeliefError("a belief needs at least 2 entries")
        if not np.all(np.isfinite(lw)):
            raise BeliefError("belief log-weights must be finite (strict positivity)")
        if lw.min() < LOG_FLOOR:
            raise BeliefError(f"belief entry below log floor {LOG_FLOOR}")
        total = np.exp(logsumexp(lw))
        if abs(total - 1.0) > NORM_TOL:
            raise BeliefError(f"belief sums to {total!r}, not 1")
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def from_log_unnormalized(cls, log_values) -> "Belief":
        """Normalize by log-sum-exp, floor, renormalize."""
        return cls(normalize_log(log_values))

    @classmethod
    def from_probs(cls, probs) -> "Belief":
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0):
            raise BeliefError("probabilities must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls.from_log_unnormalized(np.log(p))

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def __len__(self):
        return self.log_weights.shape[0]

    def __repr__(self):
        return f"Belief(K={len(self)}, probs={np.array2string(self.probs, precision=4, threshold=8)})"


def normalize_log(log_values) -> np.ndarray:
    lw = np.asarray(log_values, dtype=float).ravel()
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise BeliefError("log values must not be NaN or +inf")
    if np.all(lw == -np.inf):
        raise BeliefError("cannot normalize an all-zero vector")
    lw = lw - logsumexp(lw)
    if lw.min() < LOG_FLOOR:
        lw = np.maximum(lw, LOG_FLOOR)
        lw = lw - logsumexp(lw)
        # renormalizing can nudge floored entries a hair below the floor
        lw = np.maximum(lw, LOG_FLOOR)
    return lw


def uniform_prior(grid: ParameterGrid) -> Belief:
    k = grid.size
    return Belief(np.full(k, -np.log(k)))


def gaussian_prior(grid: ParameterGrid, mean, diag_cov) -> Belief:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    var = np.atleast_1d(np.asarray(diag_cov, dtype=float))
    if mean.shape[0] != grid.dim or var.shape[0] != grid.dim:
        raise BeliefError(
            f"prior mean/cov have dimension {mean.shape[0]}/{var.shape[0]}, grid has {grid.dim}"
        )
    if np.any(var <= 0):
        raise BeliefError("prior variances must be positive")
    log_density = -0.5 * np.sum((grid.points - mean) ** 2 / var, axis=1)
    return Belief.from_log_unnormalized(log_density)


def _check_same_size(p: Belief, q: Belief):
    if len(p) != len(q):
        raise BeliefError(f"belief sizes differ: {len(p)} vs {len(q)}")


def kl_divergence(p: Belief, q: Belief) -> float:
    """KL(p || q) in nats."""
    _check_same_size(p, q)
    value = float(np.sum(p.probs * (p.log_weights - q.log_weights)))
    return max(value, 0.0)


def total_variation(p: Belief, q: Belief) -> float:
    _check_same_size(p, q)
    return 0.5 * float(np.sum(np.abs(p.probs - q.probs)))


def private_update(prior: Belief, log_likelihoods) -> Belief:
    """Local Bayes step: posterior proportional to prior times minibatch likelihood."""
    ll = np.asarray(log_likelihoods, dtype=float).ravel()
    if ll.shape[0] != len(prior):
        raise BeliefError(f"likelihood vector has length {ll.shape[0]}, belief has {len(prior)}")
    if not np.all(np.isfinite(ll)):
        raise BeliefError("log-likelihoods must be finite")
    return Belief.from_log_unnormalized(prior.log_weights + ll)


def aggregate(neighbor_beliefs: Mapping[int, Belief], weights: Mapping[int, float]) -> Belief:
    """Log-linear pooling: normalized weighted geometric mean of the beliefs."""
    if set(neighbor_beliefs) != set(weights):
        raise BeliefError(
            f"belief keys {sorted(neighbor_beliefs)} do not match weight keys {sorted(weights)}"
        )
    if not weights:
        raise BeliefError("aggregate needs at least one belief")
    w = {j: float(v) for j, v in weights.items()}
    if any(v < 0 for v in w.values()):
        raise BeliefError("pooling weights must be nonnegative")
    # sorted keys so the floating-point sum is independent of map order
    keys = sorted(w)
    if abs(sum(w[j] for j in keys) - 1.0) > NORM_TOL:
        raise BeliefError(f"pooling weights sum to {sum(w.values())!r}, not 1")
    sizes = {len(neighbor_beliefs[j]) for j in keys}
    if len(sizes) != 1:
        raise BeliefError("pooled beliefs differ in size")
    acc = np.zeros(sizes.pop())
    for j in keys:
        if w[j] > 0:
            acc += w[j] * neighbor_beliefs[j].log_weights
    return Belief.from_log_unnormalized(acc)


def stack_probs(beliefs: Sequence[Belief]) -> np.ndarray:
    return np.stack([b.probs for b in beliefs])
