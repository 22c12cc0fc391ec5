"""Synchronous-round simulation of decentralized learning with neighbor selection.

Each round has three barrier-separated phases:

1. every agent draws a minibatch and forms its intermediate belief from its
   own belief of the previous round;
2. agents exchange intermediate beliefs with their physical neighbors and, in
   ``baygo`` mode, re-select the single most divergent neighbor;
3. every agent pools the intermediate beliefs of itself and its weighted
   neighbors.

Agents only ever read the previous round's state, so the per-agent loops
inside a phase can run in any order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import data as data_mod
from .belief import Belief, ParameterGrid, aggregate, gaussian_prior, private_update, uniform_prior
from .config import CsvData, GaussianPrior, SimulationConfig
from .graph import (
    OverlaySelection,
    Topology,
    WeightMatrix,
    check_b_window_connectivity,
    optimize_weights,
    read_edge_list,
    static_weights,
)
from .likelihood import GaussianLinearModel, ObservationBatch, log_likelihood_over_grid
from .metrics import RoundRecord, consensus_gap, kl_table, test_mse, error_bound_diagnostic
from .rng import Purpose, substream

log = logging.getLogger(__name__)

Sampler = Callable[[data_mod.AgentDataset, int, int, int], ObservationBatch]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Problem:
    """Everything a run needs besides the evolving state."""

    grid: ParameterGrid
    model: GaussianLinearModel
    datasets: tuple[data_mod.AgentDataset, ...]
    test: ObservationBatch
    topology: Topology
    prior: Belief

    @property
    def m(self) -> int:
        return len(self.datasets)


@dataclass(frozen=True)
class SimulationState:
    t: int
    beliefs: tuple[Belief, ...]
    intermediate: tuple[Belief, ...]
    weights: WeightMatrix
    overlay: tuple[frozenset, ...] = field(default=())


@dataclass(frozen=True)
class SimulationResult:
    mode: str
    records: tuple[RoundRecord, ...]
    final: SimulationState
    problem: Problem

    @property
    def final_beliefs(self) -> tuple[Belief, ...]:
        return self.final.beliefs

    def connectivity(self, b: int) -> list[bool]:
        return check_b_window_connectivity(self.final.overlay, b, self.problem.m)


def build_grid(config: SimulationConfig, theta_star=None) -> ParameterGrid:
    g = config.grid
    return ParameterGrid.from_box(g.lower, g.upper, g.points, theta_star)


def build_prior(config: SimulationConfig, grid: ParameterGrid) -> Belief:
    if isinstance(config.prior, GaussianPrior):
        return gaussian_prior(grid, config.prior.mean, config.prior.diag_cov)
    return uniform_prior(grid)


def build_data(config: SimulationConfig):
    """Agent datasets, test set and (for synthetic data) the true parameter."""
    d = config.data
    if isinstance(d, CsvData):
        batch = data_mod.load_csv(d.path, d.feature_columns, d.label_column)
        train, test = data_mod.train_test_split(batch, d.test_fraction, d.seed)
        return data_mod.partition_by_feature(train, config.m, d.informative_agent, d.threshold), test, None
    spec = data_mod.SyntheticSpec(
        theta_star=tuple(d.theta_star),
        noise_std=d.noise_std,
        informative_range=tuple(d.informative_range),
        restricted_range=tuple(d.restricted_range),
        informative_agent=d.informative_agent,
        samples_per_agent=d.samples_per_agent,
        seed=d.seed,
    )
    return data_mod.generate_synthetic(spec, config.m), data_mod.generate_test_set(spec, d.test_size), d.theta_star


def build_topology(config: SimulationConfig, mode: str, m: int) -> Topology:
    if mode == "star_posm":
        return Topology.star(m, config.data.informative_agent)
    if mode == "star_negm":
        return Topology.star(m, config.negm_center)
    if mode in ("fully_connected", "centralized") or config.topology.kind == "complete":
        return Topology.complete(m)
    return Topology.from_edges(m, read_edge_list(config.topology.path))


def build_problem(config: SimulationConfig, mode: Optional[str] = None, shared=None) -> Problem:
    """Assemble the problem for ``mode``; ``shared`` reuses prebuilt data."""
    mode = mode or config.mode
    datasets, test, theta_star = shared if shared is not None else build_data(config)
    grid = build_grid(config, theta_star)
    model = GaussianLinearModel(config.noise_std, intercept=True)
    if mode == "centralized":
        datasets = [data_mod.pooled(datasets, 0)]
    m = len(datasets)
    if mode in ("star_posm", "star_negm") and m < 2:
        raise SimulationError(f"{mode} needs at least two agents")
    topology = build_topology(config, mode, m)
    return Problem(grid, model, tuple(datasets), test, topology, build_prior(config, grid))


def initial_weights(problem: Problem, config: SimulationConfig, mode: str) -> WeightMatrix:
    if mode == "baygo":
        return WeightMatrix(np.eye(problem.m), config.delta)
    if mode == "centralized":
        return static_weights(problem.topology, "no_collab", config.delta)
    center = problem.topology.center if mode.startswith("star") else None
    return static_weights(problem.topology, mode, config.delta, center)


def initial_state(problem: Problem, config: SimulationConfig, mode: str) -> SimulationState:
    beliefs = tuple(problem.prior for _ in range(problem.m))
    return SimulationState(0, beliefs, beliefs, initial_weights(problem, config, mode), ())


def _agent_order(m: int, order: Optional[Sequence[int]]) -> list[int]:
    if order is None:
        return list(range(m))
    order = list(order)
    if sorted(order) != list(range(m)):
        raise SimulationError("agent order must be a permutation of range(m)")
    return order


def run_round(
    state: SimulationState,
    problem: Problem,
    config: SimulationConfig,
    mode: Optional[str] = None,
    sampler: Sampler = data_mod.sample_minibatch,
    order: Optional[Sequence[int]] = None,
) -> tuple[SimulationState, RoundRecord]:
    mode = mode or config.mode
    if state.t >= config.rounds:
        raise SimulationError(f"round {state.t + 1} exceeds configured T={config.rounds}")
    t = state.t + 1
    m = problem.m
    agents = _agent_order(m, order)
    batch_size = config.batch_size * (config.m if mode == "centralized" else 1)

    # phase 1: local Bayesian update from the previous round's beliefs
    tilde: list[Optional[Belief]] = [None] * m
    for i in agents:
        batch = sampler(problem.datasets[i], batch_size, t, config.seed)
        ll = log_likelihood_over_grid(problem.model, batch, problem.grid)
        tilde[i] = private_update(state.beliefs[i], ll)

    # phase 2: exchange with physical neighbors and (baygo) reselect weights
    kls = kl_table(tilde)
    if mode == "baygo":
        rows = np.zeros((m, m))
        chosen: list[Optional[int]] = [None] * m
        for i in agents:
            nbrs = problem.topology.physical_neighbors[i]
            rng = substream(config.seed, Purpose.TIEBREAK, i, t)
            rows[i], chosen[i] = optimize_weights(i, m, {j: kls[i, j] for j in nbrs}, config.delta, rng)
        weights = WeightMatrix(rows, config.delta)
        overlay = OverlaySelection.from_choices(chosen).edges
    else:
        weights = state.weights
        chosen = [None] * m
        overlay = frozenset(weights.edges())

    # phase 3: log-linear pooling
    beliefs: list[Optional[Belief]] = [None] * m
    for i in agents:
        row = weights.rows[i]
        support = [j for j in range(m) if row[j] > 0]
        beliefs[i] = aggregate({j: tilde[j] for j in support}, {j: row[j] for j in support})

    beliefs_t = tuple(beliefs)
    tilde_t = tuple(tilde)
    record = _make_record(t, beliefs_t, tilde_t, weights, chosen, kls, problem, config)
    new_state = SimulationState(t, beliefs_t, tilde_t, weights, state.overlay + (overlay,))
    return new_state, record


def _make_record(t, beliefs, tilde, weights, chosen, kls, problem: Problem, config: SimulationConfig) -> RoundRecord:
    grid = problem.grid
    mse = tuple(test_mse(b, grid, problem.model, problem.test) for b in beliefs)
    at_truth = bound = k_theta = None
    if grid.truth_index is not None:
        at_truth = tuple(float(b.probs[grid.truth_index]) for b in beliefs)
        diags = [
            error_bound_diagnostic(i, beliefs[i], tilde, weights.rows[i], grid, config.epsilon)
            for i in range(len(beliefs))
        ]
        bound = tuple(d.bound for d in diags)
        k_theta = tuple(d.k_theta for d in diags)
    return RoundRecord(
        t=t,
        mse=mse,
        belief_at_truth=at_truth,
        selected=tuple(chosen),
        kl_table=kls,
        consensus_gap=consensus_gap(beliefs),
        bound=bound,
        k_theta=k_theta,
    )


def run_simulation(config: SimulationConfig, mode: Optional[str] = None, shared=None, problem: Optional[Problem] = None) -> SimulationResult:
    """Run all T rounds for one mode; deterministic in the config."""
    mode = mode or config.mode
    if problem is None:
        problem = build_problem(config, mode, shared)
    state = initial_state(problem, config, mode)
    records = []
    for _ in range(config.rounds):
        state, rec = run_round(state, problem, config, mode)
        records.append(rec)
    log.debug("mode %s finished %d rounds, final gap %.3g", mode, config.rounds, records[-1].consensus_gap)
    return SimulationResult(mode, tuple(records), state, problem)
