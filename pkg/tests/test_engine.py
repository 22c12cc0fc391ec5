import numpy as np
import pytest

from conftest import small_config
from decbayes.config import parse_config
from decbayes.data import sample_minibatch
from decbayes.engine import (
    SimulationError,
    build_data,
    build_problem,
    initial_state,
    run_round,
    run_simulation,
)
from decbayes.likelihood import log_likelihood_over_grid


def sequential_bayes(problem, config, agent):
    """Plain-numpy posterior after T minibatch updates, no pooling."""
    log_p = problem.prior.log_weights.copy()
    for t in range(1, config.rounds + 1):
        batch = sample_minibatch(problem.datasets[agent], config.batch_size, t, config.seed)
        log_p = log_p + log_likelihood_over_grid(problem.model, batch, problem.grid)
        log_p = log_p - np.log(np.sum(np.exp(log_p - log_p.max()))) - log_p.max()
    return np.exp(log_p)


def test_no_collab_is_sequential_bayes():
    cfg = small_config(mode="no_collab")
    res = run_simulation(cfg)
    for i in range(cfg.m):
        np.testing.assert_allclose(res.final_beliefs[i].probs, sequential_bayes(res.problem, cfg, i), atol=1e-9)
    assert all(rec.selected == (None,) * cfg.m for rec in res.records)


def test_single_agent_baygo_equals_no_collab():
    cfg = small_config(m=1)
    a = run_simulation(cfg, "baygo")
    b = run_simulation(cfg, "no_collab")
    np.testing.assert_array_equal(a.final_beliefs[0].log_weights, b.final_beliefs[0].log_weights)
    assert a.records[-1].selected == (None,)


def test_two_agent_baygo_equals_fully_connected():
    cfg = small_config(m=2)
    a = run_simulation(cfg, "baygo")
    b = run_simulation(cfg, "fully_connected")
    for x, y in zip(a.final_beliefs, b.final_beliefs):
        np.testing.assert_allclose(x.log_weights, y.log_weights, rtol=0, atol=1e-12)
    assert all(rec.selected == (1, 0) for rec in a.records)


def test_identical_data_stays_symmetric():
    cfg = small_config(m=5)
    problem = build_problem(cfg, "baygo")

    def same_for_all(dataset, batch_size, t, seed):
        return sample_minibatch(problem.datasets[0], batch_size, t, seed)

    state = initial_state(problem, cfg, "baygo")
    for _ in range(cfg.rounds):
        state, rec = run_round(state, problem, cfg, "baygo", sampler=same_for_all)
        assert np.all(rec.kl_table == 0.0)
        assert rec.consensus_gap == 0.0
    first = state.beliefs[0].log_weights
    for b in state.beliefs[1:]:
        np.testing.assert_array_equal(b.log_weights, first)


@pytest.mark.parametrize("mode", ["baygo", "fully_connected", "star_posm", "star_negm", "no_collab", "centralized"])
def test_deterministic(mode):
    cfg = small_config()
    a = run_simulation(cfg, mode)
    b = run_simulation(cfg, mode)
    for x, y in zip(a.final_beliefs, b.final_beliefs):
        np.testing.assert_array_equal(x.log_weights, y.log_weights)
    assert [r.mse for r in a.records] == [r.mse for r in b.records]
    assert len(a.records) == cfg.rounds


def test_single_round():
    cfg = small_config(rounds=1)
    res = run_simulation(cfg)
    assert len(res.records) == 1 and res.final.t == 1
    state = res.final
    with pytest.raises(SimulationError):
        run_round(state, res.problem, cfg)


def test_agent_order_does_not_matter():
    cfg = small_config(m=6)
    problem = build_problem(cfg, "baygo")
    fwd = rev = initial_state(problem, cfg, "baygo")
    for _ in range(cfg.rounds):
        fwd, rf = run_round(fwd, problem, cfg, order=range(6))
        rev, rr = run_round(rev, problem, cfg, order=[3, 5, 0, 2, 4, 1])
        assert rf.selected == rr.selected
    for x, y in zip(fwd.beliefs, rev.beliefs):
        np.testing.assert_array_equal(x.log_weights, y.log_weights)


def test_bad_order():
    cfg = small_config()
    problem = build_problem(cfg, "baygo")
    with pytest.raises(SimulationError):
        run_round(initial_state(problem, cfg, "baygo"), problem, cfg, order=[0, 0, 1, 2])


def test_round_reads_only_previous_state():
    cfg = small_config(m=4)
    problem = build_problem(cfg, "baygo")
    state, _ = run_round(initial_state(problem, cfg, "baygo"), problem, cfg)
    snapshot = [b.log_weights.copy() for b in state.beliefs]
    seen = []

    def logging_sampler(dataset, batch_size, t, seed):
        # every local update must happen before any pooled belief exists
        seen.append(dataset.agent_id)
        return sample_minibatch(dataset, batch_size, t, seed)

    new, _ = run_round(state, problem, cfg, sampler=logging_sampler, order=[2, 0, 3, 1])
    assert seen == [2, 0, 3, 1]
    for before, b in zip(snapshot, state.beliefs):
        np.testing.assert_array_equal(before, b.log_weights)
    assert new.t == state.t + 1


def test_noiseless_no_collab_truth_mass_monotone():
    cfg = small_config(mode="no_collab", rounds=15, **{"data.noise_std": 0.0, "noise_std": 0.5})
    res = run_simulation(cfg)
    mass = np.array([r.belief_at_truth for r in res.records])
    assert np.all(np.diff(mass, axis=0) >= -1e-12)
    assert mass[-1].min() > mass[0].min()


def test_centralized_beats_isolated_restricted_agents(default_config_path):
    cfg = parse_config(default_config_path, {"rounds": 30})
    shared = build_data(cfg)
    central = run_simulation(cfg, "centralized", shared).records[-1].mse[0]
    alone = run_simulation(cfg, "no_collab", shared).records[-1].mse
    assert central <= min(alone[1:])


def test_centralized_pools_data():
    cfg = small_config()
    problem = build_problem(cfg, "centralized")
    assert problem.m == 1
    assert len(problem.datasets[0]) == cfg.m * cfg.data.samples_per_agent


def test_star_topologies():
    cfg = small_config(m=4)
    assert build_problem(cfg, "star_posm").topology.center == cfg.data.informative_agent
    assert build_problem(cfg, "star_negm").topology.center == cfg.negm_center != cfg.data.informative_agent


def test_records_are_complete():
    cfg = small_config(rounds=3)
    res = run_simulation(cfg)
    rec = res.records[0]
    assert rec.m == cfg.m
    assert len(rec.bound) == len(rec.k_theta) == cfg.m
    assert all(0.0 <= v <= 1.0 for v in rec.belief_at_truth)
    assert all(s is not None and s != i for i, s in enumerate(rec.selected))
    assert len(res.final.overlay) == cfg.rounds
