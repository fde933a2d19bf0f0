from __future__ import annotations

import math

import numpy as np
import pytest

from instances import robust_scenarios
from seqbap import (
    GridMismatch,
    Scenario,
    SimConfig,
    Trajectory,
    build_schedule,
    build_weights,
    sequential_assign,
    simulate,
    verify_run,
)
from seqbap.simulator import UnicycleState, wrap_angle


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert UnicycleState(0, 0, 7.0).theta == pytest.approx(7.0 - 2 * math.pi)


@pytest.mark.parametrize(
    "kwargs",
    [{"dt": 0}, {"v_ref": 20, "v_max": 15}, {"omega_max": 0}, {"disturbance_amplitude": -1},
     {"T": 0}, {"initial_heading": "north"}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


@pytest.fixture(scope="module")
def case():
    return next(robust_scenarios(1, seed=21))


def test_tracks_to_targets_without_disturbance(case):
    sc, result, sched = case
    T = max(result.weights) / 10.0 + 5.0
    trajs = simulate(sc, result, SimConfig(T=T, disturbance_amplitude=0.0))
    for agent, task in result.assignment:
        assert np.linalg.norm(trajs[agent].positions[-1] - sc.targets[task]) < 0.5
    for agent in result.unassigned_agents:
        assert np.array_equal(trajs[agent].positions[-1], sc.initial_positions[agent])


def test_zero_reference_speed_holds_position(case):
    sc, result, _ = case
    trajs = simulate(sc, result, SimConfig(v_ref=0.0, T=2.0))
    for tr in trajs:
        assert np.allclose(tr.positions, sc.initial_positions[tr.agent])


def test_same_seed_is_bit_identical(case):
    sc, result, _ = case
    cfg = SimConfig(T=3.0, rng_seed=5, initial_heading="random")
    a = simulate(sc, result, cfg)
    b = simulate(sc, result, cfg)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))
    c = simulate(sc, result, SimConfig(T=3.0, rng_seed=6, initial_heading="random"))
    assert not all(np.array_equal(x.positions, y.positions) for x, y in zip(a, c))


def test_simulator_is_planar():
    sc = Scenario([(0, 0, 0), (5, 5, 5)], [(1, 1, 1)])
    with pytest.raises(ValueError):
        simulate(sc, sequential_assign(build_weights(sc)), SimConfig(T=1.0))


def test_compliant_run_is_clean(case):
    sc, result, sched = case
    cfg = SimConfig(T=sc.horizon)
    report = verify_run(simulate(sc, result, cfg), sched, sc, v_max=cfg.v_max)
    assert report.all_in_sets and report.no_collisions and report.implication_holds
    assert report.min_clearance > 0
    assert report.membership.shape == (cfg.steps + 1, sc.m)


def test_teleport_is_flagged(case):
    sc, result, sched = case
    trajs = simulate(sc, result, SimConfig(T=2.0))
    agent = result.assignment.pairs[0][0]
    moved = trajs[agent].positions.copy()
    moved[50] += 500.0
    trajs[agent] = Trajectory(agent, trajs[agent].times, moved)
    report = verify_run(trajs, sched, sc)
    assert not report.all_in_sets
    assert not report.membership[50, agent]
    assert (agent, pytest.approx(0.5)) in report.outside


def test_unassigned_overlap_is_out_of_scope():
    # two unassigned agents on top of each other; the assigned one is far away
    sc = Scenario([(0, 0), (100, 100), (100, 100.5)], [(10, 0)], safety=1.0, horizon=2.0)
    result = sequential_assign(build_weights(sc))
    assert result.unassigned_agents == (1, 2)
    sched = build_schedule(result, sc, 10.0)
    report = verify_run(simulate(sc, result, SimConfig(T=2.0)), sched, sc)
    assert report.no_collisions


def test_collision_detected_with_pair_safety():
    sc = Scenario([(0, 0), (50, 0)], [(40, 0)], safety=3.0, horizon=1.0)
    result = sequential_assign(build_weights(sc))
    sched = build_schedule(result, sc, 10.0)
    times = np.linspace(0, 1, 11)
    static = [Trajectory(0, times, np.tile([0.0, 0.0], (11, 1))), Trajectory(1, times, np.tile([2.0, 0.0], (11, 1)))]
    report = verify_run(static, sched, sc)
    assert not report.no_collisions
    assert report.collisions[0][:2] == (1, 0)  # agent 1 is the assigned one


def test_grid_mismatch(case):
    sc, result, sched = case
    trajs = simulate(sc, result, SimConfig(T=1.0))
    trajs[1] = Trajectory(1, trajs[1].times * 1.5, trajs[1].positions)
    with pytest.raises(GridMismatch):
        verify_run(trajs, sched, sc)
    with pytest.raises(GridMismatch):
        verify_run(trajs[:-1], sched, sc)


def test_verifier_handles_three_dimensions():
    rng = np.random.default_rng(8)
    P = rng.uniform(0, 200, (5, 3))
    G = rng.uniform(0, 200, (3, 3))
    sc = Scenario(P, G, safety=1.0, horizon=30.0)
    result = sequential_assign(build_weights(sc))
    sched = build_schedule(result, sc, 10.0)
    times = np.linspace(0, 30, 601)
    trajs = [None] * sc.m
    goals = {a: G[t] for a, t in result.assignment}
    for i in range(sc.m):
        goal = goals.get(i, P[i])
        d = goal - P[i]
        frac = np.minimum(10.0 * times / max(np.linalg.norm(d), 1e-12), 1.0)
        trajs[i] = Trajectory(i, times, P[i] + frac[:, None] * d)
    report = verify_run(trajs, sched, sc, v_max=10.0)
    assert report.all_in_sets and report.no_collisions


def test_implication_on_random_runs():
    for sc, result, sched in robust_scenarios(5, seed=99):
        cfg = SimConfig(T=sc.horizon, rng_seed=3, disturbance_amplitude=0.5, initial_heading="random")
        report = verify_run(simulate(sc, result, cfg), sched, sc)
        assert report.implication_holds
