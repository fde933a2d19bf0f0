from __future__ import annotations

import math

import numpy as np
import pytest

from instances import CASE_LIMITS, CASE_MARGINS, CASE_WEIGHTS, REFERENCE, robust_scenarios
from seqbap import (
    MarginTooSmall,
    Metric,
    NotRobust,
    Scenario,
    WeightMatrix,
    build_schedule,
    build_weights,
    nonemptiness_check,
    safe_membership,
    safe_set,
    sequential_assign,
)
from seqbap.safesets import check_grid, radius_goal, radius_start
from seqbap.sequential import OrderRecord, SequentialResult


def case_result():
    orders = [OrderRecord((k, k), w, mu) for k, (w, mu) in enumerate(zip(CASE_WEIGHTS, CASE_MARGINS))]
    return SequentialResult.from_orders(8, orders)


def test_case_study_limits():
    sched = build_schedule(case_result(), 3.0)
    assert sched.mu == pytest.approx(9.02)
    assert np.allclose(sched.A, CASE_LIMITS, atol=0.02)
    assert sched.offset == pytest.approx(3.01)
    assert all(a >= b for a, b in zip(sched.A, sched.A[1:]))


def test_limits_by_hand():
    # A_k = min over l <= k of w_l + mu_l - (mu + s) / 2 with mu = 2, s = 1
    sched = build_schedule(sequential_assign(WeightMatrix(REFERENCE)), 1.0)
    assert sched.A == (5.5, 2.5, 2.5)
    assert sched.offset == 0.5


def test_margin_gate_names_mu_and_s():
    result = sequential_assign(WeightMatrix(REFERENCE))
    with pytest.raises(MarginTooSmall, match=r"s=2.*mu=2"):
        build_schedule(result, 2.0)
    with pytest.raises(MarginTooSmall):
        build_schedule(result, 5.0)


def test_zero_margin_refused():
    result = sequential_assign(WeightMatrix([[5], [3], [3]]))
    with pytest.raises(NotRobust):
        build_schedule(result, 0.0)


def test_infinite_margins_accept_any_safety():
    orders = [OrderRecord((0, 0), 4.0, math.inf)]
    result = SequentialResult.from_orders(2, orders)
    sched = build_schedule(result, 1e6)
    assert sched.mu == math.inf


def test_radii_follow_schedule():
    sched = build_schedule(sequential_assign(WeightMatrix(REFERENCE)), 1.0, v_ref=2.0)
    # agent 1 is order 0 with A = 5.5; agent 2 is unassigned and capped by A_n = 2.5
    assert radius_start(sched, 1, 0.0) == 0.5
    assert radius_start(sched, 1, 1.0) == 2.5
    assert radius_start(sched, 1, 10.0) == 5.5
    assert radius_start(sched, 2, 10.0) == 2.5
    assert radius_goal(sched, 0, 0.0) == 5.5
    assert radius_goal(sched, 0, 10.0) == 0.5
    assert np.isnan(sched.goal_radii([1.0])[0, 2])
    # the radii always sum to A_k + offset = w + mu_k - s
    for t in np.linspace(0, 5, 11):
        assert radius_start(sched, 1, t) + radius_goal(sched, 0, t) == pytest.approx(6.0)


def test_check_grid_keeps_endpoints():
    grid = check_grid(1.02, 0.05)
    assert grid[0] == 0 and grid[-1] == 1.02
    assert np.all(np.diff(grid) > 0)
    with pytest.raises(ValueError):
        check_grid(1.0, 0)


def two_agent_scenario(metric="euclidean"):
    sc = Scenario([(0, 0), (30, 0)], [(10, 0)], safety=1.0, metric=Metric(metric), horizon=5.0)
    result = sequential_assign(build_weights(sc))
    return sc, result, build_schedule(result, sc, 10.0)


def test_membership_is_strict():
    sc, result, sched = two_agent_scenario()
    # mu = 10, so the start radius at t = 0 is (mu - s) / 2 = 4.5
    assert safe_membership(sched, sc, 0, (4.4, 0), 0.0)
    assert not safe_membership(sched, sc, 0, (4.5, 0), 0.0)
    with pytest.raises(ValueError):
        safe_membership(sched, sc, 0, (1, 2, 3), 0.0)


def test_midpoint_is_safe_when_radii_meet():
    sc, result, sched = two_agent_scenario()
    k = 0
    w, mu, s = result.weights[k], sched.mu, sched.s
    half = 0.5 * (w + mu - s)
    t = (half - sched.offset) / sched.v_ref
    assert radius_start(sched, 0, t) == pytest.approx(half)
    assert radius_goal(sched, k, t) == pytest.approx(half)
    assert safe_membership(sched, sc, 0, (5, 0), t)


@pytest.mark.parametrize("metric", ["euclidean", "manhattan", "chebyshev"])
def test_disjoint_sets_keep_distance(metric):
    # points drawn from the safe sets of an assigned agent and any other agent
    # are always more than s apart
    rng = np.random.default_rng(9)
    for sc, result, sched in robust_scenarios(10, seed=3):
        sc = Scenario(sc.initial_positions, sc.targets, sc.safety, Metric(metric), sc.horizon)
        result = sequential_assign(build_weights(sc))
        if not all(mu > 0 for mu in result.margins) or not 3.0 < result.mu:
            continue
        sched = build_schedule(result, sc, 10.0)
        for t in rng.uniform(0, sc.horizon, size=5):
            points = {}
            for i in range(sc.m):
                box = safe_set(sched, sc, i, t)
                centre, r = box.center_start, box.radius_start
                cand = centre + rng.uniform(-r, r, size=(400, 2))
                inside = [p for p in cand if box.contains(p, sc.metric)]
                points[i] = np.array(inside[:40]) if inside else np.empty((0, 2))
            for agent, _ in sched.edges:
                for other in range(sc.m):
                    if other == agent or not len(points[agent]) or not len(points[other]):
                        continue
                    d = sc.metric.pairwise(points[agent], points[other])
                    assert d.min() > sc.safety_between(agent, other)


def test_ball_separation_lemma():
    # strict balls with radii summing to at most d(c1, c2) - s keep points more than s apart
    rng = np.random.default_rng(4)
    for kind in ("euclidean", "manhattan", "chebyshev"):
        metric = Metric(kind)
        for _ in range(2000):
            c1, c2 = rng.uniform(-50, 50, size=(2, 2))
            s = rng.uniform(0, 5)
            gap = metric(c1, c2) - s
            if gap <= 0:
                continue
            r1 = rng.uniform(0, gap)
            r2 = gap - r1
            p = c1 + rng.uniform(-r1, r1, size=2)
            q = c2 + rng.uniform(-r2, r2, size=2)
            if metric(c1, p) < r1 and metric(c2, q) < r2:
                assert metric(p, q) > s


def test_safe_sets_are_convex():
    rng = np.random.default_rng(2)
    sc, result, sched = next(robust_scenarios(1, seed=11))
    for _ in range(300):
        i = int(rng.integers(sc.m))
        t = float(rng.uniform(0, sc.horizon))
        box = safe_set(sched, sc, i, t)
        r = box.radius_start
        p, q = box.center_start + rng.uniform(-r, r, size=(2, 2))
        if box.contains(p, sc.metric) and box.contains(q, sc.metric):
            lam = rng.uniform()
            assert box.contains(lam * p + (1 - lam) * q, sc.metric)


def test_nonemptiness_on_random_scenarios():
    for sc, result, sched in robust_scenarios(20, seed=5):
        assert all(nonemptiness_check(sched, sc).values())
