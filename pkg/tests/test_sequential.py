from __future__ import annotations

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from instances import REFERENCE
from seqbap import (
    SubgraphSpec,
    WeightMatrix,
    bottleneck_value,
    check_prop2,
    check_prop3,
    is_robust_lexicographic,
    lex_compare,
    max_margin_edges_and_margin,
    sequential_assign,
)
from seqbap.oracle import brute_lex_optimal, enumerate_spec
from seqbap.sequential import TIE_BREAKS, OrderRecord, SequentialResult, hungarian, lex_optimal_support


@st.composite
def weight_matrices(draw, max_m=6, high=20):
    m = draw(st.integers(2, max_m))
    n = draw(st.integers(1, m))
    rows = draw(st.lists(st.lists(st.integers(0, high), min_size=n, max_size=n), min_size=m, max_size=m))
    return WeightMatrix(rows)


def remaining_spec(W, orders):
    used_a = {o.agent for o in orders}
    used_t = {o.task for o in orders}
    return SubgraphSpec.complete(
        [a for a in range(W.m) if a not in used_a], [t for t in range(W.n) if t not in used_t]
    )


def test_reference_orders():
    W = WeightMatrix(REFERENCE)
    r = sequential_assign(W)
    assert [o.edge for o in r.orders] == [(1, 1), (3, 0), (0, 2)]
    assert r.weights == (4, 2, 2)
    assert r.margins == (3, 2, 6)
    assert r.orders[1].tie_count == 2
    assert r.unassigned_agents == (2,)
    assert r.mu == 2
    assert is_robust_lexicographic(r)
    assert check_prop2(r, W) == [] and check_prop3(r, W) == []


def test_single_task_order():
    W = WeightMatrix([[5], [3], [3]])
    r = sequential_assign(W)
    assert len(r.orders) == 1
    assert r.orders[0].weight == 3 and r.orders[0].margin == 0
    W = WeightMatrix([[5], [3], [4]])
    assert sequential_assign(W).margins == (1,)


def test_square_last_order_is_infinite():
    r = sequential_assign(WeightMatrix([[1, 5], [5, 1]]))
    assert r.margins[-1] == math.inf and r.mu == 4


def test_unknown_tie_break():
    with pytest.raises(ValueError):
        sequential_assign(WeightMatrix(REFERENCE), tie_break="random")


def test_from_orders_rejects_reuse():
    with pytest.raises(ValueError):
        SequentialResult.from_orders(3, [OrderRecord((0, 0), 1, 1), OrderRecord((0, 1), 1, 1)])


def test_lex_compare():
    assert lex_compare((4, 2, 2), (4, 3, 1)) == -1
    assert lex_compare((5, 0), (4, 4)) == 1
    assert lex_compare((1.0, 0.5), (1.0 + 1e-12, 0.5)) == 0
    with pytest.raises(ValueError):
        lex_compare((1, 2), (2, 1))
    with pytest.raises(ValueError):
        lex_compare((2, 1), (2,))


def test_zero_margin_tie_prefers_lexicographic_optimum():
    # all three weight-8 edges have zero margin; fixing (0, 0) would leave
    # (8, 8) and let agent 3 undercut task 0, fixing (1, 1) leaves (8, 7)
    W = WeightMatrix([[8, 100], [100, 8], [100, 8], [7, 100]])
    r = sequential_assign(W)
    assert r.margins[0] == 0 and r.orders[0].tie_count == 3
    assert [o.edge for o in r.orders] == [(1, 1), (3, 0)]
    assert check_prop2(r, W) == [] and check_prop3(r, W) == []


def test_hungarian_duals():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 10))
        cost = rng.integers(0, 6, size=(n, n)).astype(float)
        row_of_col, u, v = hungarian(cost)
        rows, cols = linear_sum_assignment(cost)
        assert cost[row_of_col, np.arange(n)].sum() == cost[rows, cols].sum()
        assert np.all(cost - u[:, None] - v[None, :] >= 0)
        assert np.array_equal(cost[row_of_col, np.arange(n)], u[row_of_col] + v)


@settings(max_examples=150, deadline=None)
@given(weight_matrices(high=5))
def test_support_matchings_are_lex_optima(W):
    from seqbap.oracle import enumerate_admissible

    support = lex_optimal_support(W.w, bottleneck_value(W.full(), W))
    lex = brute_lex_optimal(W)
    # an agent left without a task must be able to take a dummy column
    on_support = {
        a
        for a in enumerate_admissible(W.m, W.n)
        if all(support[e] for e in a) and all(support[i, W.n:].any() for i in range(W.m) if i not in a.agents)
    }
    assert on_support == set(lex.optima)


@settings(max_examples=300, deadline=None)
@given(weight_matrices())
def test_orders_match_core_subproblems(W):
    r = sequential_assign(W)
    for k, o in enumerate(r.orders):
        spec = remaining_spec(W, r.orders[:k])
        assert o.weight == bottleneck_value(spec, W)
        edges, margin = max_margin_edges_and_margin(spec, W)
        assert o.edge in edges
        assert o.margin == margin
        assert o.tie_count == len(edges)


@settings(max_examples=300, deadline=None)
@given(weight_matrices())
def test_each_order_extends_to_an_optimum(W):
    r = sequential_assign(W)
    for k, o in enumerate(r.orders):
        spec = remaining_spec(W, r.orders[:k])
        value = bottleneck_value(spec, W)
        assert any(o.edge in a and max(a.weights(W)) == value for a in enumerate_spec(spec))


@settings(max_examples=300, deadline=None)
@given(weight_matrices())
def test_robust_result_is_unique_lex_optimum(W):
    r = sequential_assign(W)
    if not is_robust_lexicographic(r):
        return
    lex = brute_lex_optimal(W)
    assert lex.unique
    assert lex.assignment == r.assignment
    assert tuple(sorted(r.weights, reverse=True)) == lex.sequence


@settings(max_examples=200, deadline=None)
@given(weight_matrices())
def test_tie_break_irrelevant_when_robust(W):
    results = [sequential_assign(W, tie_break=name) for name in TIE_BREAKS]
    # tied positive-margin edges all lie in the unique optimum; only their
    # fixing order may differ
    if is_robust_lexicographic(results[0]):
        assert all(r.assignment == results[0].assignment for r in results)
        assert all(r.weights == results[0].weights for r in results)


@settings(max_examples=300, deadline=None)
@given(weight_matrices(high=5), st.sampled_from(sorted(TIE_BREAKS)))
def test_result_is_always_a_lex_optimum(W, tie_break):
    r = sequential_assign(W, tie_break=tie_break)
    assert r.assignment in brute_lex_optimal(W).optima


@settings(max_examples=300, deadline=None)
@given(weight_matrices(high=5))
def test_swap_and_unassigned_bounds(W):
    r = sequential_assign(W)
    assert check_prop2(r, W) == []
    assert check_prop3(r, W) == []


@settings(max_examples=100, deadline=None)
@given(weight_matrices(), st.floats(0.1, 10))
def test_scaling_invariance(W, c):
    r1 = sequential_assign(W)
    r2 = sequential_assign(WeightMatrix(W.w * c))
    assert [o.edge for o in r1.orders] == [o.edge for o in r2.orders]


def test_weights_non_increasing_and_bottleneck_first():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = int(rng.integers(2, 30))
        n = int(rng.integers(1, m + 1))
        W = WeightMatrix(rng.random((m, n)) * 100)
        r = sequential_assign(W)
        assert all(a >= b for a, b in zip(r.weights, r.weights[1:]))
        assert r.weights[0] == bottleneck_value(W.full(), W)


def test_large_integer_ties_finish_quickly():
    rng = np.random.default_rng(0)
    W = WeightMatrix(rng.integers(0, 10, size=(60, 60)))
    start = time.perf_counter()
    r = sequential_assign(W)
    assert time.perf_counter() - start < 5
    assert len(r.orders) == 60
