"""Sequential bottleneck assignment with per-order robustness margins.

At order k the complete subgraph of the remaining agents and tasks is solved
as a bottleneck assignment problem; a maximum-margin bottleneck edge is fixed
and its agent and task are removed before the next order.

The per-order subproblems share one matching that is repaired incrementally:
a minimax alternating-path search (a Dijkstra variant where the path cost is
the largest non-matching edge weight) both re-saturates the matching after
vertex deletions and lowers its largest edge until no improving path exists.
Deleting a matched edge ``e`` and searching a minimax path from its freed
task yields ``B(E \\ {e}) = max(B(E), path cost)`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Assignment, Edge, WeightMatrix, hopcroft_karp, weights_equal


@dataclass(frozen=True)
class OrderRecord:
    edge: Edge
    weight: float
    margin: float
    tie_count: int = 1

    @property
    def agent(self) -> int:
        return self.edge[0]

    @property
    def task(self) -> int:
        return self.edge[1]


@dataclass(frozen=True)
class SequentialResult:
    m: int
    n: int
    orders: tuple[OrderRecord, ...]
    assignment: Assignment
    unassigned_agents: tuple[int, ...]

    @classmethod
    def from_orders(cls, m: int, orders: Sequence[OrderRecord]) -> "SequentialResult":
        orders = tuple(orders)
        assigned = {o.agent for o in orders}
        if len(assigned) != len(orders) or len({o.task for o in orders}) != len(orders):
            raise ValueError("orders must use pairwise distinct agents and tasks")
        return cls(
            m=m,
            n=len(orders),
            orders=orders,
            assignment=Assignment(tuple(o.edge for o in orders)),
            unassigned_agents=tuple(a for a in range(m) if a not in assigned),
        )

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(o.weight for o in self.orders)

    @property
    def margins(self) -> tuple[float, ...]:
        return tuple(o.margin for o in self.orders)

    @property
    def mu(self) -> float:
        """Smallest margin, ignoring infinite ones unless all are infinite."""
        finite = [mu for mu in self.margins if not math.isinf(mu)]
        return min(finite) if finite else math.inf

    def order_of(self, agent: int) -> int | None:
        """0-based order index of an assigned agent, ``None`` if unassigned."""
        for k, o in enumerate(self.orders):
            if o.agent == agent:
                return k
        return None


class _Matcher:
    """Task-saturating matching on the active complete subgraph."""

    def __init__(self, w: np.ndarray):
        self.w = w
        m, n = w.shape
        self.agent_on = np.ones(m, dtype=bool)
        self.task_on = np.ones(n, dtype=bool)
        self.match_task = np.full(n, -1, dtype=np.int64)
        self.match_agent = np.full(m, -1, dtype=np.int64)

    def remove(self, agent: int, task: int) -> None:
        mate = self.match_task[task]
        if mate >= 0:
            self.match_agent[mate] = -1
        self.match_task[task] = -1
        partner = self.match_agent[agent]
        if partner >= 0:
            self.match_task[partner] = -1
        self.match_agent[agent] = -1
        self.agent_on[agent] = False
        self.task_on[task] = False

    def free_tasks(self) -> np.ndarray:
        return np.flatnonzero(self.task_on & (self.match_task < 0))

    def search(self, sources: Sequence[int], banned: Edge | None = None):
        """Minimax alternating path from ``sources`` to a free active agent.

        Returns ``(cost, end_agent, pred)``; cost is ``inf`` when no path exists.
        """
        w = self.w
        m, n = w.shape
        dist_task = np.full(n, math.inf)
        dist_task[list(sources)] = -math.inf
        done = ~self.task_on.copy()
        dist_agent = np.full(m, math.inf)
        pred = np.full(m, -1, dtype=np.int64)
        free_agent = self.agent_on & (self.match_agent < 0)
        best, best_agent = math.inf, -1
        while True:
            frontier = np.where(done, math.inf, dist_task)
            j = int(np.argmin(frontier))
            d = frontier[j]
            if d == math.inf or d >= best:
                break
            done[j] = True
            cost = np.maximum(d, w[:, j])
            cost[~self.agent_on] = math.inf
            if self.match_task[j] >= 0:
                cost[self.match_task[j]] = math.inf
            if banned is not None and banned[1] == j:
                cost[banned[0]] = math.inf
            better = cost < dist_agent
            if not better.any():
                continue
            dist_agent[better] = cost[better]
            pred[better] = j
            hits = better & free_agent
            if hits.any():
                cand = np.where(hits, dist_agent, math.inf)
                a = int(np.argmin(cand))
                if cand[a] < best:
                    best, best_agent = float(cand[a]), a
            matched = np.flatnonzero(better & ~free_agent)
            if matched.size:
                nxt = self.match_agent[matched]
                c = cost[matched]
                upd = (~done[nxt]) & (c < dist_task[nxt])
                dist_task[nxt[upd]] = c[upd]
        return best, best_agent, pred

    def augment(self, end_agent: int, pred: np.ndarray) -> None:
        a = end_agent
        while True:
            j = int(pred[a])
            prev = int(self.match_task[j])
            self.match_task[j] = a
            self.match_agent[a] = j
            if prev < 0:
                return
            a = prev

    def saturate(self) -> None:
        while True:
            free = self.free_tasks()
            if free.size == 0:
                return
            cost, end, pred = self.search(free)
            if end < 0:
                raise RuntimeError("complete subgraph unexpectedly infeasible")
            self.augment(end, pred)

    def _matched_weights(self) -> tuple[np.ndarray, np.ndarray]:
        tasks = np.flatnonzero(self.task_on)
        return tasks, self.w[self.match_task[tasks], tasks]

    def optimize(self) -> float:
        """Lower the largest matched weight until no improving path exists."""
        self.saturate()
        while True:
            tasks, ws = self._matched_weights()
            idx = int(np.argmax(ws))
            top, j = float(ws[idx]), int(tasks[idx])
            a = int(self.match_task[j])
            self.match_task[j] = -1
            self.match_agent[a] = -1
            cost, end, pred = self.search([j], banned=(a, j))
            if cost < top:
                self.augment(end, pred)
            else:
                self.match_task[j] = a
                self.match_agent[a] = j
                return top

    def copy(self) -> "_Matcher":
        other = _Matcher.__new__(_Matcher)
        other.w = self.w
        for name in ("agent_on", "task_on", "match_task", "match_agent"):
            setattr(other, name, getattr(self, name).copy())
        return other

    def value_without(self, edge: Edge, value: float) -> float:
        """Bottleneck of the active subgraph with ``edge`` deleted."""
        a, j = edge
        if self.match_task[j] != a:
            return value
        self.match_task[j] = -1
        self.match_agent[a] = -1
        cost, _, _ = self.search([j], banned=edge)
        self.match_task[j] = a
        self.match_agent[a] = j
        return max(value, cost)


def hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Min-cost perfect matching of a square matrix with dual potentials.

    Returns ``(row_of_col, u, v)`` with ``cost[i, j] >= u[i] + v[j]``
    everywhere and equality on the matching. Shortest augmenting paths,
    O(n^3).
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, math.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            cand = np.where(free, minv[1:], math.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            cols = np.flatnonzero(used)
            u[p[cols]] += delta
            v[cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return p[1:] - 1, u[1:], v[1:]


def _levels(values: np.ndarray) -> list[np.ndarray]:
    """Masks grouping tolerance-equal weights, highest level first."""
    distinct = np.unique(values)[::-1]
    groups: list[list[float]] = []
    for x in distinct:
        if groups and weights_equal(groups[-1][-1], x):
            groups[-1].append(x)
        else:
            groups.append([x])
    return [np.isin(values, g) for g in groups]


def lex_optimal_support(w: np.ndarray, limit: float) -> np.ndarray:
    """Edges whose perfect matchings are exactly the lexicographic optima.

    The ``m x n`` weights are padded with ``m - n`` dummy tasks below every
    level. Level by level from the top, the number of edges used at that
    level is minimised by a 0/1-cost assignment and every edge that is not
    tight under the optimal duals is dropped; a perfect matching of the
    surviving edges is optimal at every level at once. Edges above ``limit``
    (the bottleneck) are excluded up front.
    """
    m, n = w.shape
    real = (w < limit) | np.vectorize(weights_equal)(w, limit)
    support = np.hstack([real, np.ones((m, m - n), dtype=bool)])
    big = m + 1.0
    for level in _levels(w[real]):
        at_level = np.zeros_like(support)
        at_level[:, :n][real] = level
        at_level &= support
        if not at_level.any():
            continue
        cost = np.where(support, at_level.astype(float), big)
        _, u, v = hungarian(cost)
        support &= np.abs(cost - u[:, None] - v[None, :]) < 0.5
    return support


TIE_BREAKS = {
    "task-major": lambda e: (e[1], e[0]),
    "agent-major": lambda e: e,
    "reverse": lambda e: (-e[0], -e[1]),
}


def sequential_assign(W: WeightMatrix, tie_break: str = "task-major") -> SequentialResult:
    """Sequential bottleneck optimising assignment of all tasks.

    Ties among maximum-margin edges go to the lowest task index, then the
    lowest agent index; ``tie_break="agent-major"`` orders by agent first and
    ``"reverse"`` picks the highest ``(agent, task)`` pair. With a positive
    margin every maximum-margin edge lies in all optimal assignments of the
    subgraph. With zero margin only edges that lie in a lexicographically
    optimal assignment of the current subgraph are eligible, so the result is
    always a lexicographic optimum.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"unknown tie_break {tie_break!r}")
    w = np.asarray(W.w, dtype=float)
    matcher = _Matcher(w)
    support = None
    orders = []
    for _ in range(W.n):
        agents = np.flatnonzero(matcher.agent_on)
        tasks = np.flatnonzero(matcher.task_on)
        if agents.size == 1 and tasks.size == 1:
            a, j = int(agents[0]), int(tasks[0])
            orders.append(OrderRecord((a, j), float(w[a, j]), math.inf, 1))
            break
        value = matcher.optimize()
        sub = w[np.ix_(agents, tasks)]
        close = np.abs(sub - value) <= 1e-9 * np.maximum(1.0, np.maximum(np.abs(sub), abs(value)))
        candidates = [(int(agents[r]), int(tasks[c])) for r, c in zip(*np.nonzero(close))]
        without = [matcher.value_without(e, value) for e in candidates]
        best = max(without)
        chosen = sorted(e for e, b in zip(candidates, without) if weights_equal(b, best))
        margin = 0.0 if weights_equal(best, value) else best - value
        ranked = sorted(chosen, key=TIE_BREAKS[tie_break])
        if margin > 0 or len(ranked) == 1:
            edge = ranked[0]
        else:
            # a zero-margin tie may include edges that lie in no optimum
            if support is None:
                support = lex_optimal_support(w, orders[0].weight if orders else value)
            edge = next(e for e in ranked if _completes(support, matcher, e))
        orders.append(OrderRecord(edge, float(w[edge]), margin, len(chosen)))
        matcher.remove(*edge)
    return SequentialResult.from_orders(W.m, orders)


def _completes(support: np.ndarray, matcher: _Matcher, edge: Edge) -> bool:
    """Whether ``edge`` extends to a perfect matching of the support on the active vertices."""
    a, j = edge
    if not support[a, j]:
        return False
    m, n = matcher.w.shape
    agents = [int(i) for i in np.flatnonzero(matcher.agent_on) if i != a]
    tasks = [int(t) for t in np.flatnonzero(matcher.task_on) if t != j] + list(range(n, m))
    adj = {t: [i for i in agents if support[i, t]] for t in tasks}
    return len(hopcroft_karp(tasks, adj)) == len(tasks)


def is_robust_lexicographic(result: SequentialResult) -> bool:
    """All margins strictly positive (infinite counts as positive)."""
    return all(mu > 0 for mu in result.margins)


def check_prop2(result: SequentialResult, W: WeightMatrix) -> list[tuple[int, int, float, float]]:
    """Pairs of orders ``a < b`` where swapping their tasks is cheaper than the margin allows.

    Each violation is ``(a, b, w_a + mu_a, max(w[i_a, j_b], w[i_b, j_a]))``
    with 0-based order indices. Orders with infinite margin are skipped.
    """
    out = []
    orders = result.orders
    for a, oa in enumerate(orders):
        if math.isinf(oa.margin):
            continue
        lhs = oa.weight + oa.margin
        for b in range(a + 1, len(orders)):
            ob = orders[b]
            rhs = max(W[oa.agent, ob.task], W[ob.agent, oa.task])
            if lhs > rhs and not weights_equal(lhs, rhs):
                out.append((a, b, lhs, rhs))
    return out


def check_prop3(result: SequentialResult, W: WeightMatrix) -> list[tuple[int, int, float, float]]:
    """Orders whose task an unassigned agent could take within the margin.

    Each violation is ``(a, agent, w_a + mu_a, w[agent, j_a])``.
    """
    out = []
    for a, oa in enumerate(result.orders):
        if math.isinf(oa.margin):
            continue
        lhs = oa.weight + oa.margin
        for i in result.unassigned_agents:
            rhs = W[i, oa.task]
            if lhs > rhs and not weights_equal(lhs, rhs):
                out.append((a, i, lhs, rhs))
    return out


def lex_compare(seq_a: Sequence[float], seq_b: Sequence[float]) -> int:
    """Compare two non-increasing weight sequences lexicographically.

    Returns -1, 0 or 1. Entries are compared with :func:`weights_equal`.
    """
    if len(seq_a) != len(seq_b):
        raise ValueError(f"length mismatch: {len(seq_a)} vs {len(seq_b)}")
    for seq in (seq_a, seq_b):
        if any(x < y and not weights_equal(x, y) for x, y in zip(seq, seq[1:])):
            raise ValueError(f"sequence {tuple(seq)} is not non-increasing")
    for x, y in zip(seq_a, seq_b):
        if weights_equal(x, y):
            continue
        return -1 if x < y else 1
    return 0
