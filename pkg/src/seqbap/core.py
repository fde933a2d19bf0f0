"""Bottleneck assignment operators on subgraphs of the agent-task graph.

Agents and tasks are 0-based row/column indices of a :class:`WeightMatrix`.
Edges are ``(agent, task)`` tuples. Every set-valued result is returned as a
tuple sorted by ``(agent, task)``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InadmissibleAssignment, Infeasible

Edge = tuple[int, int]

REL_TOL = 1e-9


def weights_equal(x: float, y: float) -> bool:
    """Tolerant equality for weights; exact for integers of moderate size."""
    if x == y:
        return True
    if math.isinf(x) or math.isinf(y):
        return False
    return abs(x - y) <= REL_TOL * max(1.0, abs(x), abs(y))


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Dense ``m x n`` non-negative weights, rows are agents and columns tasks."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        if w.ndim != 2:
            raise ValueError(f"weights must be a 2-D array, got shape {w.shape}")
        m, n = w.shape
        if m < 2:
            raise ValueError(f"need at least two agents, got m={m}")
        if not 1 <= n <= m:
            raise ValueError(f"need 1 <= n <= m, got m={m}, n={n}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.w.shape[1]

    def __getitem__(self, edge: Edge) -> float:
        return float(self.w[edge])

    def __eq__(self, other):
        return isinstance(other, WeightMatrix) and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash((self.w.shape, self.w.tobytes()))

    def full(self) -> "SubgraphSpec":
        """The complete assignment graph."""
        return SubgraphSpec.complete(range(self.m), range(self.n))


@dataclass(frozen=True)
class SubgraphSpec:
    """Agents, tasks and permitted edges of a subgraph."""

    agents: tuple[int, ...]
    tasks: tuple[int, ...]
    edges: frozenset[Edge] = field(default=None)

    def __post_init__(self):
        agents = tuple(int(a) for a in self.agents)
        tasks = tuple(int(t) for t in self.tasks)
        if not agents or not tasks:
            raise ValueError("subgraph needs at least one agent and one task")
        if len(set(agents)) != len(agents) or len(set(tasks)) != len(tasks):
            raise ValueError("duplicate agent or task index")
        if len(agents) < len(tasks):
            raise ValueError("subgraph needs at least as many agents as tasks")
        if self.edges is None:
            edges = frozenset((a, t) for a in agents for t in tasks)
        else:
            edges = frozenset((int(a), int(t)) for a, t in self.edges)
            aset, tset = set(agents), set(tasks)
            bad = [e for e in edges if e[0] not in aset or e[1] not in tset]
            if bad:
                raise ValueError(f"edges outside the subgraph: {sorted(bad)[:5]}")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def complete(cls, agents: Iterable[int], tasks: Iterable[int]) -> "SubgraphSpec":
        return cls(tuple(agents), tuple(tasks))

    @property
    def is_complete(self) -> bool:
        return len(self.edges) == len(self.agents) * len(self.tasks)

    def without(self, *edges: Edge) -> "SubgraphSpec":
        """Same vertex sets with the given edges deleted."""
        return SubgraphSpec(self.agents, self.tasks, self.edges - set(edges))

    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))


@dataclass(frozen=True)
class Assignment:
    """A set of ``(agent, task)`` pairs; validity is checked by :func:`admissible`."""

    pairs: tuple[Edge, ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted({(int(a), int(t)) for a, t in self.pairs}))
        object.__setattr__(self, "pairs", pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, edge):
        return tuple(edge) in self.pairs

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(sorted({a for a, _ in self.pairs}))

    @property
    def tasks(self) -> tuple[int, ...]:
        return tuple(sorted({t for _, t in self.pairs}))

    def agent_of(self, task: int) -> int | None:
        for a, t in self.pairs:
            if t == task:
                return a
        return None

    def weights(self, W: WeightMatrix) -> list[float]:
        return [W[e] for e in self.pairs]


@dataclass(frozen=True)
class BottleneckSummary:
    value: float
    bottleneck_edges: tuple[Edge, ...]
    max_margin_edges: tuple[Edge, ...]
    margin: float


def admissible(assignment: Assignment, spec: SubgraphSpec) -> bool:
    """True iff every task of ``spec`` is covered exactly once through a
    permitted edge and each agent of ``spec`` covers at most one task.

    Only pairs inside ``spec.edges`` are counted; pairs elsewhere in the full
    graph are unconstrained.
    """
    task_cover = {t: 0 for t in spec.tasks}
    agent_load = {a: 0 for a in spec.agents}
    for a, t in assignment:
        if (a, t) not in spec.edges:
            continue
        task_cover[t] += 1
        agent_load[a] += 1
    return all(c == 1 for c in task_cover.values()) and all(c <= 1 for c in agent_load.values())


def assignment_max_weight(assignment: Assignment, spec: SubgraphSpec, W: WeightMatrix) -> float:
    """Largest weight among assigned pairs that lie in ``spec.edges`` (0 if none)."""
    if not admissible(assignment, spec):
        raise InadmissibleAssignment(f"assignment {assignment.pairs} is not admissible")
    inside = [W[e] for e in assignment if e in spec.edges]
    return max(inside, default=0.0)


def _adjacency(spec: SubgraphSpec, W: WeightMatrix, threshold: float) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {t: [] for t in spec.tasks}
    for a, t in sorted(spec.edges):
        if W.w[a, t] <= threshold:
            adj[t].append(a)
    return adj


def hopcroft_karp(tasks: Sequence[int], adj: dict[int, list[int]]) -> dict[int, int]:
    """Maximum-cardinality matching, returned as ``{task: agent}``.

    Neighbours are tried in the order given by ``adj`` so lower agent indices
    win ties.
    """
    match_task: dict[int, int | None] = {t: None for t in tasks}
    match_agent: dict[int, int] = {}
    inf = math.inf

    def bfs() -> tuple[dict[int, float], bool]:
        dist: dict[int, float] = {}
        queue: deque[int] = deque()
        for t in tasks:
            if match_task[t] is None:
                dist[t] = 0
                queue.append(t)
            else:
                dist[t] = inf
        found = False
        while queue:
            t = queue.popleft()
            for a in adj[t]:
                nxt = match_agent.get(a)
                if nxt is None:
                    found = True
                elif dist[nxt] == inf:
                    dist[nxt] = dist[t] + 1
                    queue.append(nxt)
        return dist, found

    def dfs(t: int, dist: dict[int, float]) -> bool:
        for a in adj[t]:
            nxt = match_agent.get(a)
            if nxt is None or (dist[nxt] == dist[t] + 1 and dfs(nxt, dist)):
                match_task[t] = a
                match_agent[a] = t
                return True
        dist[t] = inf
        return False

    while True:
        dist, found = bfs()
        if not found:
            break
        for t in tasks:
            if match_task[t] is None:
                dfs(t, dist)
    return {t: a for t, a in match_task.items() if a is not None}


def _saturating_matching(spec: SubgraphSpec, W: WeightMatrix, threshold: float) -> dict[int, int] | None:
    matching = hopcroft_karp(spec.tasks, _adjacency(spec, W, threshold))
    return matching if len(matching) == len(spec.tasks) else None


def _solve(spec: SubgraphSpec, W: WeightMatrix) -> tuple[float, dict[int, int]]:
    # binary search over the sorted distinct weights of permitted edges
    levels = sorted({float(W.w[e]) for e in spec.edges})
    if not levels or _saturating_matching(spec, W, levels[-1]) is None:
        raise Infeasible(
            f"no admissible assignment of tasks {spec.tasks} to agents {spec.agents}"
        )
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _saturating_matching(spec, W, levels[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    matching = _saturating_matching(spec, W, levels[lo])
    return levels[lo], matching


def bottleneck_value(spec: SubgraphSpec, W: WeightMatrix) -> float:
    """Minimum over admissible assignments of the largest assigned weight."""
    return _solve(spec, W)[0]


def min_bottleneck_assignment(spec: SubgraphSpec, W: WeightMatrix) -> Assignment:
    """One admissible assignment attaining the bottleneck value."""
    _, matching = _solve(spec, W)
    return Assignment(tuple((a, t) for t, a in matching.items()))


def bottleneck_edges(spec: SubgraphSpec, W: WeightMatrix) -> tuple[Edge, ...]:
    value = bottleneck_value(spec, W)
    return tuple(e for e in spec.sorted_edges() if weights_equal(W[e], value))


def max_margin_edges_and_margin(spec: SubgraphSpec, W: WeightMatrix) -> tuple[tuple[Edge, ...], float]:
    """Maximum-margin bottleneck edges of a complete subgraph and its robustness margin.

    The margin is how much the bottleneck grows when the most critical
    bottleneck edge is deleted. A 1x1 subgraph has infinite margin.
    """
    if not spec.is_complete:
        raise ValueError("robustness margins are defined on complete subgraphs only")
    if len(spec.edges) == 1:
        return spec.sorted_edges(), math.inf
    value = bottleneck_value(spec, W)
    candidates = [e for e in spec.sorted_edges() if weights_equal(W[e], value)]
    without = [bottleneck_value(spec.without(e), W) for e in candidates]
    best = max(without)
    chosen = tuple(e for e, b in zip(candidates, without) if weights_equal(b, best))
    margin = 0.0 if weights_equal(best, value) else best - value
    return chosen, margin


def summarize(spec: SubgraphSpec, W: WeightMatrix) -> BottleneckSummary:
    """Bottleneck value, bottleneck edges, max-margin edges and margin in one call."""
    edges, margin = max_margin_edges_and_margin(spec, W)
    return BottleneckSummary(
        value=bottleneck_value(spec, W),
        bottleneck_edges=bottleneck_edges(spec, W),
        max_margin_edges=edges,
        margin=margin,
    )
