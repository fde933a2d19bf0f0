"""Exhaustive reference solutions for small instances.

Used as test oracles; nothing here is meant to be fast.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from itertools import permutations
from typing import Iterable, Iterator

from .core import Assignment, Edge, SubgraphSpec, WeightMatrix
from .errors import Infeasible, SizeGuard
from .sequential import lex_compare

MAX_AGENTS = 8


def _enumerate(agents, tasks, edges: frozenset[Edge] | None) -> Iterator[Assignment]:
    for chosen in permutations(agents, len(tasks)):
        pairs = tuple(zip(chosen, tasks))
        if edges is None or all(p in edges for p in pairs):
            yield Assignment(pairs)


def enumerate_admissible(m: int, n: int, edges: Iterable[Edge] | None = None) -> Iterator[Assignment]:
    """Every injective task-to-agent map over permitted edges (all edges if ``None``)."""
    if m > MAX_AGENTS:
        raise SizeGuard(f"refusing to enumerate m={m} > {MAX_AGENTS} agents")
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got m={m}, n={n}")
    return _enumerate(range(m), range(n), None if edges is None else frozenset(edges))


def enumerate_spec(spec: SubgraphSpec) -> Iterator[Assignment]:
    if len(spec.agents) > MAX_AGENTS:
        raise SizeGuard(f"refusing to enumerate {len(spec.agents)} > {MAX_AGENTS} agents")
    return _enumerate(spec.agents, spec.tasks, spec.edges)


def brute_bottleneck(spec: SubgraphSpec, W: WeightMatrix) -> float:
    """Exhaustive min-max over all admissible assignments of ``spec``."""
    best = None
    for asg in enumerate_spec(spec):
        value = max(W[e] for e in asg)
        if best is None or value < best:
            best = value
    if best is None:
        raise Infeasible(f"no admissible assignment for {spec}")
    return best


def sorted_weights(assignment: Assignment, W: WeightMatrix) -> tuple[float, ...]:
    return tuple(sorted(assignment.weights(W), reverse=True))


@dataclass(frozen=True)
class LexOptimum:
    assignment: Assignment
    sequence: tuple[float, ...]
    optima: tuple[Assignment, ...]

    @property
    def unique(self) -> bool:
        return len(self.optima) == 1


def brute_lex_optimal(W: WeightMatrix) -> LexOptimum:
    """Assignment with the lexicographically smallest non-increasing weight sequence.

    All assignments tying at the optimum are kept in ``optima``.
    """
    scored = [(sorted_weights(a, W), a) for a in enumerate_admissible(W.m, W.n)]
    if not scored:
        raise Infeasible("no admissible assignment")
    key = cmp_to_key(lex_compare)
    best_seq = min((s for s, _ in scored), key=key)
    optima = tuple(a for s, a in scored if lex_compare(s, best_seq) == 0)
    return LexOptimum(optima[0], best_seq, optima)
