"""Time-varying safe position sets derived from a sequential assignment.

Every agent must stay strictly inside a ball around its start whose radius
grows as ``a(t) = v_ref * t + (mu - s) / 2`` until it saturates at a per-order
limit ``A_k``. Assigned agents must also stay strictly inside a ball around
their destination whose radius shrinks as the start ball grows. If every agent
does so, no assigned agent comes within its safety distance of any other
agent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import weights_equal
from .errors import MarginTooSmall, NotRobust
from .scenario import Scenario
from .sequential import SequentialResult


@dataclass(frozen=True)
class SafeSchedule:
    mu: float
    s: float
    A: tuple[float, ...]
    v_ref: float
    offset: float
    m: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]
    margins: tuple[float, ...]

    def __post_init__(self):
        if self.v_ref < 0:
            raise ValueError("v_ref must be non-negative")

    @property
    def n(self) -> int:
        return len(self.A)

    def order_of(self, agent: int) -> int | None:
        for k, (a, _) in enumerate(self.edges):
            if a == agent:
                return k
        return None

    @property
    def unassigned(self) -> tuple[int, ...]:
        used = {a for a, _ in self.edges}
        return tuple(i for i in range(self.m) if i not in used)

    def a(self, t):
        """Shared timing parameter before saturation."""
        return self.v_ref * np.asarray(t, dtype=float) + self.offset

    def saturation(self, agent: int) -> float:
        """``A_k`` for the agent of order k; ``A_n`` for unassigned agents."""
        k = self.order_of(agent)
        return self.A[-1] if k is None else self.A[k]

    def start_radii(self, t) -> np.ndarray:
        """``(len(t), m)`` start-ball radii for every agent."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        caps = np.array([self.saturation(i) for i in range(self.m)])
        return np.minimum(self.a(t)[:, None], caps[None, :])

    def goal_radii(self, t) -> np.ndarray:
        """``(len(t), m)`` goal-ball radii; NaN for unassigned agents."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full((len(t), self.m), np.nan)
        a = self.a(t)
        for k, (agent, _) in enumerate(self.edges):
            out[:, agent] = self.A[k] - np.minimum(a, self.A[k]) + self.offset
        return out


def _safety_bound(safety) -> float:
    if isinstance(safety, Scenario):
        return safety.safety_bound
    return float(safety)


def build_schedule(result: SequentialResult, safety: float | Scenario, v_ref: float = 10.0) -> SafeSchedule:
    """Saturation limits and timing parameter for a robust assignment.

    ``safety`` is the global bound ``s`` or a scenario providing it. Raises
    :class:`NotRobust` if some margin is zero and :class:`MarginTooSmall`
    unless ``s`` is strictly below the smallest margin.
    """
    if not all(mu > 0 for mu in result.margins):
        zero = [k + 1 for k, mu in enumerate(result.margins) if not mu > 0]
        raise NotRobust(f"robustness margin is zero at order(s) {zero}")
    s = _safety_bound(safety)
    mu = result.mu
    if not s < mu:
        raise MarginTooSmall(mu, s)
    A = []
    running = math.inf
    for o in result.orders:
        running = min(running, o.weight + o.margin - 0.5 * (mu + s))
        A.append(running)
    return SafeSchedule(
        mu=mu,
        s=s,
        A=tuple(A),
        v_ref=float(v_ref),
        offset=0.5 * (mu - s),
        m=result.m,
        edges=tuple(o.edge for o in result.orders),
        weights=result.weights,
        margins=result.margins,
    )


def radius_start(schedule: SafeSchedule, agent: int, t: float) -> float:
    return float(min(schedule.a(t), schedule.saturation(agent)))


def radius_goal(schedule: SafeSchedule, k: int, t: float) -> float:
    """Goal-ball radius of the 0-based order ``k``."""
    a_k = min(float(schedule.a(t)), schedule.A[k])
    return schedule.A[k] - a_k + schedule.offset


@dataclass(frozen=True)
class SafeSet:
    agent: int
    center_start: np.ndarray
    radius_start: float
    center_goal: np.ndarray | None = None
    radius_goal: float | None = None

    @property
    def assigned(self) -> bool:
        return self.center_goal is not None

    def contains(self, p, metric) -> bool:
        if not metric(self.center_start, p) < self.radius_start:
            return False
        return not self.assigned or metric(p, self.center_goal) < self.radius_goal


def safe_set(schedule: SafeSchedule, scenario: Scenario, agent: int, t: float) -> SafeSet:
    start = scenario.initial_positions[agent]
    k = schedule.order_of(agent)
    if k is None:
        return SafeSet(agent, start, radius_start(schedule, agent, t))
    task = schedule.edges[k][1]
    return SafeSet(
        agent,
        start,
        radius_start(schedule, agent, t),
        scenario.targets[task],
        radius_goal(schedule, k, t),
    )


def safe_membership(schedule: SafeSchedule, scenario: Scenario, agent: int, position, t: float) -> bool:
    """Strict membership of ``position`` in the agent's safe set at time ``t``."""
    position = np.asarray(position, dtype=float)
    if position.shape != (scenario.dim,):
        raise ValueError(f"position must have dimension {scenario.dim}")
    return safe_set(schedule, scenario, agent, t).contains(position, scenario.metric)


def check_grid(horizon: float, dt: float = 0.05) -> np.ndarray:
    """Uniform grid over ``[0, horizon]`` that always includes both endpoints."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = np.arange(0.0, horizon, dt)
    return np.append(grid, horizon) if grid[-1] < horizon else grid


def nonemptiness_check(
    schedule: SafeSchedule,
    scenario: Scenario,
    times: Sequence[float] | None = None,
    dt: float = 0.05,
) -> dict[int, bool]:
    """Per agent: do the start and goal balls overlap at every grid time?

    For assigned agents the radii must sum to at least ``w + mu - s``, which
    exceeds the distance ``w`` between the two centres. Unassigned agents
    only have a start ball of positive radius.
    """
    times = check_grid(scenario.horizon, dt) if times is None else np.asarray(times, dtype=float)
    a = schedule.start_radii(times)
    b = schedule.goal_radii(times)
    out = {}
    for i in range(schedule.m):
        k = schedule.order_of(i)
        if k is None:
            out[i] = bool(np.all(a[:, i] > 0))
            continue
        total = a[:, i] + b[:, i]
        w = schedule.weights[k]
        need = w + schedule.mu - schedule.s
        ok = np.all(total > w) and all(x >= need or weights_equal(x, need) for x in total)
        out[i] = bool(ok)
    return out
