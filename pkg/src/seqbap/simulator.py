"""Planar unicycle agents tracking straight-line references, and run verification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch
from .safesets import SafeSchedule
from .scenario import Scenario
from .sequential import SequentialResult


def wrap_angle(theta):
    """Map angles to ``(-pi, pi]``."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return np.where(wrapped == -math.pi, math.pi, wrapped)


@dataclass(frozen=True)
class UnicycleState:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    v_ref: float = 10.0
    v_max: float = 15.0
    omega_max: float = 3.0
    k_heading: float = 4.0
    k_speed: float = 2.0
    disturbance_amplitude: float = 0.05
    rng_seed: int = 0
    T: float = 20.0
    initial_heading: str = "aligned"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.v_ref < 0 or self.v_max < self.v_ref:
            raise ValueError("need 0 <= v_ref <= v_max")
        if not self.omega_max > 0:
            raise ValueError("omega_max must be positive")
        if self.disturbance_amplitude < 0:
            raise ValueError("disturbance amplitude must be non-negative")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.initial_heading not in ("aligned", "random"):
            raise ValueError("initial_heading must be 'aligned' or 'random'")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    agent: int
    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.positions.tolist()))


def _rhs(state: np.ndarray, v: np.ndarray, omega: np.ndarray) -> np.ndarray:
    theta = state[:, 2]
    return np.stack([v * np.cos(theta), v * np.sin(theta), omega], axis=1)


def simulate(scenario: Scenario, result: SequentialResult, config: SimConfig) -> list[Trajectory]:
    """Integrate every agent with RK4 under a decentralised tracking controller.

    Each assigned agent follows a reference point that leaves its start at
    ``v_ref`` along the straight line to its target and stops there. The
    commanded planar velocity is the reference velocity plus ``k_speed``
    times the position error; it is turned into a forward speed (projected on
    the heading, clipped to ``[0, v_max]``) and a turn rate proportional to
    the heading error (clipped to ``omega_max``). A uniform steering-rate
    disturbance, drawn per agent from ``rng_seed + agent``, is held over each
    step. Unassigned agents stay put.
    """
    if scenario.dim != 2:
        raise ValueError("the unicycle simulator is planar; scenario must be 2-D")
    m = scenario.m
    P0 = np.array(scenario.initial_positions, dtype=float)
    goals = P0.copy()
    for agent, task in result.assignment:
        goals[agent] = scenario.targets[task]
    delta = goals - P0
    length = np.linalg.norm(delta, axis=1)
    unit = np.divide(delta, length[:, None], out=np.zeros_like(delta), where=length[:, None] > 0)
    assigned = np.zeros(m, dtype=bool)
    assigned[list(result.assignment.agents)] = True

    steps = config.steps
    dt = config.dt
    noise = np.zeros((steps, m))
    headings = np.arctan2(unit[:, 1], unit[:, 0])
    for i in range(m):
        rng = np.random.default_rng(config.rng_seed + i)
        if config.initial_heading == "random":
            headings[i] = rng.uniform(-math.pi, math.pi)
        if config.disturbance_amplitude > 0:
            noise[:, i] = rng.uniform(-config.disturbance_amplitude, config.disturbance_amplitude, steps)

    state = np.column_stack([P0, headings])
    times = np.arange(steps + 1) * dt
    out = np.empty((steps + 1, m, 2))
    out[0] = P0
    for step in range(steps):
        t = times[step]
        travelled = np.minimum(config.v_ref * t, length)
        ref = P0 + unit * travelled[:, None]
        moving = (config.v_ref * t < length)
        ref_vel = np.where(moving[:, None], unit * config.v_ref, 0.0)
        cmd = ref_vel + config.k_speed * (ref - state[:, :2])
        speed = np.linalg.norm(cmd, axis=1)
        desired = np.arctan2(cmd[:, 1], cmd[:, 0])
        err = wrap_angle(desired - state[:, 2])
        active = assigned & (speed > 1e-9)
        v = np.where(active, np.clip(speed * np.cos(err), 0.0, config.v_max), 0.0)
        omega = np.where(active, np.clip(config.k_heading * err, -config.omega_max, config.omega_max), 0.0)
        omega = omega + np.where(assigned, noise[step], 0.0)
        k1 = _rhs(state, v, omega)
        k2 = _rhs(state + 0.5 * dt * k1, v, omega)
        k3 = _rhs(state + 0.5 * dt * k2, v, omega)
        k4 = _rhs(state + dt * k3, v, omega)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        state[:, 2] = wrap_angle(state[:, 2])
        out[step + 1] = state[:, :2]
    return [Trajectory(i, times.copy(), out[:, i, :].copy()) for i in range(m)]


@dataclass
class VerificationReport:
    times: np.ndarray
    membership: np.ndarray
    clearance: np.ndarray
    all_in_sets: bool
    no_collisions: bool
    min_clearance: float
    outside: list[tuple[int, float]] = field(default_factory=list)
    collisions: list[tuple[int, int, float, float]] = field(default_factory=list)
    min_set_slack: float = math.inf
    continuous_certified: bool = False

    @property
    def implication_holds(self) -> bool:
        """Being inside every set at every sample must imply no collision."""
        return (not self.all_in_sets) or self.no_collisions

    def summary(self) -> dict:
        return {
            "samples": int(len(self.times)),
            "all_in_sets": self.all_in_sets,
            "no_collisions": self.no_collisions,
            "implication_holds": self.implication_holds,
            "min_clearance": self.min_clearance,
            "min_set_slack": self.min_set_slack,
            "continuous_certified": self.continuous_certified,
            "outside": [{"agent": a, "t": t} for a, t in self.outside],
            "collisions": [
                {"agent": a, "other": b, "t": t, "distance": d} for a, b, t, d in self.collisions
            ],
        }


def stack_trajectories(trajectories: list[Trajectory], m: int) -> tuple[np.ndarray, np.ndarray]:
    """Common time grid and ``(T, m, dim)`` position array."""
    by_agent = {tr.agent: tr for tr in trajectories}
    if sorted(by_agent) != list(range(m)):
        raise GridMismatch(f"need exactly one trajectory per agent 0..{m - 1}")
    times = by_agent[0].times
    for tr in trajectories:
        if len(tr.times) != len(times) or not np.allclose(tr.times, times, rtol=0, atol=1e-9):
            raise GridMismatch(f"agent {tr.agent} is sampled on a different grid")
    return np.asarray(times, dtype=float), np.stack([by_agent[i].positions for i in range(m)], axis=1)


def verify_run(
    trajectories: list[Trajectory],
    schedule: SafeSchedule,
    scenario: Scenario,
    v_max: float | None = None,
    max_events: int = 50,
) -> VerificationReport:
    """Check safe-set membership and pairwise clearance at every sample.

    Clearance is checked for every (assigned agent, other agent) pair against
    the per-pair safety distance. With ``v_max`` given, the run is also
    certified between samples when the smallest margin to any set boundary
    exceeds the largest possible drift ``(v_max + v_ref) * dt``.
    """
    times, X = stack_trajectories(trajectories, scenario.m)
    if X.shape[2] != scenario.dim:
        raise GridMismatch("trajectory dimension differs from the scenario")
    metric = scenario.metric
    m = scenario.m
    a = schedule.start_radii(times)
    b = schedule.goal_radii(times)
    P0 = scenario.initial_positions
    d_start = np.stack([metric.rowwise(X[:, i, :], P0[i]) for i in range(m)], axis=1)
    d_goal = np.full_like(d_start, np.nan)
    for agent, task in schedule.edges:
        d_goal[:, agent] = metric.rowwise(X[:, agent, :], scenario.targets[task])
    slack_start = a - d_start
    slack_goal = np.where(np.isnan(b), np.inf, b - np.nan_to_num(d_goal))
    membership = (slack_start > 0) & (slack_goal > 0)
    slack = np.minimum(slack_start, slack_goal)

    S = scenario.safety_matrix()
    assigned = [agent for agent, _ in schedule.edges]
    clearance = np.full(len(times), np.inf)
    collisions = []
    for i in assigned:
        for k in range(m):
            if k == i:
                continue
            d = metric.rowwise(X[:, i, :], X[:, k, :])
            gap = d - S[i, k]
            clearance = np.minimum(clearance, gap)
            for t in np.flatnonzero(gap <= 0)[:max_events]:
                if len(collisions) < max_events:
                    collisions.append((i, k, float(times[t]), float(d[t])))

    outside = [(int(i), float(times[t])) for t, i in np.argwhere(~membership)[:max_events]]
    all_in = bool(membership.all())
    min_slack = float(slack.min()) if slack.size else math.inf
    certified = False
    if v_max is not None and len(times) > 1:
        step = float(np.max(np.diff(times)))
        certified = all_in and (v_max + schedule.v_ref) * step < min_slack
    return VerificationReport(
        times=times,
        membership=membership,
        clearance=clearance,
        all_in_sets=all_in,
        no_collisions=bool(np.all(clearance > 0)),
        min_clearance=float(clearance.min()) if clearance.size else math.inf,
        outside=outside,
        collisions=collisions,
        min_set_slack=min_slack,
        continuous_certified=bool(certified),
    )
