"""Metrics, scenarios and weight construction from geometry."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import WeightMatrix

BUILTIN_METRICS = ("euclidean", "manhattan", "chebyshev")


@dataclass(frozen=True, eq=False)
class Metric:
    """A distance function satisfying the triangle inequality.

    ``kind="table"`` describes a finite metric space: points are 1-element
    coordinates holding an integer node index into ``table``.
    """

    kind: str = "euclidean"
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table metric needs a distance table")
            table = np.array(self.table, dtype=float)
            validate_table(table)
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
        elif self.kind not in BUILTIN_METRICS:
            raise ValueError(f"unknown metric {self.kind!r}")

    def __eq__(self, other):
        if not isinstance(other, Metric) or other.kind != self.kind:
            return False
        return self.kind != "table" or np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.kind)

    @property
    def geometric(self) -> bool:
        return self.kind in BUILTIN_METRICS

    def pairwise(self, P, Q) -> np.ndarray:
        """Distance matrix between the rows of ``P`` and ``Q``."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if P.shape[1] != Q.shape[1]:
            raise ValueError(f"dimension mismatch: {P.shape[1]} vs {Q.shape[1]}")
        if self.kind == "table":
            return self.table[np.ix_(_nodes(self.table, P), _nodes(self.table, Q))]
        diff = P[:, None, :] - Q[None, :, :]
        if self.kind == "euclidean":
            return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if self.kind == "manhattan":
            return np.abs(diff).sum(axis=2)
        return np.abs(diff).max(axis=2)

    def rowwise(self, P, Q) -> np.ndarray:
        """Distances between corresponding rows of ``P`` and ``Q`` (broadcasting)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if P.shape[-1] != Q.shape[-1]:
            raise ValueError(f"dimension mismatch: {P.shape[-1]} vs {Q.shape[-1]}")
        if self.kind == "table":
            P, Q = np.broadcast_arrays(P, Q)
            return self.table[_nodes(self.table, P), _nodes(self.table, Q)]
        diff = P - Q
        if self.kind == "euclidean":
            return np.sqrt(np.sum(diff * diff, axis=-1))
        if self.kind == "manhattan":
            return np.abs(diff).sum(axis=-1)
        return np.abs(diff).max(axis=-1)

    def __call__(self, p, q) -> float:
        return float(self.pairwise(p, q)[0, 0])


def _nodes(table: np.ndarray, P: np.ndarray) -> np.ndarray:
    if P.shape[1] != 1:
        raise ValueError("table metric points are 1-element node indices")
    idx = P[:, 0]
    nodes = idx.astype(int)
    if np.any(nodes != idx) or np.any(nodes < 0) or np.any(nodes >= len(table)):
        raise ValueError(f"invalid node indices for a {len(table)}-node table")
    return nodes


def validate_table(table: np.ndarray) -> None:
    """Exhaustive metric-axiom check over all triples of a distance table."""
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise ValueError("distance table must be square")
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        raise ValueError("distance table entries must be finite and non-negative")
    if not np.allclose(np.diag(table), 0.0):
        raise ValueError("distance table must have a zero diagonal")
    if not np.array_equal(table, table.T):
        raise ValueError("distance table must be symmetric")
    # d(i,k) <= d(i,j) + d(j,k) for every (i, j, k)
    via = table[:, :, None] + table[None, :, :]
    slack = via - table[:, None, :]
    if np.any(slack < -1e-12 * max(1.0, table.max())):
        i, j, k = np.argwhere(slack < 0)[0]
        raise ValueError(f"triangle inequality violated: d({i},{k}) > d({i},{j}) + d({j},{k})")


def metric_distance(metric: Metric, p, q) -> float:
    return metric(p, q)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Initial agent positions, target destinations and safety distances."""

    initial_positions: np.ndarray
    targets: np.ndarray
    safety: float | np.ndarray = 0.0
    metric: Metric = field(default_factory=Metric)
    horizon: float = 10.0
    agent_ids: tuple[str, ...] | None = None
    target_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        P = np.atleast_2d(np.array(self.initial_positions, dtype=float))
        G = np.atleast_2d(np.array(self.targets, dtype=float))
        if P.shape[1] != G.shape[1]:
            raise ValueError("agents and targets must share a dimension")
        m, n = len(P), len(G)
        if m < 2 or not 1 <= n <= m:
            raise ValueError(f"need m > 1 and 1 <= n <= m, got m={m}, n={n}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(G))):
            raise ValueError("positions must be finite")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        safety = self.safety
        if np.ndim(safety) == 0:
            safety = float(safety)
            if safety < 0:
                raise ValueError("safety distance must be non-negative")
        else:
            safety = np.array(safety, dtype=float)
            if safety.shape != (m, m):
                raise ValueError(f"safety matrix must be {m}x{m}")
            if not np.array_equal(safety, safety.T) or np.any(safety < 0):
                raise ValueError("safety matrix must be symmetric and non-negative")
            safety = safety.copy()
            np.fill_diagonal(safety, 0.0)
            safety.setflags(write=False)
        agent_ids = tuple(self.agent_ids) if self.agent_ids else tuple(f"a{i + 1}" for i in range(m))
        target_ids = tuple(self.target_ids) if self.target_ids else tuple(f"g{j + 1}" for j in range(n))
        if len(agent_ids) != m or len(target_ids) != n:
            raise ValueError("id lists must match the number of agents and targets")
        for arr in (P, G):
            arr.setflags(write=False)
        object.__setattr__(self, "initial_positions", P)
        object.__setattr__(self, "targets", G)
        object.__setattr__(self, "safety", safety)
        object.__setattr__(self, "agent_ids", agent_ids)
        object.__setattr__(self, "target_ids", target_ids)
        if self.metric.kind == "table":
            self.metric.pairwise(P, G)

    @property
    def m(self) -> int:
        return len(self.initial_positions)

    @property
    def n(self) -> int:
        return len(self.targets)

    @property
    def dim(self) -> int:
        return self.initial_positions.shape[1]

    @property
    def safety_bound(self) -> float:
        """Global bound ``s`` on every pairwise safety distance."""
        if np.ndim(self.safety) == 0:
            return float(self.safety)
        return float(self.safety.max())

    def safety_matrix(self) -> np.ndarray:
        if np.ndim(self.safety) == 0:
            s = np.full((self.m, self.m), float(self.safety))
            np.fill_diagonal(s, 0.0)
            return s
        return np.array(self.safety)

    def safety_between(self, i: int, k: int) -> float:
        return float(self.safety_matrix()[i, k])


def build_weights(scenario: Scenario) -> WeightMatrix:
    """Agent-to-target distances under the scenario metric."""
    return WeightMatrix(scenario.metric.pairwise(scenario.initial_positions, scenario.targets))


def random_scenario(
    rng: np.random.Generator,
    m: int,
    n: int,
    box: float = 200.0,
    dim: int = 2,
    safety: float = 3.0,
    metric: Metric | None = None,
) -> Scenario:
    """Uniformly random positions and targets in ``[0, box]^dim``."""
    return Scenario(
        initial_positions=rng.uniform(0.0, box, size=(m, dim)),
        targets=rng.uniform(0.0, box, size=(n, dim)),
        safety=safety,
        metric=metric or Metric(),
        horizon=1.0,
    )

