"""Scenario and result documents, CSV trajectories and SVG frames."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from .core import WeightMatrix
from .safesets import SafeSchedule
from .scenario import Metric, Scenario, build_weights
from .sequential import OrderRecord, SequentialResult
from .simulator import SimConfig, Trajectory, VerificationReport

RESULT_FORMAT = "seqbap-result/1"
SIG_DIGITS = 9

_point = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}
_entity = {
    "type": "object",
    "properties": {"id": {"type": "string"}, "position": _point},
    "required": ["position"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "metric": {
            "oneOf": [
                {"enum": ["euclidean", "manhattan", "chebyshev"]},
                {
                    "type": "object",
                    "properties": {"table": _matrix},
                    "required": ["table"],
                    "additionalProperties": False,
                },
            ]
        },
        "agents": {"type": "array", "items": _entity, "minItems": 2},
        "targets": {"type": "array", "items": _entity, "minItems": 1},
        "weights": _matrix,
        "safety": {"oneOf": [{"type": "number", "minimum": 0}, _matrix]},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "schedule": {
            "type": "object",
            "properties": {"v_ref": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "sim": {
            "type": "object",
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "gains": {
                    "type": "object",
                    "properties": {"heading": {"type": "number"}, "speed": {"type": "number"}},
                    "additionalProperties": False,
                },
                "saturations": {
                    "type": "object",
                    "properties": {"v_max": {"type": "number"}, "omega_max": {"type": "number"}},
                    "additionalProperties": False,
                },
                "disturbance": {"type": "number", "minimum": 0},
                "seed": {"type": "integer"},
                "initial_heading": {"enum": ["aligned", "random"]},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
    "oneOf": [{"required": ["agents", "targets"]}, {"required": ["weights"]}],
    "not": {"anyOf": [{"required": ["weights", "agents"]}, {"required": ["weights", "targets"]}]},
}


@dataclass
class ScenarioFile:
    """A parsed scenario document.

    ``scenario`` is ``None`` for weights-only documents, which carry no
    geometry and therefore support assignment and scheduling only.
    """

    doc: dict
    weights: WeightMatrix
    scenario: Scenario | None
    v_ref: float = 10.0
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def safety_bound(self) -> float:
        if self.scenario is not None:
            return self.scenario.safety_bound
        safety = self.doc.get("safety", 0.0)
        return float(np.max(safety)) if np.ndim(safety) else float(safety)


def parse_scenario(doc: dict) -> ScenarioFile:
    jsonschema.validate(doc, SCENARIO_SCHEMA)
    horizon = float(doc.get("horizon", 10.0))
    v_ref = float(doc.get("schedule", {}).get("v_ref", 10.0))
    sim_doc = doc.get("sim", {})
    sim = SimConfig(
        dt=float(sim_doc.get("dt", 0.01)),
        v_ref=v_ref,
        v_max=float(sim_doc.get("saturations", {}).get("v_max", max(15.0, 1.5 * v_ref))),
        omega_max=float(sim_doc.get("saturations", {}).get("omega_max", 3.0)),
        k_heading=float(sim_doc.get("gains", {}).get("heading", 4.0)),
        k_speed=float(sim_doc.get("gains", {}).get("speed", 2.0)),
        disturbance_amplitude=float(sim_doc.get("disturbance", 0.05)),
        rng_seed=int(sim_doc.get("seed", 0)),
        T=horizon,
        initial_heading=sim_doc.get("initial_heading", "aligned"),
    )
    if "weights" in doc:
        return ScenarioFile(doc, WeightMatrix(doc["weights"]), None, v_ref, sim)
    metric_doc = doc.get("metric", "euclidean")
    metric = Metric("table", metric_doc["table"]) if isinstance(metric_doc, dict) else Metric(metric_doc)
    positions = [a["position"] for a in doc["agents"]]
    targets = [g["position"] for g in doc["targets"]]
    dims = {len(p) for p in positions + targets}
    if len(dims) != 1 or ("dim" in doc and dims != {doc["dim"]}):
        raise ValueError(f"inconsistent position dimensions {sorted(dims)}")
    scenario = Scenario(
        initial_positions=positions,
        targets=targets,
        safety=doc.get("safety", 0.0),
        metric=metric,
        horizon=horizon,
        agent_ids=[a.get("id", f"a{i + 1}") for i, a in enumerate(doc["agents"])],
        target_ids=[g.get("id", f"g{j + 1}") for j, g in enumerate(doc["targets"])],
    )
    return ScenarioFile(doc, build_weights(scenario), scenario, v_ref, sim)


def read_document(path: str | Path) -> dict:
    text = Path(path).read_text()
    if Path(path).suffix.lower() in (".yaml", ".yml"):
        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return doc


def load_scenario(path: str | Path) -> ScenarioFile:
    return parse_scenario(read_document(path))


def scenario_doc(scenario: Scenario, v_ref: float | None = None, sim: dict | None = None) -> dict:
    """Scenario document for a geometric :class:`Scenario`."""
    doc: dict[str, Any] = {"dim": scenario.dim}
    if scenario.metric.kind == "table":
        doc["metric"] = {"table": scenario.metric.table.tolist()}
    else:
        doc["metric"] = scenario.metric.kind
    doc["agents"] = [
        {"id": i, "position": p.tolist()} for i, p in zip(scenario.agent_ids, scenario.initial_positions)
    ]
    doc["targets"] = [{"id": j, "position": g.tolist()} for j, g in zip(scenario.target_ids, scenario.targets)]
    doc["safety"] = scenario.safety if np.ndim(scenario.safety) == 0 else scenario.safety.tolist()
    doc["horizon"] = scenario.horizon
    if v_ref is not None:
        doc["schedule"] = {"v_ref": v_ref}
    if sim:
        doc["sim"] = sim
    return doc


def round_floats(obj):
    """Round every float to 9 significant digits; infinities become strings."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _real(x) -> float:
    if isinstance(x, str):
        return float(x)
    return float(x)


@dataclass
class ResultFile:
    scenario: dict
    assignment: SequentialResult
    schedule: SafeSchedule | None = None
    trajectories: list[Trajectory] | None = None
    verification: dict | None = None

    def _agent_params(self) -> list[dict]:
        parsed = parse_scenario(self.scenario)
        sched = self.schedule
        out = []
        for i in range(sched.m):
            k = sched.order_of(i)
            entry: dict[str, Any] = {
                "agent": i,
                "order": None if k is None else k + 1,
                "saturation": sched.saturation(i),
            }
            if parsed.scenario is not None:
                entry["start"] = parsed.scenario.initial_positions[i].tolist()
                if k is not None:
                    entry["goal"] = parsed.scenario.targets[sched.edges[k][1]].tolist()
            out.append(entry)
        return out

    def to_doc(self) -> dict:
        res = self.assignment
        doc: dict[str, Any] = {
            "format": RESULT_FORMAT,
            "scenario": self.scenario,
            "assignment": {
                "m": res.m,
                "n": res.n,
                "orders": [
                    {
                        "k": k + 1,
                        "agent": o.agent,
                        "task": o.task,
                        "weight": o.weight,
                        "margin": o.margin,
                        "tie_count": o.tie_count,
                    }
                    for k, o in enumerate(res.orders)
                ],
                "unassigned": list(res.unassigned_agents),
                "mu": res.mu,
                "robust": all(mu > 0 for mu in res.margins),
            },
        }
        if self.schedule is not None:
            sched = self.schedule
            doc["schedule"] = {
                "mu": sched.mu,
                "s": sched.s,
                "v_ref": sched.v_ref,
                "offset": sched.offset,
                "A": list(sched.A),
                "agents": self._agent_params(),
            }
        if self.trajectories is not None:
            doc["trajectories"] = [
                {"agent": tr.agent, "t": tr.times.tolist(), "positions": tr.positions.tolist()}
                for tr in self.trajectories
            ]
        if self.verification is not None:
            doc["verification"] = self.verification
        return round_floats(doc)

    @classmethod
    def from_doc(cls, doc: dict) -> "ResultFile":
        if doc.get("format") != RESULT_FORMAT:
            raise ValueError(f"not a {RESULT_FORMAT} document")
        a = doc["assignment"]
        orders = [
            OrderRecord((int(o["agent"]), int(o["task"])), _real(o["weight"]), _real(o["margin"]), int(o["tie_count"]))
            for o in a["orders"]
        ]
        result = SequentialResult.from_orders(int(a["m"]), orders)
        schedule = None
        if "schedule" in doc:
            s = doc["schedule"]
            schedule = SafeSchedule(
                mu=_real(s["mu"]),
                s=_real(s["s"]),
                A=tuple(_real(x) for x in s["A"]),
                v_ref=_real(s["v_ref"]),
                offset=_real(s["offset"]),
                m=result.m,
                edges=tuple(o.edge for o in orders),
                weights=result.weights,
                margins=result.margins,
            )
        trajectories = None
        if "trajectories" in doc:
            trajectories = [
                Trajectory(int(t["agent"]), np.array(t["t"], dtype=float), np.array(t["positions"], dtype=float))
                for t in doc["trajectories"]
            ]
        return cls(doc["scenario"], result, schedule, trajectories, doc.get("verification"))

    def dumps(self) -> str:
        return json.dumps(self.to_doc(), indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ResultFile":
        return cls.from_doc(json.loads(text))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path: str | Path) -> "ResultFile":
        return cls.loads(Path(path).read_text())


def trajectories_to_csv(trajectories: list[Trajectory]) -> str:
    dim = trajectories[0].positions.shape[1]
    header = ["t", "agent", "x", "y", "z"][: 2 + dim]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    by_agent = sorted(trajectories, key=lambda tr: tr.agent)
    for idx in range(len(by_agent[0].times)):
        for tr in by_agent:
            row = [f"{tr.times[idx]:.{SIG_DIGITS}g}", tr.agent]
            row += [f"{x:.{SIG_DIGITS}g}" for x in tr.positions[idx]]
            writer.writerow(row)
    return buf.getvalue()


def trajectories_from_csv(text: str) -> list[Trajectory]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["t", "agent"] or header[2:] not in (["x"], ["x", "y"], ["x", "y", "z"]):
        raise ValueError(f"unexpected CSV header {header}")
    rows: dict[int, list[tuple[float, list[float]]]] = {}
    for row in reader:
        if not row:
            continue
        rows.setdefault(int(row[1]), []).append((float(row[0]), [float(x) for x in row[2:]]))
    out = []
    for agent in sorted(rows):
        samples = sorted(rows[agent], key=lambda s: s[0])
        out.append(
            Trajectory(agent, np.array([s[0] for s in samples]), np.array([s[1] for s in samples]))
        )
    return out


def report_to_doc(report: VerificationReport) -> dict:
    return round_floats(report.summary())


# --- SVG frames -------------------------------------------------------------

_COLOURS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
            "#bcbd22", "#17becf"]


def _ball(metric: str, c, r: float, tf, **style) -> str:
    attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
    x, y = tf(c)
    rr = r * tf.scale
    if metric == "euclidean":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{rr:.2f}" {attrs}/>'
    if metric == "manhattan":
        pts = [(x + rr, y), (x, y - rr), (x - rr, y), (x, y + rr)]
    else:
        pts = [(x + rr, y + rr), (x + rr, y - rr), (x - rr, y - rr), (x - rr, y + rr)]
    return '<polygon points="{}" {}/>'.format(" ".join(f"{px:.2f},{py:.2f}" for px, py in pts), attrs)


class _Transform:
    def __init__(self, lo, hi, size=600.0, pad=20.0):
        self.lo = lo
        span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
        self.scale = (size - 2 * pad) / span
        self.pad = pad
        self.height = (hi[1] - lo[1]) * self.scale + 2 * pad
        self.width = (hi[0] - lo[0]) * self.scale + 2 * pad

    def __call__(self, p):
        return (
            self.pad + (p[0] - self.lo[0]) * self.scale,
            self.height - self.pad - (p[1] - self.lo[1]) * self.scale,
        )


def render_frame(scenario: Scenario, schedule: SafeSchedule, t: float, trajectories: list[Trajectory] | None = None) -> str:
    """Flat 2-D SVG of the safe sets, positions and safety circles at time ``t``."""
    if scenario.dim != 2 or not scenario.metric.geometric:
        raise ValueError("SVG frames need a 2-D scenario with a geometric metric")
    metric = scenario.metric.kind
    a = schedule.start_radii([t])[0]
    b = schedule.goal_radii([t])[0]
    pts = np.vstack([scenario.initial_positions, scenario.targets])
    reach = float(np.max(a)) if len(a) else 0.0
    lo, hi = pts.min(axis=0) - reach, pts.max(axis=0) + reach
    tf = _Transform(lo, hi)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{tf.width:.0f}" height="{tf.height:.0f}">',
        f"<title>t = {t:g} s</title>",
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for i in range(scenario.m):
        colour = _COLOURS[i % len(_COLOURS)]
        parts.append(_ball(metric, scenario.initial_positions[i], a[i], tf, fill=colour, fill_opacity="0.12",
                           stroke=colour, stroke_width="0.8"))
        k = schedule.order_of(i)
        if k is not None:
            goal = scenario.targets[schedule.edges[k][1]]
            parts.append(_ball(metric, goal, b[i], tf, fill=colour, fill_opacity="0.12", stroke=colour,
                               stroke_dasharray="4 3", stroke_width="0.8"))
    for g in scenario.targets:
        x, y = tf(g)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="green"/>')
    for p in scenario.initial_positions:
        x, y = tf(p)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="blue"/>')
    if trajectories is not None:
        for tr in trajectories:
            upto = tr.times <= t + 1e-9
            path = tr.positions[upto]
            if len(path) > 1:
                coords = " ".join("{:.2f},{:.2f}".format(*tf(p)) for p in path[:: max(1, len(path) // 400)])
                parts.append(f'<polyline points="{coords}" fill="none" stroke="black" stroke-dasharray="3 3" '
                             f'stroke-width="0.7"/>')
            if len(path):
                x, y = tf(path[-1])
                parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="black"/>')
                parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{0.5 * schedule.s * tf.scale:.2f}" '
                             f'fill="none" stroke="red" stroke-width="0.8"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
