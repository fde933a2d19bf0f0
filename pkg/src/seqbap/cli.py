"""Command-line front end.

Exit codes: 0 ok, 1 input error, 2 assumption violated (zero margin or
safety bound not below the margin), 3 safe-set or clearance violation.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .errors import MarginTooSmall, NotRobust, SeqbapError
from .io import (
    ResultFile,
    load_scenario,
    parse_scenario,
    render_frame,
    report_to_doc,
    trajectories_from_csv,
    trajectories_to_csv,
)
from .safesets import build_schedule
from .sequential import is_robust_lexicographic, sequential_assign
from .simulator import simulate, verify_run

EXIT_OK, EXIT_INPUT, EXIT_ASSUMPTION, EXIT_VIOLATION = 0, 1, 2, 3


class InputError(SeqbapError):
    pass


def _emit(result: ResultFile, out: str | None) -> None:
    if out:
        result.write(out)
    else:
        sys.stdout.write(result.dumps())


def _frame_times(spec: str | None) -> list[float]:
    if not spec:
        return []
    try:
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad --frames list {spec!r}") from exc


def _assign_one(path: Path, require_robust: bool) -> ResultFile:
    parsed = load_scenario(path)
    result = sequential_assign(parsed.weights)
    if require_robust and not is_robust_lexicographic(result):
        zero = [k + 1 for k, mu in enumerate(result.margins) if not mu > 0]
        raise NotRobust(f"{path}: robustness margin is zero at order(s) {zero}")
    return ResultFile(parsed.doc, result)


def cmd_assign(args) -> int:
    if args.batch:
        src = Path(args.batch)
        dest = Path(args.out) if args.out else src
        dest.mkdir(parents=True, exist_ok=True)
        files = sorted(p for p in src.iterdir() if p.suffix.lower() in (".json", ".yaml", ".yml")
                       and not p.name.endswith(".result.json"))
        if not files:
            raise InputError(f"no scenario files in {src}")
        code = EXIT_OK
        for path in files:
            try:
                _assign_one(path, args.require_robust).write(dest / f"{path.stem}.result.json")
                print(f"{path.name}: ok")
            except NotRobust as exc:
                print(f"{path.name}: {exc}", file=sys.stderr)
                code = max(code, EXIT_ASSUMPTION)
        return code
    if not args.scenario:
        raise InputError("assign needs a scenario file or --batch DIR")
    result = _assign_one(Path(args.scenario), args.require_robust)
    _emit(result, args.out)
    return EXIT_OK


def _with_schedule(res: ResultFile, safety: float | None, v_ref: float | None) -> ResultFile:
    parsed = parse_scenario(res.scenario)
    s = parsed.safety_bound if safety is None else safety
    v = parsed.v_ref if v_ref is None else v_ref
    res.schedule = build_schedule(res.assignment, s, v)
    return res


def cmd_schedule(args) -> int:
    res = _with_schedule(ResultFile.read(args.result), args.safety, args.vref)
    _emit(res, args.out)
    return EXIT_OK


def _write_frames(res: ResultFile, scenario, times: list[float], frames_dir: Path) -> list[Path]:
    if not times:
        return []
    if scenario.dim != 2:
        print("3-D scenario: SVG frames skipped, use the CSV export", file=sys.stderr)
        return []
    frames_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in times:
        path = frames_dir / f"frame_t{t:g}.svg"
        path.write_text(render_frame(scenario, res.schedule, t, res.trajectories))
        paths.append(path)
    return paths


def _verdict(res: ResultFile, scenario, v_max: float | None) -> int:
    report = verify_run(res.trajectories, res.schedule, scenario, v_max=v_max)
    res.verification = report_to_doc(report)
    ok = report.all_in_sets and report.no_collisions
    print(
        f"all_in_sets={report.all_in_sets} no_collisions={report.no_collisions} "
        f"min_clearance={report.min_clearance:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_VIOLATION


def _geometric(res: ResultFile):
    if res.schedule is None:
        raise InputError("result has no schedule; run 'seqbap schedule' first")
    parsed = parse_scenario(res.scenario)
    if parsed.scenario is None:
        raise InputError("weights-only scenarios have no geometry to simulate or verify")
    return parsed


def cmd_simulate(args) -> int:
    res = ResultFile.read(args.result)
    parsed = _geometric(res)
    config = dataclasses.replace(parsed.sim, v_ref=res.schedule.v_ref)
    if args.seed is not None:
        config = dataclasses.replace(config, rng_seed=args.seed)
    res.trajectories = simulate(parsed.scenario, res.assignment, config)
    code = _verdict(res, parsed.scenario, config.v_max)
    if args.csv:
        Path(args.csv).write_text(trajectories_to_csv(res.trajectories))
    _write_frames(res, parsed.scenario, _frame_times(args.frames), Path(args.frames_dir))
    _emit(res, args.out)
    return code


def cmd_verify(args) -> int:
    res = ResultFile.read(args.result)
    parsed = _geometric(res)
    if args.trajectories:
        res.trajectories = trajectories_from_csv(Path(args.trajectories).read_text())
    if res.trajectories is None:
        raise InputError("no trajectories: pass --trajectories CSV or simulate first")
    code = _verdict(res, parsed.scenario, args.vmax)
    _write_frames(res, parsed.scenario, _frame_times(args.frames), Path(args.frames_dir))
    _emit(res, args.out)
    return code


def demo_scenario_doc() -> dict:
    text = resources.files("seqbap").joinpath("data/demo_scenario.json").read_text()
    return json.loads(text)


def cmd_demo(args) -> int:
    out = Path(args.out or "seqbap-demo")
    out.mkdir(parents=True, exist_ok=True)
    doc = demo_scenario_doc()
    if args.seed is not None:
        doc.setdefault("sim", {})["seed"] = args.seed
    (out / "scenario.json").write_text(json.dumps(doc, indent=1) + "\n")
    parsed = parse_scenario(doc)
    result = sequential_assign(parsed.weights)
    res = _with_schedule(ResultFile(doc, result), args.safety, args.vref)
    config = dataclasses.replace(parsed.sim, v_ref=res.schedule.v_ref)
    res.trajectories = simulate(parsed.scenario, result, config)
    code = _verdict(res, parsed.scenario, config.v_max)
    (out / "trajectories.csv").write_text(trajectories_to_csv(res.trajectories))
    frames = _frame_times(args.frames or "0,2,4,6,8")
    _write_frames(res, parsed.scenario, frames, out / "frames")
    res.write(out / "result.json")
    for k, o in enumerate(result.orders, 1):
        print(f"order {k}: agent {o.agent} -> task {o.task}  w={o.weight:.2f}  margin={o.margin:.2f}")
    print(f"mu={result.mu:.2f}  A={[round(x, 2) for x in res.schedule.A]}")
    print(f"wrote {out}/")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqbap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assign", help="sequential bottleneck assignment of a scenario")
    p.add_argument("scenario", nargs="?", help="scenario file (JSON or YAML)")
    p.add_argument("-o", "--out", help="result file (directory with --batch); stdout if omitted")
    p.add_argument("--require-robust", action="store_true", help="exit 2 if any margin is zero")
    p.add_argument("--batch", metavar="DIR", help="assign every scenario file in DIR")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("schedule", help="add saturation limits and timing to a result")
    p.add_argument("result")
    p.add_argument("-o", "--out")
    p.add_argument("--safety", type=float, help="global safety bound s (default: from scenario)")
    p.add_argument("--vref", type=float, help="reference speed (default: from scenario)")
    p.set_defaults(func=cmd_schedule)

    for name, func in (("simulate", cmd_simulate), ("verify", cmd_verify)):
        p = sub.add_parser(name, help=f"{name} agents against their safe sets")
        p.add_argument("result")
        p.add_argument("-o", "--out")
        p.add_argument("--frames", metavar="T,...", help="times at which to draw SVG frames")
        p.add_argument("--frames-dir", default="frames")
        if name == "simulate":
            p.add_argument("--seed", type=int, help="disturbance seed (default: from scenario)")
            p.add_argument("--csv", help="also export trajectories as CSV")
        else:
            p.add_argument("--trajectories", help="CSV with header t,agent,x,y[,z]")
            p.add_argument("--vmax", type=float, help="speed bound for inter-sample certification")
        p.set_defaults(func=func)

    p = sub.add_parser("demo", help="run the bundled 8-agent scenario end to end")
    p.add_argument("-o", "--out", help="output directory (default: seqbap-demo)")
    p.add_argument("--seed", type=int)
    p.add_argument("--safety", type=float)
    p.add_argument("--vref", type=float)
    p.add_argument("--frames", metavar="T,...")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotRobust, MarginTooSmall) as exc:
        print(f"seqbap: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except jsonschema.ValidationError as exc:
        print(f"seqbap: invalid document: {exc.message}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError, KeyError, TypeError, yaml.YAMLError, SeqbapError) as exc:
        print(f"seqbap: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
