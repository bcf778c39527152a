"""Command-line front end: scenario files in, reports out.

Scenario files are JSON with ``labor_classes`` (array of {name, supply}),
``goods`` (array of {name}), row-major ``technology`` / ``utility`` /
optional ``true_utility`` matrices, and an optional ``parameters`` array of
{name, row, col, lo, hi, grid} entries that turns the file into a parametric
family. Exit codes: 0 success, 1 analysis came out negative (failed
verification, no equilibrium, infeasible structure), 2 usage or input
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import ccg
from .equilibrium import (Infeasible, NumericFailure, extract_combinatorics,
                          is_generic, reconstruct_from_forest, verify_sm)
from .model import (Economy, EquilibriumPoint, ParameterBinding, ParametricFamily,
                    ValidationError, normalize_point, validate_economy)
from .tatonnement import UnsolvedMarket, run_tatonnement, solve_equilibrium

__all__ = ["ParseError", "SchemaError", "load_scenario", "load_point", "run_command", "main"]


class ParseError(ValueError):
    pass


class SchemaError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def _fmt(value) -> str:
    return f"{float(value):.9g}"


def _round9(obj):
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(_fmt(obj))
    if isinstance(obj, np.ndarray):
        return _round9(obj.tolist())
    return obj


def load_scenario(path: str):
    """Parse and validate a scenario file into an Economy or ParametricFamily."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("<root>", "scenario must be a JSON object")
    for field in ("labor_classes", "goods", "technology", "utility"):
        if field not in raw:
            raise SchemaError(field, "missing required field")
    for idx, entry in enumerate(raw["labor_classes"]):
        if not isinstance(entry, dict) or "name" not in entry or "supply" not in entry:
            raise SchemaError(f"labor_classes[{idx}]", "needs name and supply")
    for idx, entry in enumerate(raw["goods"]):
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(f"goods[{idx}]", "needs name")
    econ = validate_economy({k: raw[k] for k in
                             ("labor_classes", "goods", "technology", "utility",
                              "true_utility") if k in raw})
    params = raw.get("parameters")
    if not params:
        return econ
    bindings = []
    for idx, spec in enumerate(params):
        for field in ("name", "row", "col"):
            if field not in spec:
                raise SchemaError(f"parameters[{idx}].{field}", "missing required field")
        bindings.append(ParameterBinding(
            str(spec["name"]), int(spec["row"]), int(spec["col"]),
            float(spec.get("lo", 0.0)), float(spec.get("hi", np.inf)),
            tuple(float(v) for v in spec["grid"]) if spec.get("grid") else None))
    return ParametricFamily(econ, tuple(bindings))


def load_point(path: str, econ: Economy) -> EquilibriumPoint:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    for field in ("prices", "quantities", "wages", "allocation"):
        if field not in raw:
            raise SchemaError(field, "missing required field")
    return EquilibriumPoint.from_parts(
        econ, raw["prices"], raw["quantities"], raw["wages"], raw["allocation"])


def _point_dict(point: EquilibriumPoint, step=None, status=None) -> dict:
    d = {
        "p": _round9(point.prices),
        "q": _round9(point.quantities),
        "w": _round9(point.wages),
        "X": _round9(point.allocation),
    }
    if step is not None:
        d["step"] = step
    if status is not None:
        d["status"] = status
    return d


def _print_point(econ: Economy, point: EquilibriumPoint, out):
    data = extract_combinatorics(point, econ=econ)
    generic, tight = is_generic(econ, point)
    print("prices:    ", " ".join(_fmt(v) for v in point.prices), file=out)
    print("quantities:", " ".join(_fmt(v) for v in point.quantities), file=out)
    print("wages:     ", " ".join(_fmt(v) for v in point.wages), file=out)
    print("allocation:", file=out)
    for i, name in enumerate(econ.class_names):
        row = " ".join(_fmt(v) for v in point.allocation[i])
        print(f"  {name}: {row}", file=out)
    print(f"active classes: {sorted(data.active_classes)}", file=out)
    print(f"active goods:   {sorted(data.active_goods)}", file=out)
    print(f"forest:         {sorted(data.forest)}", file=out)
    print(f"components:     {data.components}", file=out)
    print(f"generic:        {generic}", file=out)
    for item in tight:
        print(f"  tight: {item}", file=out)


def _forest_dot(econ: Economy, point: EquilibriumPoint, out):
    data = extract_combinatorics(point, econ=econ)
    print("graph market {", file=out)
    for i in range(econ.m):
        print(f'  "L{i + 1}" [shape=box label="L{i + 1}:{econ.class_names[i]}"];', file=out)
    for j in range(econ.n):
        print(f'  "g{j + 1}" [shape=ellipse label="g{j + 1}:{econ.good_names[j]}"];', file=out)
    for i, j in sorted(data.forest):
        spend = point.prices[j] * point.allocation[i, j]
        print(f'  "L{i + 1}" -- "g{j + 1}" [label="{_fmt(spend)}"];', file=out)
    print("}", file=out)


def _as_economy(scenario, what: str) -> Economy:
    if isinstance(scenario, ParametricFamily):
        return scenario.base
    return scenario


def _require_family(scenario, what: str) -> ParametricFamily:
    if not isinstance(scenario, ParametricFamily):
        raise SchemaError("parameters", f"{what} needs a scenario with parameters")
    return scenario


def _parse_values(text: str):
    return [float(v) for v in text.split(",") if v != ""]


def _grids_from_args(family: ParametricFamily, args) -> dict:
    grids = {}
    for spec in args.grid or []:
        if "=" not in spec:
            raise SchemaError("--grid", "expected NAME=v1,v2,...")
        name, vals = spec.split("=", 1)
        grids[name] = _parse_values(vals)
    if getattr(args, "alpha", None):
        grids["alpha"] = _parse_values(args.alpha)
    if getattr(args, "beta", None):
        grids["beta"] = _parse_values(args.beta)
    for binding in family.bindings:
        if binding.name not in grids:
            if binding.grid:
                grids[binding.name] = list(binding.grid)
            else:
                raise SchemaError(f"--grid {binding.name}",
                                  "no grid given and none stored in the scenario")
    return grids


def _cmd_solve(args, out):
    scenario = load_scenario(args.scenario)
    econ = _as_economy(scenario, "solve")
    p0 = np.array(_parse_values(args.p0)) if args.p0 else None
    try:
        res = solve_equilibrium(econ, p0=p0, tol=args.tol, seed=args.seed)
    except UnsolvedMarket as exc:
        print(f"no equilibrium found: {exc}", file=sys.stderr)
        return 1
    point = normalize_point(res.point, econ, args.normalization)
    if args.format == "dot":
        _forest_dot(econ, point, out)
    elif args.format == "json":
        body = _point_dict(point)
        body["method"] = res.method
        body["multiplicity"] = res.multiplicity
        json.dump(body, out, indent=2)
        out.write("\n")
    else:
        print(f"method: {res.method} (distinct points: {res.multiplicity})", file=out)
        _print_point(econ, point, out)
    return 0


def _cmd_verify(args, out):
    scenario = load_scenario(args.scenario)
    econ = _as_economy(scenario, "verify")
    point = load_point(args.candidate, econ)
    ok, violations = verify_sm(econ, point, args.tol)
    if ok:
        print("equilibrium verified", file=out)
        return 0
    print("not an equilibrium:", file=out)
    for v in violations:
        print(f"  {v}", file=out)
    return 1


def _cmd_taton(args, out):
    scenario = load_scenario(args.scenario)
    econ = _as_economy(scenario, "taton")
    p0 = np.array(_parse_values(args.p0)) if args.p0 else np.full(econ.n, 1.0 / econ.n)
    trace = run_tatonnement(econ, p0, max_iters=args.max_iters, tol=args.tol)
    sink = open(args.out, "w") if args.out else out
    try:
        last = len(trace.states) - 1
        for step, state in enumerate(trace.states):
            status = "running"
            if step == last:
                status = trace.status.kind
                if trace.status.kind == "cycle":
                    status = f"cycle[period={trace.status.period},first={trace.status.first}]"
                elif trace.status.kind == "converged":
                    status = f"converged[step={trace.status.step}]"
            json.dump(_point_dict(state, step=step, status=status), sink)
            sink.write("\n")
    finally:
        if args.out:
            sink.close()
    return 0 if trace.status.kind in ("converged", "cycle") else 1


def _cmd_game(args, out):
    family = _require_family(load_scenario(args.scenario), "game")
    grids = _grids_from_args(family, args)
    table = ccg.sweep(family, grids, convention=args.convention,
                      tol=args.tol, seed=args.seed)
    econ = family.base
    sink = open(args.out, "w") if args.out else out
    try:
        if args.format == "json":
            body = {
                "params": list(table.params),
                "grids": [list(g) for g in table.grids],
                "players": list(table.players),
                "convention": table.convention,
                "payoffs": _round9(table.payoffs),
                "unsolved": sorted(list(c) for c in table.unsolved),
            }
            json.dump(body, sink, indent=2)
            sink.write("\n")
        else:
            header = list(table.params) + [f"payoff_{name}" for name in econ.class_names]
            print(",".join(header), file=sink)
            for cell in table.cells():
                vals = [table.grids[k][cell[k]] for k in range(len(table.params))]
                if cell in table.unsolved:
                    row = [_fmt(v) for v in vals] + ["unsolved"] * econ.m
                else:
                    row = [_fmt(v) for v in vals] + \
                        [_fmt(table.payoffs[(i,) + cell]) for i in range(econ.m)]
                print(",".join(row), file=sink)
    finally:
        if args.out:
            sink.close()
    if args.nash:
        cells = ccg.pure_nash(table)
        for cell in cells:
            vals = ", ".join(f"{table.params[k]}={_fmt(table.grids[k][cell[k]])}"
                             for k in range(len(table.params)))
            print(f"pure nash: ({vals})", file=out)
        if not cells:
            print("pure nash: none", file=out)
    return 0


def _cmd_zones(args, out):
    family = _require_family(load_scenario(args.scenario), "zones")
    grids = _grids_from_args(family, args)
    zm = ccg.zone_map(family, grids, tol=args.tol, seed=args.seed)
    sink = open(args.out, "w") if args.out else out
    try:
        print(f"{zm.params[0]},{zm.params[1]},label", file=sink)
        for a, va in enumerate(zm.grids[0]):
            for b, vb in enumerate(zm.grids[1]):
                print(f"{_fmt(va)},{_fmt(vb)},{zm.labels[a][b]}", file=sink)
    finally:
        if args.out:
            sink.close()
    legend = {label: {
        "active_classes": sorted(data.active_classes),
        "active_goods": sorted(data.active_goods),
        "forest": sorted(list(e) for e in data.forest),
        "components": data.components,
    } for label, data in zm.legend.items()}
    legend_sink = open(args.legend, "w") if args.legend else out
    try:
        json.dump(legend, legend_sink, indent=2, sort_keys=True)
        legend_sink.write("\n")
    finally:
        if args.legend:
            legend_sink.close()
    return 0


def _cmd_reconstruct(args, out):
    scenario = load_scenario(args.scenario)
    econ = _as_economy(scenario, "reconstruct")
    try:
        with open(args.forest) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {args.forest}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.forest} is not valid JSON: {exc}") from exc
    for field in ("active_classes", "active_goods", "forest"):
        if field not in raw:
            raise SchemaError(field, "missing required field")
    data = (tuple(raw["active_classes"]), tuple(raw["active_goods"]),
            tuple(tuple(e) for e in raw["forest"]))
    try:
        point = reconstruct_from_forest(econ, data, normalization=args.normalization,
                                        seed=args.seed)
    except Infeasible as exc:
        print(f"infeasible: {exc.condition}", file=out)
        return 1
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=out)
        return 1
    if args.format == "json":
        json.dump(_point_dict(point), out, indent=2)
        out.write("\n")
    else:
        _print_point(econ, point, out)
    return 0


def _cmd_delta(args, out):
    scenario = load_scenario(args.scenario)
    econ = _as_economy(scenario, "delta")
    if args.to:
        alt = _as_economy(load_scenario(args.to), "delta")
        if not np.array_equal(alt.technology, econ.technology):
            change = ("technology", alt.technology)
        elif not np.array_equal(alt.labor_supply, econ.labor_supply):
            change = ("labor", alt.labor_supply)
        else:
            raise SchemaError("--to", "target scenario changes neither technology nor labor")
    elif args.labor:
        change = ("labor", _parse_values(args.labor))
    else:
        raise SchemaError("--to/--labor", "need a change to compare against")
    report = ccg.scenario_delta(econ, change, convention=args.convention, seed=args.seed)
    print(f"change: {report.kind} (payoffs {report.convention})", file=out)
    print("good,production_before,production_after,flag", file=out)
    for j, name in enumerate(econ.good_names):
        print(f"{name},{_fmt(report.production_before[j])},"
              f"{_fmt(report.production_after[j])},{report.production_flags[j]}", file=out)
    print("class,payoff_before,payoff_after,flag", file=out)
    for i, name in enumerate(econ.class_names):
        print(f"{name},{_fmt(report.payoffs_before[i])},"
              f"{_fmt(report.payoffs_after[i])},{report.payoff_flags[i]}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="closedmarket",
        description="closed-economy market equilibria, games over posted utilities")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=("text", "json")):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--normalization", default="revenue",
                       help="revenue | money | numeraire:<good>")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("--error-json", action="store_true",
                       help="emit errors as JSON on stderr")

    p = sub.add_parser("solve", help="find and print an equilibrium")
    common(p, ("text", "json", "dot"))
    p.add_argument("--p0", help="starting prices, comma separated")

    p = sub.add_parser("verify", help="check a candidate point from a file")
    common(p)
    p.add_argument("--candidate", required=True)

    p = sub.add_parser("taton", help="trace the price adjustment as JSON lines")
    common(p)
    p.add_argument("--p0", help="starting prices, comma separated")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--out", help="write the trace to a file instead of stdout")

    p = sub.add_parser("game", help="payoff grid over strategy parameters")
    common(p, ("csv", "json"))
    p.add_argument("--grid", action="append", help="NAME=v1,v2,... (repeatable)")
    p.add_argument("--alpha", help="shorthand for --grid alpha=...")
    p.add_argument("--beta", help="shorthand for --grid beta=...")
    p.add_argument("--nash", action="store_true", help="report pure Nash cells")
    p.add_argument("--convention", choices=("per_capita", "total"), default="per_capita")
    p.add_argument("--out", help="write the CSV/JSON to a file")

    p = sub.add_parser("zones", help="market-structure map over two parameters")
    common(p, ("csv",))
    p.add_argument("--grid", action="append")
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p.add_argument("--out", help="write cell CSV to a file")
    p.add_argument("--legend", help="write the label legend JSON to a file")

    p = sub.add_parser("reconstruct", help="rebuild a point from index data")
    common(p)
    p.add_argument("--forest", required=True,
                   help="JSON file with active_classes, active_goods, forest")

    p = sub.add_parser("delta", help="compare before/after a technology or labor change")
    common(p)
    p.add_argument("--to", help="scenario file with the changed economy")
    p.add_argument("--labor", help="new labor supplies, comma separated")
    p.add_argument("--convention", choices=("per_capita", "total"), default="per_capita")
    return parser


_COMMANDS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "taton": _cmd_taton,
    "game": _cmd_game,
    "zones": _cmd_zones,
    "reconstruct": _cmd_reconstruct,
    "delta": _cmd_delta,
}


def run_command(argv, out=None) -> int:
    """Dispatch a parsed command; returns the process exit code."""
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args, out)
    except (ParseError, SchemaError, ValidationError, ValueError, KeyError) as exc:
        if getattr(args, "error_json", False):
            json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
            sys.stderr.write("\n")
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
