"""Command-line front end; every command prints one JSON document on stdout."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .exactnum import InvalidOperandError, ResourceError, SuccinctProduct, as_rational, budget, csri_compare
from .mc import mc_values
from .mdp import DEFAULT_ENUM_CAP, mdp_values, minimize_values
from .model import AnalysisMode, Model, ModelError, format_value, invert_rewards, load_model
from .sim import UnreliableEstimateError, simulate_absorbing
from .ssp import mssp

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NO = 3


class UsageError(Exception):
    pass


def _values(values) -> dict[str, str]:
    return {k: format_value(v) for k, v in values.items()}


def _mc_document(m: Model, mode: AnalysisMode, minimize: bool) -> dict:
    chain = invert_rewards(m) if minimize else m
    run_mode = mode.swapped() if minimize else mode
    values, report = mc_values(chain, run_mode)
    if minimize:
        values = {k: (0 if v == float("inf") else (float("inf") if v == 0 else 1 / v)) for k, v in values.items()}
    doc = {
        "kind": "markov-chain",
        "values": _values(values),
        "report": report.to_dict(chain),
        "scheduler": {m.names[s]: m.actions[s][0].name for s in range(m.n)},
    }
    if report.witness:
        doc["witness"] = report.witness
    return doc


def cmd_analyze(args) -> tuple[dict, int]:
    m = load_model(args.file)
    mode = AnalysisMode(args.mode)
    if m.is_markov_chain():
        doc = _mc_document(m, mode, args.minimize)
    else:
        run = minimize_values if args.minimize else mdp_values
        res = run(m, mode, cap=args.max_schedulers)
        doc = {
            "kind": "mdp",
            "values": _values(res.values),
            "report": res.report,
            "scheduler": res.scheduler,
            "scheduler_optimal": res.scheduler_optimal,
        }
        if res.witness:
            doc["witness"] = res.witness
    doc.update(mode=mode.value, objective="min" if args.minimize else "max", initial=m.names[m.initial])
    doc["value"] = doc["values"][m.names[m.initial]]
    return doc, EXIT_OK


def cmd_ssp(args) -> tuple[dict, int]:
    m = load_model(args.file)
    res = mssp(m, args.target, cap=args.max_schedulers)
    doc = {
        "value": format_value(res.value),
        "values": _values(res.values),
        "scheduler": res.scheduler,
        "removed_states": sorted(res.removed_states),
        "report": res.report,
    }
    if res.witness:
        doc["witness"] = res.witness
    return doc, EXIT_OK


def cmd_threshold(args) -> tuple[dict, int]:
    m = load_model(args.file)
    mode = AnalysisMode(args.mode)
    try:
        theta = as_rational(args.theta)
    except (TypeError, ValueError) as e:
        raise UsageError(f"--theta: {e}") from e
    if m.is_markov_chain():
        value = mc_values(m, mode)[0][m.names[m.initial]]
    else:
        value = mdp_values(m, mode, cap=args.max_schedulers).value_at()
    answer = value == float("inf") or value >= theta
    doc = {"value": format_value(value), "theta": format_value(theta), "mode": mode.value, "answer": answer}
    return doc, EXIT_OK if answer else EXIT_NO


def _load_scheduler(text: str) -> dict[str, str]:
    path = Path(text)
    raw = path.read_text(encoding="utf-8") if path.exists() else text
    try:
        sched = json.loads(raw)
    except json.JSONDecodeError as e:
        raise UsageError(f"--scheduler: not a JSON object or file: {e}") from e
    if not isinstance(sched, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in sched.items()):
        raise UsageError("--scheduler must map state names to action names")
    return sched


def cmd_simulate(args) -> tuple[dict, int]:
    m = load_model(args.file)
    sched = _load_scheduler(args.scheduler) if args.scheduler else {}
    for name, action in sched.items():
        if name not in m.index:
            raise ModelError(f"scheduler names unknown state {name!r}")
        if action not in {a.name for a in m.actions[m.index[name]]}:
            raise ModelError(f"state {name} has no action {action!r}", "scheduler")
    stats = simulate_absorbing(m, sched, args.episodes, args.horizon, args.seed)
    doc = {
        "episodes": stats.episodes,
        "mean": stats.mean,
        "std_error": stats.std_error,
        "truncated": stats.truncated,
        "seed": args.seed,
        "generator": "Philox",
    }
    return doc, EXIT_OK


def cmd_compare(args) -> tuple[dict, int]:
    try:
        lhs = SuccinctProduct.parse(args.lhs)
        rhs = SuccinctProduct.parse(args.rhs)
    except ValueError as e:
        raise UsageError(str(e)) from e
    order = csri_compare(lhs, rhs)
    word = {-1: "less", 0: "equal", 1: "greater"}[int(order)]
    return {"lhs": str(lhs), "rhs": str(rhs), "result": word}, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multreward", description=__doc__)
    p.add_argument("--max-schedulers", type=int, default=DEFAULT_ENUM_CAP, help="cap on MD-schedulers enumerated per end component")
    p.add_argument("--max-bits", type=int, default=None, help="bit budget of exact big-integer comparisons")
    p.add_argument("--max-prec", type=int, default=None, help="highest precision tried by the interval filter")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="values of a Markov chain or optimal values of an MDP")
    a.add_argument("file")
    a.add_argument("--mode", choices=["sup", "inf"], default="sup")
    a.add_argument("--minimize", action="store_true", help="minimise via reward inversion")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("ssp", help="multiplicative stochastic shortest path")
    s.add_argument("file")
    s.add_argument("--target", required=True)
    s.set_defaults(func=cmd_ssp)

    t = sub.add_parser("threshold", help="is the optimal value at least theta? exit 0 = yes, 3 = no")
    t.add_argument("file")
    t.add_argument("--mode", choices=["sup", "inf"], default="sup")
    t.add_argument("--theta", required=True, help="rational as p/q")
    t.set_defaults(func=cmd_threshold)

    m = sub.add_parser("simulate", help="Monte Carlo estimate under an MD-scheduler")
    m.add_argument("file")
    m.add_argument("--scheduler", help="JSON file or inline JSON object: state -> action")
    m.add_argument("--episodes", type=int, default=100_000)
    m.add_argument("--horizon", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help='compare two products such as "2^6" and "4^3"')
    c.add_argument("lhs")
    c.add_argument("rhs")
    c.set_defaults(func=cmd_compare)
    return p


def _error(kind: str, message: str, where: str | None = None) -> dict:
    err = {"type": kind, "message": message}
    if where:
        err["where"] = where
    return {"error": err}


def run(argv: list[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    limits = {k: v for k, v in (("max_bits", args.max_bits), ("max_prec", args.max_prec)) if v is not None}
    start = time.perf_counter()
    try:
        with budget(**limits):
            doc, code = args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        json.dump(_error("usage", str(e)), out)
        out.write("\n")
        return EXIT_USAGE
    except (ModelError, ResourceError, InvalidOperandError, UnreliableEstimateError, OSError, ValueError) as e:
        where = getattr(e, "where", None)
        print(f"error: {e}", file=sys.stderr)
        json.dump(_error(type(e).__name__, str(e), where), out)
        out.write("\n")
        return EXIT_ERROR
    doc["command"] = args.command
    doc["timing_seconds"] = round(time.perf_counter() - start, 6)
    json.dump(doc, out, indent=2)
    out.write("\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
