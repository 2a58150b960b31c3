"""Command line entry point: ``flowrack {solve,oracle,check,simulate}``.

Exit codes: 0 ok, 1 input error, 2 infeasible request, 3 enumeration
budget exceeded, 4 plan check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from flowrack import io
from flowrack.errors import BudgetExceeded, DimensionMismatch, FlowRackError, Infeasible
from flowrack.optimizer import DEFAULT_BUDGET, RULES, evaluate_plan, solve, solve_bruteforce
from flowrack.simulation import run

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_CHECK_FAILED = 4


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def _load_instance(args):
    request = io.parse_request(io.load_json(args.request))
    rack = io.parse_rack(io.load_json(args.rack), len(request))
    return rack, request


def _emit_plan(args, plan, rack, request, extra=None) -> None:
    report = io.PlanReport.from_plan(plan, rack, request)
    if args.format == "structured":
        doc = report.to_dict()
        if extra:
            doc.update(extra)
        print(_dump(doc))
    else:
        print(io.render_table(report))
        for key, value in (extra or {}).items():
            print(f"{key.replace('_', ' ')}: {value}")


def _infeasible(args, exc: Infeasible) -> int:
    entries = exc.shortfall.entries
    if args.format == "structured":
        print(_dump({"infeasible": True, "shortfall": [
            {"type": t, "requested": q, "available": a} for t, q, a in entries]}))
    else:
        print("infeasible request")
        print(io.render_shortfall(entries))
    return EXIT_INFEASIBLE


def cmd_solve(args) -> int:
    rack, request = _load_instance(args)
    try:
        plan = solve(rack, request)
    except Infeasible as exc:
        return _infeasible(args, exc)
    _emit_plan(args, plan, rack, request)
    return EXIT_OK


def cmd_oracle(args) -> int:
    rack, request = _load_instance(args)
    try:
        plan = solve_bruteforce(rack, request, budget=args.budget)
    except Infeasible as exc:
        return _infeasible(args, exc)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    extra = {"vectors_enumerated": plan.stats.explored, "optimal_vectors": plan.stats.optima}
    _emit_plan(args, plan, rack, request, extra)
    if args.format == "table":
        print(f"{plan.stats.explored} vectors enumerated")
    return EXIT_OK


def cmd_check(args) -> int:
    rack, request = _load_instance(args)
    plan = io.parse_plan(io.load_json(args.plan))
    try:
        ev = evaluate_plan(rack, request, plan["selection"], marks=plan.get("marks"),
                           cut_depths=plan.get("cut_depths"))
    except DimensionMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    failed = {}
    for v in ev.violations:
        failed.setdefault(v.rule, []).append(v)
    if args.format == "structured":
        print(_dump({
            "ok": ev.ok,
            "objective": ev.objective,
            "delivered": ev.delivered,
            "restored": ev.restored,
            "delivery_rate": ev.delivery_rate,
            "rules": {rule: "FAIL" if rule in failed else "PASS" for rule in RULES},
            "violations": [{"rule": v.rule, "bin": v.bin, "slot": v.slot, "type": v.type,
                            "detail": v.detail} for v in ev.violations],
        }))
    else:
        for rule, text in RULES.items():
            status = "FAIL" if rule in failed else "PASS"
            print(f"{status}  {rule:<17} {text}")
            for v in failed.get(rule, ()):
                where = []
                if v.bin is not None:
                    where.append(f"bin f{v.bin}")
                if v.slot is not None:
                    where.append(f"slot e{v.slot}")
                if v.type is not None:
                    where.append(f"type {v.type}")
                print(f"      at {', '.join(where) or 'plan'}: {v.detail}".rstrip(": "))
        if ev.ok:
            print(f"objective: {ev.objective}  restored: {ev.restored}  "
                  f"delivery rate: {ev.delivery_rate:.2f}")
    return EXIT_OK if ev.ok else EXIT_CHECK_FAILED


def cmd_simulate(args) -> int:
    scenario = io.parse_scenario(io.load_json(args.scenario))
    if args.seed is not None:
        scenario.seed = args.seed
    result = run(scenario)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fh.write(result.trace_jsonl())
    if args.format == "structured":
        print(_dump(io.simulation_to_dict(result)))
    else:
        sys.stdout.write(io.render_simulation(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowrack",
        description="Minimum retrieval-cycle planning and simulation for flow-rack AS/RS.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, plan=False):
        p.add_argument("--rack", required=True, help="rack JSON file")
        p.add_argument("--request", required=True, help="request JSON file")
        if plan:
            p.add_argument("--plan", required=True, help="plan JSON file")
        p.add_argument("--format", choices=("table", "structured"), default="table")

    p = sub.add_parser("solve", help="exact branch-and-bound plan")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive cut-depth enumeration")
    common(p)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                   help="maximum number of cut-depth vectors (default %(default)s)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="validate a plan against the constraints")
    common(p, plan=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a closed-loop scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--trace-out", default=None, help="write the event trace as JSON lines")
    p.add_argument("--format", choices=("table", "structured"), default="table")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FlowRackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
