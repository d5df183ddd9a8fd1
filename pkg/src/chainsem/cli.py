"""Command-line entry point: run scenarios, validate traces, check invariants.

Exit codes: 0 ok, 2 parse error, 3 execution or replay failure, 4 invariant
violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import check_congress_invariant, check_strengthened_invariant
from .execution import Order, StepError, replay_trace
from .scenario import (
    CONGRESS_ADDR,
    ParseError,
    ScenarioError,
    exploit_scenario,
    parse_scenario,
    run_scenario,
)
from .tracefile import TraceFormatError, dumps_trace, loads_trace

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_EXEC = 3
EXIT_VIOLATED = 4


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _state_summary(state) -> dict:
    chain = state.env.chain
    return {
        "height": chain.chain_height,
        "slot": chain.current_slot,
        "balances": {str(a): str(v) for a, v in sorted(chain.balances.items())},
        "contracts": {str(a): c.name for a, c in sorted(state.env.contracts.items())},
    }


def _load_trace(path: str):
    return loads_trace(Path(path).read_text())


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = parse_scenario(Path(args.scenario).read_text())
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        result = run_scenario(scenario, Order(args.order), keep_going=args.keep_going)
    except ScenarioError as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return EXIT_EXEC
    if args.trace_out:
        Path(args.trace_out).write_text(dumps_trace(result.trace))
    summary = _state_summary(result.state)
    summary["steps"] = len(result.trace)
    summary["rejected_blocks"] = [i for i, _ in result.rejected]
    _emit(summary)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        trace = _load_trace(args.trace)
    except TraceFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        state = replay_trace(trace)
    except StepError as exc:
        _emit({"valid": False, "failing_step": exc.index, "error": exc.detail})
        return EXIT_EXEC
    summary = _state_summary(state)
    summary.update(valid=True, steps=len(trace), queued=len(state.queue))
    _emit(summary)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    try:
        trace = _load_trace(args.trace)
    except TraceFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        if args.strengthened:
            verdict = check_strengthened_invariant(trace, args.address)
        else:
            verdict = check_congress_invariant(trace, args.address)
    except StepError as exc:
        print(f"invalid trace: {exc}", file=sys.stderr)
        return EXIT_EXEC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXEC
    _emit(verdict.to_json())
    return EXIT_OK if verdict.holds else EXIT_VIOLATED


def cmd_demo(args: argparse.Namespace) -> int:
    scenario = exploit_scenario(args.contract, args.reentries)
    result = run_scenario(scenario, Order(args.order), keep_going=True)
    verdict = check_congress_invariant(result.trace, CONGRESS_ADDR)
    out = verdict.to_json()
    out.update(
        contract=args.contract,
        order=args.order,
        address=str(CONGRESS_ADDR),
        rejected_blocks=[i for i, _ in result.rejected],
    )
    _emit(out)
    if args.trace_out:
        Path(args.trace_out).write_text(dumps_trace(result.trace))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainsem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.add_argument("--order", choices=[o.value for o in Order], default="dfs")
    run.add_argument("--trace-out")
    run.add_argument("--keep-going", action="store_true", help="drop rejected blocks instead of stopping")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate-trace", help="replay a trace file from the empty state")
    val.add_argument("trace")
    val.set_defaults(func=cmd_validate)

    chk = sub.add_parser("check-invariant", help="check the Congress counting invariant on a trace")
    chk.add_argument("trace")
    chk.add_argument("--address", type=int, required=True)
    chk.add_argument("--strengthened", action="store_true")
    chk.set_defaults(func=cmd_check)

    demo = sub.add_parser("demo-exploit", help="run the built-in reentrancy scenario")
    demo.add_argument("--order", choices=[o.value for o in Order], default="dfs")
    demo.add_argument("--contract", choices=["buggy_congress", "congress"], default="buggy_congress")
    demo.add_argument("--reentries", type=int, default=3)
    demo.add_argument("--trace-out")
    demo.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
