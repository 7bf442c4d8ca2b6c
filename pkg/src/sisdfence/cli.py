"""Command-line front end.

    sisdfence check PROGRAM PROPERTY [--model sisd|si|sc]
    sisdfence fencins PROGRAM PROPERTY [--fences all] [--costs experiments]
    sisdfence litmus [CORPUS_DIR] [--jobs N]
    sisdfence replay PROGRAM VERDICT_JSON [--model ...]

Exit codes: check 0 = holds, 1 = violated; fencins 0 = solved,
3 = uncorrectable; litmus 1 = some mismatch; 2 = error or state budget.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .fencins import CostFn, FenceMenu, synthesize
from .litmus import LitmusError, default_corpus, format_table, run_corpus
from .program import ProgramError, format_program, insert_fences, parse_program
from .reachability import DEFAULT_MAX_STATES, StateBudgetExceeded, explore, parse_property, replay
from .report import (
    BUDGET, FAIL, HOLDS, OPTIMAL, PASS, UNCORRECTABLE, VIOLATED, Verdict, format_fence_set,
    format_trace,
)
from .semantics import MemModel

EXIT_OK, EXIT_VIOLATED, EXIT_ERROR, EXIT_UNCORRECTABLE = 0, 1, 2, 3

log = logging.getLogger("sisdfence")


class CliError(Exception):
    pass


def _load(program_file: str, property_file: str):
    try:
        program = parse_program(Path(program_file).read_text())
    except ProgramError as e:
        raise CliError(f"{program_file}:{e}") from None
    try:
        prop = parse_property(Path(property_file).read_text(), program)
    except ProgramError as e:
        raise CliError(f"{property_file}:{e}") from None
    return program, prop


def _emit(args, verdict: Verdict, program, human: str) -> None:
    if args.json:
        print(verdict.dumps(program))
    else:
        print(human)


def cmd_check(args) -> int:
    program, prop = _load(args.program, args.property)
    start = time.perf_counter()
    try:
        res = explore(program, prop, MemModel(args.model), args.max_states)
    except StateBudgetExceeded as e:
        verdict = Verdict("check", BUDGET, args.model, stats={"max_states": e.limit})
        _emit(args, verdict, program, f"inconclusive: {e}")
        return EXIT_ERROR
    stats = {"states": res.states, "wall_time": round(time.perf_counter() - start, 3)}
    if res.witness is None:
        verdict = Verdict("check", HOLDS, args.model, stats=stats)
        _emit(args, verdict, program,
              f"property holds under {args.model} ({res.states} configurations explored)")
        return EXIT_OK
    if args.verify_witness and not replay(program, res.witness, MemModel(args.model), prop):
        raise CliError("internal error: witness does not replay")
    stats["witness_length"] = len(res.witness)
    verdict = Verdict("check", VIOLATED, args.model, witness=res.witness, stats=stats)
    human = (f"property violated under {args.model}; witness of {len(res.witness)} steps "
             f"({res.states} configurations explored):\n"
             + format_trace(program, res.witness, verbose=args.verbose))
    _emit(args, verdict, program, human)
    return EXIT_VIOLATED


def cmd_fencins(args) -> int:
    program, prop = _load(args.program, args.property)
    costs = CostFn.parse(args.costs)
    menu = FenceMenu.parse(args.fences)
    start = time.perf_counter()
    try:
        res = synthesize(program, prop, costs, menu, args.max_states)
    except StateBudgetExceeded as e:
        verdict = Verdict("fencins", BUDGET, "sisd", stats={"max_states": e.limit})
        _emit(args, verdict, program, f"inconclusive: {e}")
        return EXIT_ERROR
    stats = {"iterations": res.iterations, "states": res.states_explored,
             "wall_time": round(time.perf_counter() - start, 3)}
    if res.uncorrectable:
        verdict = Verdict("fencins", UNCORRECTABLE, "sisd", optimal_sets=[], costs=[],
                          stats=stats)
        _emit(args, verdict, program,
              "uncorrectable: the bad states are reachable without any reordering "
              "(no fence set helps)")
        return EXIT_UNCORRECTABLE
    verdict = Verdict("fencins", OPTIMAL, "sisd", optimal_sets=res.sets,
                      costs=[costs.total(s) for s in res.sets], stats=stats)
    lines = [f"{len(res.sets)} optimal fence set(s), cost {res.cost} "
             f"({res.iterations} iterations):"]
    for s in res.sets:
        lines.append(f"  cost {costs.total(s)}: {format_fence_set(s)}")
    lines.append("")
    lines.append("fenced program for the first set:")
    lines.append(format_program(insert_fences(program, res.sets[0])))
    _emit(args, verdict, program, "\n".join(lines))
    return EXIT_OK


def cmd_litmus(args) -> int:
    corpus = Path(args.corpus) if args.corpus else default_corpus()
    if not corpus.is_dir():
        raise CliError(f"{corpus}: not a directory")
    start = time.perf_counter()
    try:
        rows = run_corpus(corpus, args.jobs, args.max_states)
    except (LitmusError, ProgramError) as e:
        raise CliError(str(e)) from None
    if not rows:
        log.warning("%s: no litmus tests found", corpus)
    ok = all(r.passed for r in rows)
    verdict = Verdict("litmus", PASS if ok else FAIL, rows=[r.to_json() for r in rows],
                      stats={"tests": len(rows), "failed": sum(not r.passed for r in rows),
                             "wall_time": round(time.perf_counter() - start, 3)})
    human = format_table(rows) + f"\n{len(rows)} checks, {verdict.stats['failed']} failed"
    _emit(args, verdict, None, human)
    return EXIT_OK if ok else EXIT_VIOLATED


def cmd_replay(args) -> int:
    try:
        program = parse_program(Path(args.program).read_text())
    except ProgramError as e:
        raise CliError(f"{args.program}:{e}") from None
    verdict = Verdict.from_json(json.loads(Path(args.verdict).read_text()), program)
    if verdict.witness is None:
        raise CliError(f"{args.verdict}: no witness to replay")
    model = MemModel(verdict.model or args.model)
    if not replay(program, verdict.witness, model):
        print("witness does NOT replay")
        return EXIT_VIOLATED
    print(f"witness replays under {model}:")
    print(format_trace(program, verdict.witness, verbose=args.verbose))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sisdfence",
        description="Reachability checking and optimal fence insertion under SiSd.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="print configurations along traces")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    p = sub.add_parser("check", help="decide whether the bad states are reachable")
    p.add_argument("program")
    p.add_argument("property")
    p.add_argument("--model", choices=[m.value for m in MemModel], default="sisd")
    p.add_argument("--verify-witness", action="store_true",
                   help="replay the witness through the semantics before printing")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fencins", help="infer all optimal fence sets")
    p.add_argument("program")
    p.add_argument("property")
    p.add_argument("--fences", default="all",
                   help="'full', 'all', or a list such as 'll,ss,full'")
    p.add_argument("--costs", default="experiments",
                   help="'overview', 'experiments' or 'fence=10,ss=5,...'")
    common(p)
    p.set_defaults(func=cmd_fencins)

    p = sub.add_parser("litmus", help="run a litmus corpus against its expectations")
    p.add_argument("corpus", nargs="?", help="directory (default: the shipped corpus)")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_litmus)

    p = sub.add_parser("replay", help="replay a witness from a JSON verdict")
    p.add_argument("program")
    p.add_argument("verdict")
    p.add_argument("--model", choices=[m.value for m in MemModel], default="sisd")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
