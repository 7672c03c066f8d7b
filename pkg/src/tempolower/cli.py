"""Batch command-line front end.

Subcommands: parse, lower, validate, plan, equiv.  Exit status:
0 success/valid/agree, 1 invalid/disagree/unsolvable, 2 usage or input
error, 3 inconclusive (search bounds).  File outputs are written
atomically; failures never leave a partial output behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import TempoLowerError
from .lowering import ALL_PASSES, DEFAULT_PASSES, run_pipeline
from .parser import (
    parse_domain, parse_groups, parse_plan, parse_problem, parse_rates,
)
from .printer import print_domain, print_plan, print_problem
from .reports import (
    equivalence_to_dict, equivalence_to_text, lowering_to_dict,
    lowering_to_text, to_json, validation_to_dict, validation_to_text,
)
from .search import check_equivalence, plan_search
from .semantics import LOWERED_MODE, PDDL21_MODE, validate_plan

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def _use_color(stream) -> bool:
    setting = os.environ.get("TEMPOLOWER_COLOR", "auto")
    if setting == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _diagnose(message: str) -> None:
    prefix = "error:"
    if _use_color(sys.stderr):
        prefix = "\x1b[31merror:\x1b[0m"
    print(f"{prefix} {message}", file=sys.stderr)


def _write_atomic(path: str, text: str) -> None:
    target = Path(path)
    if target.exists() and not target.is_file() or target.is_symlink():
        # devices, pipes, symlinks: a rename would replace the node itself
        target.write_text(text)
        return
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."),
                               prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        _write_atomic(path, text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise TempoLowerError(f"cannot read {path}: {exc.strerror}") from exc


def _rational_arg(text: str) -> Fraction:
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _load_inputs(args):
    domain = parse_domain(_read(args.domain), args.domain)
    problem = None
    if getattr(args, "problem", None):
        problem = parse_problem(_read(args.problem), domain, args.problem)
    rates = ()
    if getattr(args, "rates", None):
        rates = parse_rates(_read(args.rates), domain, args.rates)
    groups = ()
    if getattr(args, "groups", None):
        groups = parse_groups(_read(args.groups), domain, args.groups)
    return domain, problem, rates, groups


def _cmd_parse(args) -> int:
    domain = parse_domain(_read(args.domain), args.domain)
    out = print_domain(domain)
    if args.problem:
        problem = parse_problem(_read(args.problem), domain, args.problem)
        out += print_problem(problem)
    _emit(out, args.output)
    return EXIT_OK


def _cmd_lower(args) -> int:
    domain, problem, rates, groups = _load_inputs(args)
    passes = tuple(args.passes.split(",")) if args.passes else DEFAULT_PASSES
    lowered_d, lowered_p, reports = run_pipeline(
        domain, problem, passes, rates, groups)

    report_text = (to_json(lowering_to_dict(reports))
                   if args.format == "json" else lowering_to_text(reports))
    _emit(print_domain(lowered_d), args.out_domain)
    if lowered_p is not None:
        if args.out_problem:
            _write_atomic(args.out_problem, print_problem(lowered_p))
        elif args.out_domain:
            sys.stdout.write(print_problem(lowered_p))
    if args.report:
        _write_atomic(args.report, report_text)
    else:
        sys.stderr.write(report_text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    domain, problem, _, _ = _load_inputs(args)
    if problem is None:
        raise TempoLowerError("validate needs --problem")
    plan = parse_plan(_read(args.plan), args.plan)
    report = validate_plan(domain, problem, plan, args.mode)
    text = (to_json(validation_to_dict(report)) if args.format == "json"
            else validation_to_text(report))
    _emit(text, args.output)
    return EXIT_OK if report.verdict == "valid" else EXIT_NEGATIVE


def _cmd_plan(args) -> int:
    domain, problem, _, _ = _load_inputs(args)
    if problem is None:
        raise TempoLowerError("plan needs --problem")
    result = plan_search(domain, problem, args.mode, args.horizon,
                         args.max_steps, max_nodes=args.max_nodes)
    if result.found:
        _emit(print_plan(result.plan), args.output)
        return EXIT_OK
    print(f"no plan: {result.status} ({result.nodes} nodes)", file=sys.stderr)
    return (EXIT_NEGATIVE if result.status == "unsolvable"
            else EXIT_INCONCLUSIVE)


def _cmd_equiv(args) -> int:
    domain, problem, rates, groups = _load_inputs(args)
    if problem is None:
        raise TempoLowerError("equiv needs --problem")
    passes = tuple(args.passes.split(",")) if args.passes else DEFAULT_PASSES
    lowered_d, lowered_p, reports = run_pipeline(
        domain, problem, passes, rates, groups)
    mappings = [m for r in reports for m in r.range_mappings]
    verdict = check_equivalence(
        (domain, problem), (lowered_d, lowered_p or problem), mappings,
        args.horizon, args.max_steps, max_nodes=args.max_nodes)
    text = (to_json(equivalence_to_dict(verdict)) if args.format == "json"
            else equivalence_to_text(verdict))
    _emit(text, args.output)
    if verdict.status == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK if verdict.agree else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tempolower",
        description="Compile away over-all conditions, at-end conditions, "
                    "and duration ranges; simulate, validate, and certify "
                    "the lowering on micro-instances.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, problem=True, rates=False, groups=False):
        p.add_argument("domain", help="domain file")
        if problem:
            p.add_argument("--problem", help="problem file")
        if rates:
            p.add_argument("--rates", help="rate annotation sidecar")
        if groups:
            p.add_argument("--groups", help="definition group sidecar")

    p = sub.add_parser("parse", help="syntax/type check; print normalized form")
    common(p)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("lower", help="apply lowering passes")
    common(p, rates=True, groups=True)
    p.add_argument("--passes",
                   help=f"comma-separated ordered subset of "
                        f"{{{','.join(ALL_PASSES)}}}; default "
                        f"{','.join(DEFAULT_PASSES)}")
    p.add_argument("--out-domain", help="lowered domain file (default stdout)")
    p.add_argument("--out-problem", help="lowered problem file")
    p.add_argument("--report", help="write the lowering report here "
                                    "(default: text to stderr)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_lower)

    p = sub.add_parser("validate", help="validate a plan")
    common(p)
    p.add_argument("--plan", required=True, help="plan file")
    p.add_argument("--mode", choices=(PDDL21_MODE, LOWERED_MODE),
                   required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", help="report file (default stdout)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("plan", help="bounded forward search for a plan")
    common(p)
    p.add_argument("--mode", choices=(PDDL21_MODE, LOWERED_MODE),
                   required=True)
    p.add_argument("--horizon", type=_rational_arg, required=True,
                   help="latest action start time")
    p.add_argument("--max-steps", type=int, required=True)
    p.add_argument("--max-nodes", type=int, default=200_000)
    p.add_argument("-o", "--output", help="plan file (default stdout)")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("equiv", help="lower, then certify solvability "
                                     "equivalence on a micro-instance")
    common(p, rates=True, groups=True)
    p.add_argument("--passes")
    p.add_argument("--horizon", type=_rational_arg, required=True)
    p.add_argument("--max-steps", type=int, required=True)
    p.add_argument("--max-nodes", type=int, default=200_000)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", help="verdict file (default stdout)")
    p.set_defaults(func=_cmd_equiv)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except TempoLowerError as exc:
        _diagnose(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
