"""Command-line front end: ``gnf check | eval | iterate | audit``.

Exit codes: 0 success, 1 check/audit/runtime violations, 2 usage or parse
errors, 3 evaluation errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import check_system
from .complexity import audit, flat_lists, generated_inputs, parse_inputs
from .engine import (
    Session,
    accepted,
    crosscheck_fixpoint,
    enumerate_universe,
    inject_fault,
    run_to_fixpoint,
    verify_monotone,
)
from .errors import ElementSyntaxError, EvaluationError, GNFError, RuntimeViolation, SystemLoadError, UniverseTooLarge
from .hwm import ATOM_RE, parse_element, render_element
from .system import GNFSystem, load_system

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_EVAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected LO:HI")
    a, b = _positive(lo), _positive(hi)
    if a > b:
        raise argparse.ArgumentTypeError("LO must not exceed HI")
    return a, b


def _symbol(sys_: GNFSystem, text: str) -> int:
    if not (text.startswith("f") and text[1:].isdigit()) or not 1 <= int(text[1:]) <= sys_.n:
        raise UsageError(f"unknown recursive symbol {text!r} (system has f1..f{sys_.n})")
    return int(text[1:])


def _atoms(sys_: GNFSystem, text: str | None) -> list[str]:
    if text is None:
        return list(sys_.alphabet.user_names)
    names = [a.strip() for a in text.split(",") if a.strip()]
    for a in names:
        if not ATOM_RE.fullmatch(a) or a not in sys_.alphabet or a == "false":
            raise UsageError(f"atom {a!r} is not declared by the system")
    return names


def _load(path: str) -> GNFSystem:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"cannot read {path}")
    return load_system(p)


def _not_accepted(sys_: GNFSystem) -> int:
    report = check_system(sys_)
    print(f"{sys_.name}: rejected by static checks ({', '.join(report.failed) or 'skipped conditions'}); "
          "use --force to run anyway", file=sys.stderr)
    return EXIT_VIOLATION


# ---------------------------------------------------------------- subcommands

def cmd_check(args, out) -> int:
    sys_ = _load(args.system)
    report = check_system(sys_)
    if args.format == "json":
        out.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        out.write(report.render_text())
    return EXIT_OK if report.accepted else EXIT_VIOLATION


def cmd_eval(args, out) -> int:
    sys_ = _load(args.system)
    i = _symbol(sys_, args.symbol)
    w = parse_element(args.element, sys_.alphabet)
    if not args.force and not accepted(sys_):
        return _not_accepted(sys_)
    session = Session(sys_, memo=not args.no_memo, trace=args.trace, force=True)
    outcome = session.evaluate(i, w)
    for line in outcome.trace_lines():
        out.write(line + "\n")
    out.write(render_element(outcome.result) + "\n")
    out.write(outcome.measurement.render() + "\n")
    return EXIT_OK


def cmd_iterate(args, out) -> int:
    sys_ = _load(args.system)
    if not args.force and not accepted(sys_):
        return _not_accepted(sys_)
    atoms = _atoms(sys_, args.atoms)
    domain = enumerate_universe(atoms, args.max_size, args.max_rank)
    run = run_to_fixpoint(sys_, domain, args.max_stages)
    if args.inject_fault:
        inject_fault(run.stages)
    out.write(f"slice: {len(domain)} elements over {{{','.join(atoms)}}}, "
              f"size <= {args.max_size}, rank <= {args.max_rank}\n")
    for st in run.stages:
        counts = " ".join(f"f{i}={st.defined_count(i)}" for i in sorted(st.entries))
        out.write(f"stage {st.stage}: defined {st.defined_count()} ({counts})\n")
    if run.stabilized_at is None:
        out.write(f"not stabilized within {args.max_stages} stages\n")
    else:
        out.write(f"stabilized at stage {run.stabilized_at}\n")
    status = EXIT_OK
    if args.verify:
        mono = verify_monotone(run.stages)
        out.write(f"monotone: {mono.render()}\n")
        cross = crosscheck_fixpoint(sys_, run.stages)
        out.write(f"crosscheck: {cross.render()}\n")
        if not (mono.passed and cross.passed):
            status = EXIT_VIOLATION
    return status


def _audit_inputs(sys_: GNFSystem, args) -> list:
    atoms = _atoms(sys_, args.atoms)
    if args.inputs:
        p = Path(args.inputs)
        if not p.is_file():
            raise UsageError(f"cannot read {args.inputs}")
        return parse_inputs(p.read_text(encoding="utf-8"), sys_.alphabet)
    if args.flat:
        lo, hi = args.flat
        return flat_lists(atoms, range(lo, hi + 1))
    if args.exhaustive:
        return enumerate_universe(atoms, args.exhaustive, args.exhaustive)
    return generated_inputs(atoms, args.max_size, per_size=args.per_size, seed=args.seed)


def cmd_audit(args, out) -> int:
    sys_ = _load(args.system)
    i = _symbol(sys_, args.symbol)
    if not args.force and not accepted(sys_):
        return _not_accepted(sys_)
    inputs = _audit_inputs(sys_, args)
    outputs = []
    if args.out:
        prefix = Path(args.out)
        outputs = [prefix.with_name(prefix.name + ".json"), prefix.with_name(prefix.name + ".csv")]
        for p in outputs:
            try:
                with open(p, "w", encoding="utf-8"):
                    pass
            except OSError as exc:
                raise UsageError(f"cannot write {p}: {exc.strerror}") from None
    report = audit(sys_, inputs, symbol=i, force=True, fit=args.fit)
    if outputs:
        outputs[0].write_text(report.to_json(), encoding="utf-8")
        outputs[1].write_text(report.to_csv(), encoding="utf-8")
    if args.format == "json":
        out.write(report.to_json())
    else:
        out.write(report.render_text())
    return EXIT_VIOLATION if report.violations else EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the static side-condition checks")
    p.add_argument("system")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="evaluate f_i at one element")
    p.add_argument("system")
    p.add_argument("symbol", help="recursive symbol, e.g. f1")
    p.add_argument("element", help="element text, e.g. '<a,<b,c>>'")
    p.add_argument("--trace", action="store_true", help="print one EVAL line per computed call")
    p.add_argument("--no-memo", action="store_true", help="disable memoization")
    p.add_argument("--force", action="store_true", help="evaluate even if static checks fail")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("iterate", help="stagewise fixed-point iteration over a finite slice")
    p.add_argument("system")
    p.add_argument("--atoms", help="comma-separated atoms (default: all declared)")
    p.add_argument("--max-size", type=_positive, default=6)
    p.add_argument("--max-rank", type=_positive, default=3)
    p.add_argument("--max-stages", type=_positive, default=16)
    p.add_argument("--verify", action="store_true", help="check monotonicity and agreement with eval")
    p.add_argument("--force", action="store_true")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("audit", help="measure steps and output sizes against the polynomial bounds")
    p.add_argument("system")
    p.add_argument("--symbol", default="f1")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--inputs", help="file with one element per line")
    src.add_argument("--flat", type=_range, metavar="LO:HI", help="flat lists with sizes LO..HI")
    src.add_argument("--exhaustive", type=_positive, metavar="N", help="every element of size <= N")
    p.add_argument("--max-size", type=_positive, default=20, help="largest generated input (default 20)")
    p.add_argument("--per-size", type=_positive, default=4, help="random inputs per size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--atoms", help="comma-separated atoms for generated inputs")
    p.add_argument("--out", help="write PREFIX.json and PREFIX.csv")
    p.add_argument("--fit", action="store_true", help="fit a log-log exponent of steps against size")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (UsageError, SystemLoadError, ElementSyntaxError, UniverseTooLarge) as exc:
        print(f"gnf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeViolation as exc:
        print(f"gnf: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (EvaluationError, GNFError) as exc:
        print(f"gnf: evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
