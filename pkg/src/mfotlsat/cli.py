"""Command-line front end.

Exit codes mirror verdicts so shell pipelines can branch without parsing:
10 = counterexample found, 20 = unsatisfiable, 30 = bounded-unsatisfiable,
1 = usage or I/O error, 2 = inconclusive (solver unknown / iteration cap).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from . import grounding, oracle, search
from .core import Not, desugar
from .parsing import ParseError, parse_spec
from .smtlib import SolverError
from .traces import Trace, volume
from .translate import TranslationSession, fol_sexpr

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_BOUNDED_UNSAT = 30
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2


def _load_spec(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    try:
        return parse_spec(text, filename=path)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_bound(text, default):
    if text is None:
        return default
    if text == "unbounded":
        return None
    try:
        b = int(text)
        if b < 0:
            raise ValueError
        return b
    except ValueError:
        print(f"error: --bound must be a natural number or 'unbounded', "
              f"got {text!r}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _verdict_report(verdict, wall_time: float) -> dict:
    report = {"wall_time_s": round(wall_time, 3), "stats": verdict.stats}
    if isinstance(verdict, search.Sat):
        report["verdict"] = "sat"
        report["volume"] = verdict.volume
        report["trace"] = json.loads(verdict.trace.to_json())
    elif isinstance(verdict, search.Unsat):
        report["verdict"] = "unsat"
    else:
        report["verdict"] = "bounded-unsat"
        report["bound"] = verdict.bound
        report["min_volume_lower_bound"] = verdict.min_volume_lower_bound
    return report


def _emit_report(report: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(report, indent=2))
        return
    print(f"verdict: {report['verdict']}")
    if report["verdict"] == "sat":
        print(f"volume: {report['volume']}")
        print("counterexample:")
        for pos in report["trace"]["positions"]:
            atoms = ", ".join(
                f"{a['rel']}({', '.join(map(str, a['args']))})"
                for a in pos["atoms"])
            print(f"  @{pos['time']}: {atoms}")
    elif report["verdict"] == "bounded-unsat":
        print(f"bound: {report['bound']}")
        print(f"min volume lower bound: {report['min_volume_lower_bound']}")
    stats = report["stats"]
    print(f"iterations: {stats.get('iterations', '-')}, "
          f"solver checks: {stats.get('solver_checks', '-')}, "
          f"domain size: {stats.get('domain_size', '-')}, "
          f"wall time: {report['wall_time_s']}s")


def _exit_code(verdict) -> int:
    if isinstance(verdict, search.Sat):
        return EXIT_SAT
    if isinstance(verdict, search.Unsat):
        return EXIT_UNSAT
    return EXIT_BOUNDED_UNSAT


def _run_search(spec, args) -> int:
    bound = _parse_bound(args.bound, spec.default_bound)
    callback = None
    if args.verbose:
        def callback(info):
            print(f"# iteration {info['iteration']}: "
                  f"domain={info['domain_size']} "
                  f"active={info['active_requirements']} "
                  f"min_volume={info['min_volume']}", file=sys.stderr)
    start = time.monotonic()
    try:
        verdict = search.check(
            spec, bound=bound, mode=args.mode, solver=args.solver,
            seed=args.seed, timeout=args.timeout, callback=callback)
    except search.InconclusiveError as e:
        print(f"inconclusive: {e.reason}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except SolverError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _emit_report(_verdict_report(verdict, time.monotonic() - start),
                 args.format)
    return _exit_code(verdict)


def _cmd_check(args) -> int:
    return _run_search(_load_spec(args.spec), args)


def _cmd_translate(args) -> int:
    spec = _load_spec(args.spec)
    ts = TranslationSession()
    print(f"; negated {spec.property_name}")
    print(fol_sexpr(ts.translate_top(desugar(Not(spec.property)))))
    for name, f in spec.requirements:
        print(f"; {name}")
        print(fol_sexpr(ts.translate_top(desugar(f))))
    return 0


def _cmd_ground(args) -> int:
    spec = _load_spec(args.spec)
    try:
        trace = Trace.from_json(Path(args.domain).read_text())
    except (OSError, ValueError, KeyError) as e:
        print(f"error: cannot load domain trace: {e}", file=sys.stderr)
        return EXIT_USAGE
    ts = TranslationSession()
    gs = grounding.GroundingSession(spec.signature, spec.data_constraints)
    dom = grounding.Domain()
    pins = []
    for t, atoms in trace.positions:
        for atom in sorted(atoms, key=lambda a: (a.rel, a.args)):
            o = gs.make_domain_object(atom.rel)
            dom.add(o)
            pins.append(o.p)
            pins.append(f"(= {o.t} {t})")
            pins += [f"(= {o.arg(j)} {v})"
                     for j, v in enumerate(atom.args, start=1)]
    roots = [gs.ground(ts.translate_top(desugar(Not(spec.property))), dom,
                       tag="property")]
    for name, f in spec.requirements:
        roots.append(gs.ground(ts.translate_top(desugar(f)), dom, tag=name))
    for d in gs.declarations:
        print(d)
    for c in gs.clauses:
        tag = gs.provenance.get(c)
        print(f"(assert {c}){f' ; {tag}' if tag else ''}")
    for p in pins:
        print(f"(assert {p}) ; domain pin")
    for r in roots:
        print(f"(assert {r}) ; root")
    return 0


def _parse_range(text: str):
    lo, _, hi = text.partition("..")
    try:
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError
    except ValueError:
        print(f"error: range must look like LO..HI, got {text!r}",
              file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return tuple(range(lo, hi + 1))


def _cmd_oracle(args) -> int:
    spec = _load_spec(args.spec)
    budget = oracle.EnumerationBudget(
        max_volume=args.max_volume,
        values=_parse_range(args.values),
        times=_parse_range(args.times))
    start = time.monotonic()
    try:
        verdict = oracle.enumerate_check(spec, budget)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _emit_report(_verdict_report(verdict, time.monotonic() - start),
                 args.format)
    return _exit_code(verdict)


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("mfotlsat") / "fixtures" / name))


def _cmd_bench(args) -> int:
    if args.suite != "dcc":
        print(f"error: unknown benchmark suite {args.suite!r}", file=sys.stderr)
        return EXIT_USAGE
    cases = [
        ("dcc_p1_weak.spec", "weak requirement set vs P1"),
        ("dcc_p1_strong.spec", "strong requirement set vs P1"),
        ("dcc_p1_reqs12.spec", "update/write requirements vs P1"),
    ]
    worst = 0
    for fname, label in cases:
        spec = parse_spec(fixture_path(fname).read_text(), filename=fname)
        start = time.monotonic()
        try:
            verdict = search.check(spec, bound=spec.default_bound,
                                   mode=args.mode, solver=args.solver,
                                   seed=args.seed, timeout=args.timeout)
        except search.InconclusiveError as e:
            print(f"{label}: inconclusive ({e.reason})")
            worst = max(worst, EXIT_INCONCLUSIVE)
            continue
        elapsed = time.monotonic() - start
        if isinstance(verdict, search.Sat):
            print(f"{label}: sat, volume {verdict.volume} ({elapsed:.2f}s)")
        elif isinstance(verdict, search.Unsat):
            print(f"{label}: unsat ({elapsed:.2f}s)")
        else:
            print(f"{label}: bounded-unsat at {verdict.bound}, "
                  f"lower bound {verdict.min_volume_lower_bound} "
                  f"({elapsed:.2f}s)")
    return worst


def _add_solver_flags(p):
    p.add_argument("--solver", help="SMT solver command (default: autodetect)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=60.0,
                   help="per-query solver timeout in seconds")


def _add_output_flags(p):
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfotlsat",
        description="Bounded satisfiability checking for metric first-order "
                    "temporal specifications")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="search for a minimal counterexample")
    p.add_argument("spec")
    p.add_argument("--bound", help="volume bound (natural) or 'unbounded'")
    p.add_argument("--mode", choices=[search.OPTIMAL, search.GREEDY],
                   default=search.OPTIMAL)
    _add_solver_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("translate", help="print the first-order translation")
    p.add_argument("spec")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("ground", help="print the grounding over a fixed trace")
    p.add_argument("spec")
    p.add_argument("--domain", required=True, help="trace JSON file")
    p.set_defaults(func=_cmd_ground)

    p = sub.add_parser("oracle", help="brute-force enumeration check")
    p.add_argument("spec")
    p.add_argument("--max-volume", type=int, required=True)
    p.add_argument("--values", required=True, help="LO..HI")
    p.add_argument("--times", required=True, help="LO..HI")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bench", help="run the built-in benchmark fixtures")
    p.add_argument("suite", choices=["dcc"])
    p.add_argument("--mode", choices=[search.OPTIMAL, search.GREEDY],
                   default=search.OPTIMAL)
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def run_check(argv) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE


def main() -> None:
    sys.exit(run_check(sys.argv[1:]))
