"""Command-line front end.

Exit status: 10 coherent, 20 incoherent, 2 budget exceeded, 1 error, 0 for
commands that do not solve.  Models print as one line of space-separated
atoms; the auxiliary primed atoms introduced by choice rules are hidden.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .errors import AggrPropError, GroundingBudgetExceeded, TimeBudgetExceeded
from .grounder import DEFAULT_GROUND_CAP, ground_program
from .oracle import DEFAULT_ATOM_CAP, enumerate_stable
from .parser import parse_file
from .propagator import compile
from .solver import MODES, SolveStats, enumerate_models, select_constraints, solve

EXIT_COHERENT = 10
EXIT_INCOHERENT = 20
EXIT_BUDGET = 2
EXIT_ERROR = 1


def format_model(model) -> str:
    atoms = [a for a in model if not a.predicate.endswith("'")]
    return " ".join(str(a) for a in sorted(atoms, key=lambda a: a.sort_key()))


def _cap(text: str):
    return None if text.lower() in ("none", "inf", "0") else int(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggrprop", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a program and print it back normalized")
    p.add_argument("file")

    p = sub.add_parser("ground", help="print the naive grounding")
    p.add_argument("file")
    p.add_argument("--ground-cap", type=_cap, default=DEFAULT_GROUND_CAP)

    p = sub.add_parser("solve", help="compute one stable model")
    p.add_argument("file")
    p.add_argument("--mode", choices=MODES, default="eager")
    p.add_argument("--compile-constraints", default="aggregates",
                   help='"aggregates" (default), "all", "none" or constraint numbers like 0,2')
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.add_argument("--ground-cap", type=_cap, default=DEFAULT_GROUND_CAP)
    p.add_argument("--dump-plans", action="store_true", help="print the compiled join plans")
    p.add_argument("--stats", action="store_true", help="print a semicolon-separated stats row")

    p = sub.add_parser("oracle", help="all stable models by brute force")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=DEFAULT_ATOM_CAP)

    p = sub.add_parser("enumerate", help="several stable models")
    p.add_argument("file")
    p.add_argument("--n", type=int, default=0, help="how many (0 for all)")
    p.add_argument("--mode", choices=MODES, default="eager")
    p.add_argument("--compile-constraints", default="aggregates")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--ground-cap", type=_cap, default=DEFAULT_GROUND_CAP)

    p = sub.add_parser("bench", help="run generated benchmark families and write CSV")
    p.add_argument("--family", default="countgrid", help="comma-separated families")
    p.add_argument("--sizes", default="4..8", help='e.g. "4..8" or "8,16,32"')
    p.add_argument("--modes", default="ground-solve,eager")
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--ground-cap", type=_cap, default=DEFAULT_GROUND_CAP)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--emit", metavar="DIR", help="also write the generated programs here")
    return ap


def _cmd_parse(args):
    print(parse_file(args.file), end="")
    return 0


def _cmd_ground(args):
    gp = ground_program(parse_file(args.file), cap=args.ground_cap)
    print(gp, end="")
    print(f"% {len(gp)} ground rules, {len(gp.atoms)} atoms", file=sys.stderr)
    return 0


def _cmd_solve(args):
    program = parse_file(args.file)
    if args.dump_plans:
        for i in select_constraints(program, args.compile_constraints):
            print(compile(program.rules[i]).dump(), end="")
    res = solve(program, args.mode, ground_cap=args.ground_cap, timeout=args.timeout,
                compile_constraints=args.compile_constraints)
    if res.outcome == "coherent":
        print(format_model(res.model))
    elif res.outcome == "incoherent":
        print("INCOHERENT")
    else:
        print(f"BUDGET EXCEEDED: {res.message}")
    if args.stats:
        print(SolveStats.header())
        print(res.stats.row())
    return {"coherent": EXIT_COHERENT, "incoherent": EXIT_INCOHERENT}.get(res.outcome, EXIT_BUDGET)


def _cmd_oracle(args):
    models = enumerate_stable(parse_file(args.file), atom_cap=args.cap)
    for line in sorted(format_model(m) for m in models):
        print(line)
    return EXIT_COHERENT if models else EXIT_INCOHERENT


def _cmd_enumerate(args):
    models = enumerate_models(parse_file(args.file), args.mode, n=args.n or None,
                              ground_cap=args.ground_cap, timeout=args.timeout,
                              compile_constraints=args.compile_constraints)
    for m in models:
        print(format_model(m))
    return EXIT_COHERENT if models else EXIT_INCOHERENT


def _cmd_bench(args):
    families = [f.strip() for f in args.family.split(",") if f.strip()]
    for f in families:
        if f not in bench.FAMILIES:
            raise ValueError(f"unknown family {f!r}; expected one of {', '.join(bench.FAMILIES)}")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}; expected one of {', '.join(MODES)}")
    specs = [bench.BenchSpec(f, n, args.seed) for f in families for n in bench.parse_sizes(args.sizes)]
    if args.emit:
        out_dir = Path(args.emit)
        out_dir.mkdir(parents=True, exist_ok=True)
        for s in specs:
            (out_dir / f"{s.name}.lp").write_text(bench.generate(s))
    records = bench.bench_run(specs, modes, timeout=args.timeout, ground_cap=args.ground_cap,
                              jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.write_csv(out, specs, modes, records)
    bench.write_cactus(out.with_suffix(".cactus.csv"), modes, records)
    bench.write_stats(out.with_suffix(".stats.csv"), records)
    for r in records:
        cell = "-" if r.seconds is None else f"{r.seconds:.3f}s"
        print(f"{r.instance:<24} {r.mode:<13} {r.outcome:<16} {cell}")
    return 0


COMMANDS = {"parse": _cmd_parse, "ground": _cmd_ground, "solve": _cmd_solve,
            "oracle": _cmd_oracle, "enumerate": _cmd_enumerate, "bench": _cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GroundingBudgetExceeded, TimeBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (AggrPropError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
