"""``permsync`` command line.

Exit status: 0 on success, 1 on validation errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import SynthConfig, generate
from .encoder import DEFAULT_LAMBDA, decode, encode
from .errors import PermSyncError
from .experiment import KINDS, SOLVERS, ExperimentSpec, run_experiment
from .formats import (
    export_problem,
    export_qubo,
    import_problem,
    import_qubo,
    qubo_from_dict,
    qubo_to_dict,
    write_sparsity_pbm,
)
from .solvers import AnnealSchedule, sample_sa, solve_exhaustive_binary, solve_exhaustive_permutation

log = logging.getLogger("permsync")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _add_encoding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA, help="penalty weight (default 2.5)")
    p.add_argument("--no-diagonal-blocks", action="store_true", help="omit the -(I kron I) diagonal blocks")
    p.add_argument("--gauge", action=argparse.BooleanOptionalAction, default=True, help="clamp view 1 to identity")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver", choices=SOLVERS, default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reads", type=int, default=200)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=0.1)
    p.add_argument("--beta-end", type=float, default=10.0)
    p.add_argument("--top-k", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permsync", description="Permutation synchronization as a QUBO.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic problem")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--swap-ratio", type=float, default=0.0)
    p.add_argument("--completeness", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="problem JSON path")
    p.add_argument("--truth", help="optional ground-truth JSON path")

    p = sub.add_parser("encode", help="problem JSON -> QUBO text")
    p.add_argument("problem")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sparsity-pbm")
    _add_encoding_flags(p)

    p = sub.add_parser("solve", help="solve a problem JSON (or a QUBO file with --qubo)")
    p.add_argument("input")
    p.add_argument("--qubo", action="store_true", help="input is QUBO text rather than problem JSON")
    p.add_argument("-o", "--output", help="JSON result path (default: stdout)")
    _add_encoding_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("experiment", help="run an ensemble experiment")
    p.add_argument("--spec", help="JSON file with ExperimentSpec fields; flags below are ignored")
    p.add_argument("--kind", choices=KINDS, default="single-solve")
    p.add_argument("--input", help="problem JSON (single-solve only)")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--swap-ratio", type=float, default=0.0)
    p.add_argument("--completeness", type=float, default=1.0)
    p.add_argument("--lambdas", type=_floats, help="comma-separated lambda values (lambda-ablation)")
    p.add_argument("--settings", type=_floats, help="comma-separated sweep values")
    p.add_argument("--ensemble", type=int, default=7)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", default="results.csv")
    p.add_argument("--json", default="summary.json")
    p.add_argument("--pbm")
    p.add_argument("--gnuplot")
    _add_encoding_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("convert", help="convert QUBO text <-> QUBO JSON (by file extension)")
    p.add_argument("input")
    p.add_argument("output")
    return parser


def _cmd_generate(args) -> None:
    gt, g = generate(SynthConfig(args.n, args.m, args.completeness, args.swap_ratio, args.seed))
    export_problem(g, args.output)
    if args.truth:
        data = {"n": g.n, "m": g.m, "absolutes": [list(p.map) for p in gt.absolutes]}
        Path(args.truth).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _cmd_encode(args) -> None:
    q = encode(import_problem(args.problem), args.lam, not args.no_diagonal_blocks, args.gauge)
    export_qubo(q, args.output)
    if args.sparsity_pbm:
        write_sparsity_pbm(q, args.sparsity_pbm)


def _cmd_solve(args) -> None:
    if args.qubo:
        if args.solver == "perm-exhaustive":
            raise PermSyncError("perm-exhaustive needs a problem JSON, not a QUBO file")
        q = import_qubo(args.input)
        g = None
    else:
        g = import_problem(args.input)
        q = encode(g, args.lam, not args.no_diagonal_blocks, args.gauge)
    if args.solver == "exhaustive":
        samples = solve_exhaustive_binary(q, args.top_k)
    elif args.solver == "perm-exhaustive":
        samples = solve_exhaustive_permutation(g, args.lam, args.gauge, args.top_k, not args.no_diagonal_blocks)
    else:
        samples = sample_sa(q, args.reads, AnnealSchedule(args.beta_start, args.beta_end, args.sweeps), args.seed)
    out = {
        "solver": args.solver,
        "samples": [
            {"bits": "".join(str(int(b)) for b in s.bits), "energy": s.energy, "occurrences": s.occurrences}
            for s in samples.samples[: max(args.top_k, 1)]
        ],
    }
    if q.n is not None:
        est = decode(samples.first.bits, q, source=args.solver)
        out["views"] = [v.tolist() for v in est.views]
        out["valid"] = list(est.valid)
    text = json.dumps(out, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_experiment(args) -> None:
    if args.spec:
        spec = ExperimentSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    else:
        spec = ExperimentSpec(
            kind=args.kind,
            n=args.n,
            m=args.m,
            completeness=args.completeness,
            swap_ratio=args.swap_ratio,
            seed=args.seed,
            input_path=args.input,
            lambdas=args.lambdas or [args.lam],
            settings=args.settings,
            solver=args.solver,
            reads=args.reads,
            sweeps=args.sweeps,
            beta_start=args.beta_start,
            beta_end=args.beta_end,
            top_k=args.top_k,
            include_diagonal=not args.no_diagonal_blocks,
            gauge=args.gauge,
            ensemble_size=args.ensemble,
            jobs=args.jobs,
            csv_path=args.csv,
            json_path=args.json,
            pbm_path=args.pbm,
            gnuplot_path=args.gnuplot,
        )
    results = run_experiment(spec)
    log.info("wrote %d rows to %s", len(results), spec.csv_path)


def _cmd_convert(args) -> None:
    src, dst = Path(args.input), Path(args.output)
    if src.suffix == ".json":
        q = qubo_from_dict(json.loads(src.read_text(encoding="utf-8")))
    else:
        q = import_qubo(src)
    if dst.suffix == ".json":
        dst.write_text(json.dumps(qubo_to_dict(q), indent=2) + "\n", encoding="utf-8")
    else:
        export_qubo(q, dst)


_COMMANDS = {
    "generate": _cmd_generate,
    "encode": _cmd_encode,
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
    "convert": _cmd_convert,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _COMMANDS[args.command](args)
    except PermSyncError as exc:
        print(f"permsync: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"permsync: invalid JSON: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"permsync: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
