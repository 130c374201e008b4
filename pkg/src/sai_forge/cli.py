"""Command line entry point ``sai-forge``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import SaiConfig
from .harness import ExperimentSpec, emit_report, matrix_stats, prepare_matrix, run_experiment
from .mmio import MatrixMarketError, load_matrix_market, pattern_dump
from .precond import build_preconditioner

EXIT_SPEC_ERROR = 2


def _onoff(s: str) -> bool:
    s = s.lower()
    if s in ("on", "yes", "true", "1"):
        return True
    if s in ("off", "no", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {s!r}")


def _lmax_arg(s: str):
    return s if s == "auto" else int(s)


def _add_sai_args(p: argparse.ArgumentParser, multi: bool) -> None:
    nargs = "+" if multi else None
    p.add_argument("--alg", nargs=nargs, default=["rsai"] if multi else "rsai", choices=["rsai", "spai"])
    p.add_argument("--eps", nargs=nargs, type=float, default=[0.4] if multi else 0.4,
                   help="column residual tolerance")
    p.add_argument("--c", nargs=nargs, type=int, default=[3] if multi else 3,
                   help="dominant indices per RSAI loop")
    p.add_argument("--lmax", nargs=nargs, type=int, default=[10] if multi else 10, help="maximum loops")
    p.add_argument("--la", nargs=nargs, type=int, default=[3] if multi else 3,
                   help="profitable indices per SPAI loop")
    p.add_argument("--drop", nargs=nargs, type=_onoff, default=[True] if multi else True,
                   help="adaptive dropping on/off (RSAI)")
    p.add_argument("--spai-cap", type=float, default=5.0, help="nnz(M)/nnz(A) cap used for the SPAI loop limit")
    p.add_argument("--spai-lmax", type=_lmax_arg, default="auto",
                   help="SPAI loop limit: 'auto' derives it from --spai-cap, otherwise an integer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sai-forge", description="Sparse approximate inverse preconditioning")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="build preconditioners and solve with BiCGStab")
    run.add_argument("--matrix", nargs="+", required=True, help="Matrix Market file(s)")
    _add_sai_args(run, multi=True)
    run.add_argument("--rtol", type=float, default=1e-8)
    run.add_argument("--maxit", type=int, default=1000)
    run.add_argument("--threads", type=int, default=1, help="sweep points run concurrently")
    run.add_argument("--format", choices=["table", "csv", "json"], default="table")
    run.add_argument("--seed", type=int, default=0)

    pat = sub.add_parser("pattern", help="write the nonzero pattern of M")
    pat.add_argument("--matrix", required=True)
    _add_sai_args(pat, multi=False)
    pat.add_argument("--threads", type=int, default=1)
    pat.add_argument("--out", required=True)

    info = sub.add_parser("info", help="print matrix statistics")
    info.add_argument("--matrix", nargs="+", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "run":
        try:
            spec = ExperimentSpec(
                matrices=args.matrix, algorithms=args.alg, epsilons=args.eps, cs=args.c,
                l_maxes=args.lmax, l_as=args.la, droppings=args.drop,
                spai_nnz_cap_ratio=args.spai_cap, spai_lmax=args.spai_lmax, rtol=args.rtol,
                max_iters=args.maxit, output_format=args.format, workers=args.threads, seed=args.seed,
            )
        except (ValueError, TypeError) as exc:
            print(f"sai-forge: invalid experiment: {exc}", file=sys.stderr)
            return EXIT_SPEC_ERROR
        reports = run_experiment(spec)
        sys.stdout.write(emit_report(reports, spec.output_format))
        return 0

    if args.command == "pattern":
        try:
            cfg = SaiConfig(epsilon=args.eps, c=args.c, l_max=args.lmax, dropping=args.drop,
                            l_a=args.la, spai_nnz_cap_ratio=args.spai_cap)
        except ValueError as exc:
            print(f"sai-forge: invalid parameters: {exc}", file=sys.stderr)
            return EXIT_SPEC_ERROR
        try:
            A, _ = prepare_matrix(args.matrix)
        except (OSError, MatrixMarketError, ValueError) as exc:
            print(f"sai-forge: {exc}", file=sys.stderr)
            return 1
        lmax = None
        if args.alg == "spai":
            lmax = cfg.spai_lmax(A) if args.spai_lmax == "auto" else args.spai_lmax
        pre = build_preconditioner(A, cfg, args.alg, workers=args.threads, spai_lmax=lmax)
        pattern_dump(pre.M, args.out)
        print(f"wrote {pre.M.nnz} entries ({pre.M.n_rows}x{pre.M.n_cols}, n_c={pre.n_c}) to {args.out}")
        return 0

    if args.command == "info":
        for path in args.matrix:
            try:
                stats = matrix_stats(load_matrix_market(path))
            except (OSError, MatrixMarketError) as exc:
                print(f"sai-forge: {exc}", file=sys.stderr)
                return 1
            print(json.dumps({"matrix": path, **stats}))
        return 0
    return EXIT_SPEC_ERROR


if __name__ == "__main__":
    sys.exit(main())
