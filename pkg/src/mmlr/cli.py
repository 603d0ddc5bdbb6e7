"""Command-line front end: fit, generate, evaluate, bench, validate.

Exit codes: 0 success, 1 validation-bound violation, 2 bad flags,
3 data errors, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .dataset import load_csv, write_csv
from .driver import MmlrConfig, run_mmlr, training_mse
from .errors import CsvFormatError, MmlrError, SingularDesign, TooFewRows
from .evaluate import compare_methods, plot_data_csv, reports_to_csv, scaling_benchmark
from .sampling import Hypercube
from .synth import SynthSpec, generate, truth_to_dict
from .validate import (chebyshev_norm_simulation, coverage_simulation,
                       tiny_delta_simulation)

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 1
EXIT_BAD_FLAGS = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERICAL = 4


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="coefficient error bound (default 0.1)")
    p.add_argument("--delta", type=float, default=0.05,
                   help="allowed failure probability (default 0.05)")
    p.add_argument("--max-models", type=int, default=10,
                   help="model budget (default 10)")
    p.add_argument("--min-remaining", type=int, default=None,
                   help="stop once at most this many rows remain")
    p.add_argument("--p-gate", type=float, default=0.05,
                   help="F-test certification threshold (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--sigma", type=float, default=None,
                   help="known noise std; estimated when omitted")


def _config_from(args) -> MmlrConfig:
    return MmlrConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        max_models=args.max_models,
        min_remaining=args.min_remaining,
        p_gate=args.p_gate,
        seed=args.seed,
        sigma_override=args.sigma,
    )


def _add_synth_flags(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    if with_n:
        p.add_argument("--n", type=int, help="number of rows")
    p.add_argument("--k", type=int, default=1, help="feature dimension (default 1)")
    p.add_argument("--regimes", type=int, default=2,
                   help="number of linear regimes (default 2)")
    p.add_argument("--noise", type=float, default=0.1,
                   help="noise standard deviation (default 0.1)")
    p.add_argument("--domain-lo", type=float, default=0.0,
                   help="lower bound of every feature (default 0)")
    p.add_argument("--domain-hi", type=float, default=10.0,
                   help="upper bound of every feature (default 10)")


def _spec_from(args, n: int | None = None) -> SynthSpec:
    k = args.k
    return SynthSpec(
        n_rows=n if n is not None else args.n,
        n_features=k,
        n_regimes=args.regimes,
        noise_std=args.noise,
        domain=Hypercube(lo=np.full(k, args.domain_lo), hi=np.full(k, args.domain_hi)),
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmlr",
        description="Multiple-model linear regression for large numeric datasets.",
        epilog="Exit codes: 0 ok, 1 validation bound violated, 2 bad flags, "
               "3 data error, 4 numerical failure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model set to a CSV file")
    p_fit.add_argument("--input", required=True, help="input CSV path")
    p_fit.add_argument("--response", default=None,
                       help="response column name (default: last column)")
    _add_config_flags(p_fit)
    p_fit.add_argument("--output", required=True, help="output JSON path")
    p_fit.add_argument("--no-rows", action="store_true",
                       help="omit per-model row index lists from the JSON")

    p_gen = sub.add_parser("generate", help="write a synthetic piecewise-linear CSV")
    p_gen.add_argument("--spec", default=None,
                       help="JSON file with n/k/regimes/noise/domain/seed "
                            "(mutually exclusive with inline flags)")
    _add_synth_flags(p_gen)
    p_gen.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p_gen.add_argument("--output", required=True, help="output CSV path")
    p_gen.add_argument("--truth", default=None,
                       help="optional JSON path for regime truth and labels")

    p_eval = sub.add_parser("evaluate",
                            help="compare the multi-model fit against the single-model baseline")
    p_eval.add_argument("--input", required=True, help="input CSV path")
    p_eval.add_argument("--response", default=None,
                        help="response column name (default: last column)")
    _add_config_flags(p_eval)
    p_eval.add_argument("--holdout", type=float, default=0.2,
                        help="held-out fraction in (0, 0.5] (default 0.2)")
    p_eval.add_argument("--train-rmse", action="store_true",
                        help="score on the training split instead of the holdout")
    p_eval.add_argument("--output-csv", default=None, help="write the report table here")
    p_eval.add_argument("--output-json", default=None, help="write the reports as JSON here")
    p_eval.add_argument("--plot-csv", default=None, help="write plot-ready long-format CSV here")

    p_bench = sub.add_parser("bench", help="runtime scaling sweep over dataset sizes")
    p_bench.add_argument("--sizes", required=True,
                         help="comma-separated ascending row counts, e.g. 100000,200000,400000")
    _add_synth_flags(p_bench, with_n=False)
    _add_config_flags(p_bench)
    p_bench.add_argument("--output-csv", default=None, help="write (n, seconds) rows here")

    p_val = sub.add_parser("validate", help="run a Monte Carlo validation suite")
    p_val.add_argument("--suite", required=True,
                       choices=["coverage", "theorems", "lemma32"],
                       help="coverage: estimator failure rate; theorems: tiny-delta "
                            "constant and variance ordering; lemma32: uniform-norm bound")
    p_val.add_argument("--trials", type=int, default=10_000,
                       help="Monte Carlo trials (min 100, default 10000)")
    p_val.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p_val.add_argument("--epsilon", type=float, default=0.2,
                       help="coefficient error bound (coverage suite, default 0.2)")
    p_val.add_argument("--delta", type=float, default=0.05,
                       help="failure probability (coverage suite, default 0.05)")
    return parser


def cmd_fit(args) -> int:
    ds = load_csv(args.input, response_column=args.response)
    cfg = _config_from(args)
    cfg.validate()
    start = time.perf_counter()
    ms = run_mmlr(ds, cfg)
    elapsed = time.perf_counter() - start
    mse = training_mse(ms, ds)
    with open(args.output, "w") as fh:
        fh.write(ms.to_json(include_rows=not args.no_rows, mse=mse))
        fh.write("\n")
    print(f"m={ms.m} mse={mse:.17g} time={elapsed:.3f}s")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.spec is not None:
        if args.n is not None:
            raise FlagError("--spec and inline flags are mutually exclusive")
        with open(args.spec) as fh:
            raw = json.load(fh)
        k = int(raw["k"])
        lo = float(raw.get("domain_lo", 0.0))
        hi = float(raw.get("domain_hi", 10.0))
        spec = SynthSpec(
            n_rows=int(raw["n"]),
            n_features=k,
            n_regimes=int(raw.get("regimes", 2)),
            noise_std=float(raw.get("noise", 0.1)),
            domain=Hypercube(lo=np.full(k, lo), hi=np.full(k, hi)),
            seed=int(raw.get("seed", args.seed)),
        )
    else:
        if args.n is None:
            raise FlagError("either --spec or --n is required")
        spec = _spec_from(args)
    spec.validate()
    ds, labels, truth = generate(spec)
    write_csv(ds, args.output)
    if args.truth is not None:
        payload = {"regimes": truth_to_dict(truth), "labels": [int(v) for v in labels]}
        with open(args.truth, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    print(f"wrote {ds.n} rows, k={ds.k}, regimes={spec.n_regimes} -> {args.output}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = load_csv(args.input, response_column=args.response)
    cfg = _config_from(args)
    cfg.validate()
    reports = compare_methods(ds, cfg, holdout_fraction=args.holdout, seed=args.seed,
                              dataset_name=args.input, train_rmse=args.train_rmse)
    for r in reports:
        print(f"{r.method}: rmse={r.rmse:.6g} mae={r.mae:.6g} "
              f"m={r.m_models} time={r.wall_time_s:.3f}s")
    if args.output_csv:
        with open(args.output_csv, "w") as fh:
            fh.write(reports_to_csv(reports))
    if args.output_json:
        with open(args.output_json, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)
            fh.write("\n")
    if args.plot_csv:
        with open(args.plot_csv, "w") as fh:
            fh.write(plot_data_csv(reports))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise FlagError(f"--sizes must be comma-separated integers, got {args.sizes!r}")
    spec = _spec_from(args, n=sizes[0] if sizes else 0)
    cfg = _config_from(args)
    cfg.validate()
    result = scaling_benchmark(spec, sizes, cfg)
    for n, t in result.rows():
        print(f"n={n} time={t:.3f}s")
    print(f"log-log slope: {'n/a' if result.slope is None else f'{result.slope:.3f}'}")
    if args.output_csv:
        with open(args.output_csv, "w") as fh:
            fh.write(result.to_csv())
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.trials < 100:
        raise FlagError(f"--trials must be at least 100, got {args.trials}")
    ok = True
    if args.suite == "coverage":
        res = coverage_simulation(epsilon=args.epsilon, delta=args.delta,
                                  trials=args.trials, seed=args.seed)
        print(f"direct estimator failure rate:  {res.direct_failure_rate:.4f} "
              f"(margin {res.margin:.4f})")
        print(f"grouped estimator failure rate: {res.grouped_failure_rate:.4f} "
              f"(margin {res.margin:.4f})")
        ok = (res.direct_failure_rate <= res.margin
              and res.grouped_failure_rate <= res.margin)
    elif args.suite == "lemma32":
        freq, bound = chebyshev_norm_simulation(trials=args.trials, seed=args.seed)
        print(f"empirical norm-bound frequency: {freq:.4f} (bound {bound:.4f})")
        ok = freq >= bound
    else:  # theorems
        rate, bound = tiny_delta_simulation(trials=args.trials, seed=args.seed)
        print(f"tiny-delta plan failure rate: {rate:.5f} (bound {bound:.5f})")
        res = coverage_simulation(epsilon=args.epsilon, delta=args.delta,
                                  trials=min(args.trials, 1000), seed=args.seed)
        print(f"variance ordering: direct {res.direct_error_variance:.6g} "
              f"<= 1.05 * grouped {res.grouped_error_variance:.6g}")
        ok = (rate <= bound
              and res.direct_error_variance <= 1.05 * res.grouped_error_variance)
    print("within margins" if ok else "BOUND VIOLATED")
    return EXIT_OK if ok else EXIT_BOUND_VIOLATION


class FlagError(Exception):
    """Bad flag combination caught after argparse."""


_COMMANDS = {
    "fit": cmd_fit,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags already; normalize other codes
        return EXIT_BAD_FLAGS if exc.code not in (0,) else 0
    try:
        return _COMMANDS[args.command](args)
    except (FlagError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAGS
    except (CsvFormatError, TooFewRows, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except (SingularDesign, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MmlrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
