"""Command-line front door: fit, extract, check, gen, bench.

Exit codes form a contract for shell pipelines:
  0 success (fit/extract converged; check verdict is a maximum)
  1 input error (bad file, bad flags, not a fixed point)
  2 solver non-convergence (model still written)
  3 check verdict: stationary but not a maximum
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench as bench_mod
from . import deflate as deflate_mod
from . import solver as solver_mod
from ._util import atomic_write_text
from .errors import (DipcaError, NotAFixedPointError)
from .lagmat import TimeSeriesData, build_kernels, read_data_csv, write_data_csv
from .secondorder import classify_fixed_point

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_NOT_MAX = 3

DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; remap to the input-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _add_common(p: _Parser, with_algo: bool = True):
    p.add_argument("--lags", type=int, default=2, metavar="s",
                   help="AR lag order (default 2)")
    p.add_argument("--tol", type=float, default=1e-6, metavar="EPS",
                   help="stopping tolerance on the stationarity residual (default 1e-6)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"seed for every random draw (default {DEFAULT_SEED})")
    center = p.add_mutually_exclusive_group()
    center.add_argument("--center", dest="center", action="store_true", default=True,
                        help="subtract column means before fitting (default)")
    center.add_argument("--no-center", dest="center", action="store_false")
    p.add_argument("--header", action="store_true",
                   help="input CSV carries a header row to skip")
    if with_algo:
        p.add_argument("--algo", choices=["1", "2", "I", "II"], default="1",
                       help="solver: 1/I = power step per round, "
                            "2/II = coordinate maximization")


def build_parser() -> _Parser:
    parser = _Parser(prog="dipca",
                     description="Dynamic latent-variable models from multivariate time series")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", parents=[], help="fit one component, write model JSON")
    _add_common(p_fit)
    p_fit.add_argument("input", help="data CSV, one row per time sample")
    p_fit.add_argument("-o", "--output", required=True, metavar="PATH",
                       help="model JSON output path")

    p_ext = sub.add_parser("extract", help="extract k components by deflation")
    _add_common(p_ext)
    p_ext.add_argument("--components", type=int, default=None, metavar="k",
                       help="component count (default min(m, 10))")
    p_ext.add_argument("--scores", metavar="PATH", default=None,
                       help="also write the score series as CSV")
    p_ext.add_argument("input", help="data CSV")
    p_ext.add_argument("-o", "--output", required=True, metavar="PATH",
                       help="multi-component model JSON output path")

    p_chk = sub.add_parser("check", help="second-order test of a fitted model")
    _add_common(p_chk, with_algo=False)
    p_chk.add_argument("model", help="model JSON written by fit")
    p_chk.add_argument("input", help="the data CSV the model was fitted on")

    p_gen = sub.add_parser("gen", help="generate a synthetic data CSV")
    p_gen.add_argument("--preset", default=None,
                       help=f"named preset ({', '.join(sorted(bench_mod.PRESETS))})")
    p_gen.add_argument("--m", type=int, default=50)
    p_gen.add_argument("--n", type=int, default=500)
    p_gen.add_argument("--lags", type=int, default=4, metavar="s")
    p_gen.add_argument("--sigma", type=float, default=1.0)
    p_gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_gen.add_argument("--planted-components", type=int, default=1)
    p_gen.add_argument("-o", "--output", required=True, metavar="PATH")

    p_bench = sub.add_parser("bench", help="run a sweep and write CSV + JSON reports")
    p_bench.add_argument("--preset", default="default",
                         help=f"sweep preset (default 'default'; one of "
                              f"{', '.join(sorted(bench_mod.PRESETS))})")
    p_bench.add_argument("--tol", type=float, default=1e-6)
    p_bench.add_argument("--seed", type=int, default=DEFAULT_SEED,
                         help="solver init seed (instance seeds come from the preset)")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--compare-backends", action="store_true",
                         help="also time compiled vs pure solver loops")
    p_bench.add_argument("-o", "--output", required=True, metavar="PREFIX",
                         help="writes PREFIX.csv and PREFIX.json")

    return parser


def _load_data(args) -> TimeSeriesData:
    X = read_data_csv(args.input, has_header=args.header)
    return TimeSeriesData.from_array(X, args.lags, center=args.center)


def _algo_name(flag: str) -> str:
    return "I" if flag in ("1", "I") else "II"


def cmd_fit(args) -> int:
    data = _load_data(args)
    kernels = build_kernels(data)
    opts = solver_mod.SolveOptions(eps_tol=args.tol, seed=args.seed)
    solve = (solver_mod.solve_dipca_I if _algo_name(args.algo) == "I"
             else solver_mod.solve_dipca_II)
    report = solve(kernels, opts)
    solver_mod.save_model_json(report, kernels, args.output)
    if not report.converged:
        print(f"not converged: {report.diagnostic}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"converged in {report.iterations} iterations, "
          f"lambda = {report.state.lam:.6g}, model written to {args.output}")
    return EXIT_OK


def cmd_extract(args) -> int:
    data = _load_data(args)
    k = args.components if args.components is not None else min(data.m, 10)
    if not 1 <= k <= data.m:
        print(f"error: --components {k} outside 1..{data.m}", file=sys.stderr)
        return EXIT_INPUT
    opts = solver_mod.SolveOptions(eps_tol=args.tol, seed=args.seed)
    model = deflate_mod.extract_components(data, k, opts,
                                            algorithm=_algo_name(args.algo))
    deflate_mod.save_model_json(model, args.output)
    if args.scores:
        deflate_mod.save_scores_csv(model, args.scores)

    if not model.components:
        print("no components could be extracted (degenerate data)", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    X_hat = deflate_mod.reconstruct(model, len(model.components))
    X_orig = data.X + data.column_means
    denom = np.linalg.norm(X_orig)
    rel_err = float(np.linalg.norm(X_hat - X_orig) / denom) if denom > 0 else 0.0
    n_flagged = sum(not c.converged for c in model.components)
    print(json.dumps({
        "components": len(model.components),
        "reconstruction_rel_error": rel_err,
        "non_converged_components": n_flagged,
        "model": args.output,
    }))
    return EXIT_NOT_CONVERGED if n_flagged else EXIT_OK


def cmd_check(args) -> int:
    doc = solver_mod.load_model_json(args.model)
    data = _load_data(args)
    if (data.m, data.n, data.s) != (doc["m"], doc["n"], doc["s"]):
        print(f"error: data dims (m={data.m}, n={data.n}, s={data.s}) do not match "
              f"model (m={doc['m']}, n={doc['n']}, s={doc['s']})", file=sys.stderr)
        return EXIT_INPUT
    kernels = build_kernels(data)
    w = np.asarray(doc["w"], dtype=np.float64)
    beta = np.asarray(doc["beta"], dtype=np.float64)
    verdict = classify_fixed_point(w, beta, kernels)
    spectrum = verdict.reduced_spectrum
    print(json.dumps({
        "inertia": list(verdict.inertia.as_tuple()),
        "is_max": verdict.is_max,
        "min_reduced_eigenvalue": float(spectrum.min()) if spectrum.size else None,
        "max_reduced_eigenvalue": float(spectrum.max()) if spectrum.size else None,
        "fraction_negative": verdict.fraction_negative,
        "lambda": verdict.lam,
        "residual_inf": verdict.residual_inf,
    }))
    return EXIT_OK if verdict.is_max else EXIT_NOT_MAX


def cmd_gen(args) -> int:
    if args.preset is not None:
        if args.preset not in bench_mod.PRESETS:
            print(f"error: unknown preset {args.preset!r} "
                  f"(have {', '.join(sorted(bench_mod.PRESETS))})", file=sys.stderr)
            return EXIT_INPUT
        cfg = bench_mod.PRESETS[args.preset][0]
    else:
        cfg = bench_mod.SyntheticConfig(m=args.m, n=args.n, s=args.lags,
                                        sigma=args.sigma, seed=args.seed,
                                        planted_components=args.planted_components)
    data, planted = bench_mod.gen_synthetic(cfg)
    write_data_csv(args.output, data.X)
    print(json.dumps({
        "rows": data.n + data.s, "m": data.m, "s": data.s,
        "sigma": cfg.sigma, "seed": cfg.seed,
        "planted_lambdas": [p.lam for p in planted],
        "output": args.output,
    }))
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.preset not in bench_mod.PRESETS:
        print(f"error: unknown preset {args.preset!r} "
              f"(have {', '.join(sorted(bench_mod.PRESETS))})", file=sys.stderr)
        return EXIT_INPUT
    opts = solver_mod.SolveOptions(eps_tol=args.tol, seed=args.seed)
    report = bench_mod.run_benchmark(bench_mod.PRESETS[args.preset], opts=opts,
                                     workers=args.workers)
    report.to_csv(args.output + ".csv")
    summary = report.summary()
    if args.compare_backends:
        summary["backend_comparison"] = bench_mod.compare_backends(opts=opts)
    atomic_write_text(args.output + ".json", json.dumps(summary, indent=2) + "\n")
    total = len(report.rows)
    conv = sum(r.converged for r in report.rows)
    print(f"{total} rows ({conv} converged) written to {args.output}.csv/.json")
    return EXIT_OK


_COMMANDS = {"fit": cmd_fit, "extract": cmd_extract, "check": cmd_check,
             "gen": cmd_gen, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.subcommand](args)
    except NotAFixedPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DipcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
