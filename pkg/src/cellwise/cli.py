"""Command-line interface: ``cellwise <command> ...``.

Exit status: 0 on success, 1 on a usage error, 2 on a data, numeric or file
error. Errors are reported on standard error as one JSON object
``{"error": <kind>, "message": <text>}``. Every output file is written
atomically (temporary file in the same directory, then rename).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .breakdown import (
    THREADS_ENV,
    breakdown_curve,
    curve_svg,
    hyperplane_attack_location,
    implosion_attack,
    regression_attack,
)
from .ca import ContingencyTable, biplot, classical_ca, robust_ca
from .detect import DEFAULT_CUTOFF, cellmap, ddc, flag_univariate
from .estimate import classical, coordwise_location, pairwise_cov, spatial_median, two_step_cov
from .exceptions import CellwiseError
from .experiments import FIG3_ESTIMATORS, ar3, fig3, table1_detect
from .io import atomic_write, read_csv, read_series, to_jsonable, write_csv, write_json
from .matrix import DataMatrix
from .regress import COV_METHODS, ar_fit, fit_covariance, plugin_regression
from .simulate import ar_series, table1_data


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _k_value(text):
    if text == "auto":
        return text
    return _positive_int(text)


def _flags_doc(flags, dm):
    return {
        "method": flags.method,
        "cutoff": flags.cutoff,
        "n_flagged": int(flags.flags.sum()),
        "row_names": list(dm.row_names),
        "col_names": list(dm.col_names),
        "flags": flags.flags,
        "stdres": flags.stdres,
        "predicted": flags.predicted,
        "row_flags": flags.row_flags,
    }


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# ---- commands -------------------------------------------------------------


def cmd_detect(args):
    dm = read_csv(args.input)
    if args.method == "ddc":
        flags = ddc(dm, corr_threshold=args.corr_threshold, cutoff=args.cutoff,
                    max_predictors=args.max_predictors)
    else:
        flags = flag_univariate(dm, cutoff=args.cutoff, kind=args.scale)
    write_json(_flags_doc(flags, dm), args.out, "detect",
               {"in": args.input, "method": args.method, "cutoff": args.cutoff})
    if args.cellmap:
        cellmap(flags, dm.row_names, dm.col_names, args.cellmap)


_LOCATION_ONLY = {
    "coordmedian": lambda dm: coordwise_location(dm, "median"),
    "coordmcd": lambda dm: coordwise_location(dm, "mcd"),
    "spatialmedian": spatial_median,
}


def cmd_estimate(args):
    dm = read_csv(args.input)
    if args.method in _LOCATION_ONLY:
        mu = _LOCATION_ONLY[args.method](dm)
        result = {"method": args.method, "mu": mu, "col_names": list(dm.col_names)}
    elif args.method == "classical":
        result = classical(dm)
    elif args.method == "twostep":
        result = two_step_cov(dm, detector=args.detector, cutoff=args.cutoff)
    else:
        result = pairwise_cov(dm, scale_kind=args.scale)
    write_json(result, args.out, "estimate", {"in": args.input, "method": args.method})


def _response_index(choice, dm):
    if choice == "last":
        return dm.d - 1
    if choice in dm.col_names:
        return dm.col_names.index(choice)
    try:
        idx = int(choice) - 1
    except ValueError:
        raise CellwiseError(f"unknown response column {choice!r}") from None
    if not 0 <= idx < dm.d:
        raise CellwiseError(f"response column {choice} out of range 1..{dm.d}")
    return idx


def _regfit_doc(fit, names):
    return {"alpha": fit.alpha, "beta": fit.beta, "sigma_hat": fit.sigma_hat,
            "predictors": names, "cov": fit.source_model, "intercept": fit.intercept,
            "warnings": list(fit.warnings)}


def cmd_regress(args):
    dm = read_csv(args.input)
    if dm.d < 2:
        raise CellwiseError("regression needs at least two columns")
    yi = _response_index(args.response, dm)
    model = fit_covariance(dm, args.cov)
    fit = plugin_regression(model, yi, intercept=not args.no_intercept)
    names = [c for j, c in enumerate(dm.col_names) if j != yi]
    _emit(_regfit_doc(fit, names), args.out, "regress",
          {"in": args.input, "response": dm.col_names[yi], "cov": args.cov})


def cmd_arfit(args):
    y, missing = read_series(args.input)
    y = np.where(missing, np.nan, y)
    fit = ar_fit(y, args.order, args.cov, intercept=not args.no_intercept)
    names = [f"lag{lag}" for lag in range(1, args.order + 1)]
    _emit(_regfit_doc(fit, names), args.out, "arfit",
          {"in": args.input, "order": args.order, "cov": args.cov})


def cmd_breakdown_curve(args):
    curve = breakdown_curve(args.estimators, n=args.n, d=args.d, value=args.value,
                            reps=args.reps, seed=args.seed, threads=args.threads)
    atomic_write(args.out, curve.to_csv())
    if args.plot:
        curve_svg(curve, args.plot)


def cmd_breakdown_attack(args):
    dm = read_csv(args.input)
    if args.kind == "location":
        if args.c is None:
            raise UsageError("breakdown attack --kind location requires --c")
        res = hyperplane_attack_location(dm, args.c)
    elif args.kind == "implosion":
        res = implosion_attack(dm)
    else:
        if args.beta0 is None:
            raise UsageError("breakdown attack --kind regression requires --beta0")
        res = regression_attack(dm, args.beta0)
    write_csv(res.contaminated, args.out)
    if args.json:
        write_json({"per_column_count": res.per_column_count, "m": res.m,
                    "replaced": res.replaced, "params": res.params},
                   args.json, "breakdown-attack", {"in": args.input, "kind": args.kind})


def cmd_ca(args):
    if args.cellmap and args.method != "robust":
        raise UsageError("--cellmap needs --method robust")
    dm = read_csv(args.input)
    T = ContingencyTable.from_datamatrix(dm)
    if args.method == "classical":
        sol = classical_ca(T, args.k)
    else:
        sol = robust_ca(T, args.k, cutoff=args.cutoff)
    if args.out:
        doc = {"method": sol.method, "k": sol.k, "gamma": sol.gamma, "inertia": sol.inertia,
               "row_names": list(sol.row_names), "col_names": list(sol.col_names),
               "r": sol.r, "c": sol.c, "U": sol.U, "V": sol.V,
               "row_pc": sol.row_pc, "col_pc": sol.col_pc, "S": sol.S}
        if sol.flags is not None:
            doc["flags"] = sol.flags.flags
            doc["stdres"] = sol.flags.stdres
        write_json(doc, args.out, "ca", {"in": args.input, "method": args.method, "k": args.k})
    if args.biplot:
        biplot(sol, args.biplot)
    if args.cellmap:
        cellmap(sol.flags, sol.row_names, sol.col_names, args.cellmap)


def cmd_simulate(args):
    if args.kind == "table1":
        X, mask = table1_data(n=args.n, d=args.d, fraction=args.fraction, value=args.value,
                              seed=args.seed)
        write_csv(DataMatrix(X), args.out)
        if args.mask:
            write_csv(DataMatrix(mask.astype(float), None, None), args.mask)
    else:
        y, mask = ar_series(n=args.n, seed=args.seed, every=args.every)
        write_csv(DataMatrix(y[:, None], None, ["y"]), args.out)
        if args.mask:
            write_csv(DataMatrix(mask[:, None].astype(float), None, ["outlier"]), args.mask)


def cmd_repro(args):
    out = _ensure_dir(args.out_dir)
    if args.experiment == "fig3":
        curve = fig3(reps=args.reps, seed=args.seed, threads=args.threads)
        atomic_write(os.path.join(out, "fig3.csv"), curve.to_csv())
        curve_svg(curve, os.path.join(out, "fig3.svg"))
        i25 = int(np.searchsorted(curve.k, curve.n // 4))
        summary = {name: {"k1": float(curve.norms[name][1]),
                          "at_25pct": float(curve.norms[name][i25]),
                          "max_below_50pct": float(curve.norms[name][:-1].max())}
                   for name in FIG3_ESTIMATORS}
        write_json(summary, os.path.join(out, "fig3.json"), "repro-fig3",
                   {"reps": args.reps, "seed": args.seed})
    elif args.experiment == "ar3":
        res = ar3(seeds=args.seeds, seed=args.seed)
        write_json(res, os.path.join(out, "ar3.json"), "repro-ar3",
                   {"seeds": args.seeds, "seed": args.seed})
    else:
        summary, seconds = table1_detect(reps=args.reps, seed=args.seed)
        write_json(summary, os.path.join(out, "table1_detect.json"), "repro-table1-detect",
                   {"reps": args.reps, "seed": args.seed})
        if seconds is not None:
            print(f"ddc at d=50: {seconds:.3f} s", file=sys.stderr)


def _emit(doc, path, op, inputs):
    if path:
        write_json(doc, path, op, inputs)
    else:
        sys.stdout.write(json.dumps({"op": op, "inputs": to_jsonable(inputs),
                                     "result": to_jsonable(doc)}, indent=2) + "\n")


# ---- parser ---------------------------------------------------------------


def build_parser():
    p = _Parser(prog="cellwise", description="Cellwise-robust multivariate statistics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("detect", help="flag outlying cells")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--method", choices=("ddc", "univariate"), default="ddc")
    s.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    s.add_argument("--scale", choices=("mad", "qn"), default="mad")
    s.add_argument("--corr-threshold", type=float, default=0.5)
    s.add_argument("--max-predictors", type=_positive_int, default=10)
    s.add_argument("--cellmap")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("estimate", help="location and covariance")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--method", default="twostep",
                   choices=("classical", "coordmedian", "coordmcd", "spatialmedian",
                            "twostep", "pairwise"))
    s.add_argument("--detector", choices=("ddc", "univariate"), default="ddc")
    s.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    s.add_argument("--scale", choices=("mad", "qn"), default="mad")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("regress", help="plug-in regression from a covariance estimate")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.add_argument("--response", default="last",
                   help="'last', a column name, or a 1-based column index")
    s.add_argument("--cov", choices=COV_METHODS, default="twostep")
    s.add_argument("--no-intercept", action="store_true")
    s.set_defaults(func=cmd_regress)

    s = sub.add_parser("arfit", help="AR(p) fit of a one-column series")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.add_argument("--order", type=_positive_int, required=True)
    s.add_argument("--cov", choices=COV_METHODS, default="twostep")
    s.add_argument("--no-intercept", action="store_true")
    s.set_defaults(func=cmd_arfit)

    b = sub.add_parser("breakdown", help="breakdown curves and attacks")
    bsub = b.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = bsub.add_parser("curve")
    s.add_argument("--n", type=_positive_int, default=100)
    s.add_argument("--d", type=_positive_int, default=4)
    s.add_argument("--value", type=float, default=500.0)
    s.add_argument("--reps", type=_positive_int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--estimators", nargs="+", choices=FIG3_ESTIMATORS,
                   default=list(FIG3_ESTIMATORS))
    s.add_argument("--threads", type=_positive_int,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    s.add_argument("--out", required=True)
    s.add_argument("--plot")
    s.set_defaults(func=cmd_breakdown_curve)
    s = bsub.add_parser("attack")
    s.add_argument("--kind", choices=("location", "implosion", "regression"), required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True, help="CSV of the attacked data")
    s.add_argument("--json", help="attack summary")
    s.add_argument("--c", type=float)
    s.add_argument("--beta0", type=float)
    s.set_defaults(func=cmd_breakdown_attack)

    s = sub.add_parser("ca", help="correspondence analysis of a contingency table")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--method", choices=("classical", "robust"), default="classical")
    s.add_argument("--k", type=_k_value, default="auto")
    s.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    s.add_argument("--out")
    s.add_argument("--biplot")
    s.add_argument("--cellmap")
    s.set_defaults(func=cmd_ca)

    s = sub.add_parser("simulate", help="write a seeded synthetic data set")
    s.add_argument("kind", choices=("table1", "ar3"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=_positive_int, default=1000)
    s.add_argument("--d", type=_positive_int, default=10)
    s.add_argument("--fraction", type=float, default=0.1)
    s.add_argument("--value", type=float, default=5.0)
    s.add_argument("--every", type=int, default=7)
    s.add_argument("--out", required=True)
    s.add_argument("--mask")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("repro", help="rerun a reproduction experiment")
    s.add_argument("experiment", choices=("fig3", "ar3", "table1-detect"))
    s.add_argument("--out-dir", default=".")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reps", type=_positive_int, default=None)
    s.add_argument("--seeds", type=_positive_int, default=20)
    s.add_argument("--threads", type=_positive_int)
    s.set_defaults(func=cmd_repro)
    return p


_DEFAULT_REPS = {"fig3": 200, "table1-detect": 10}


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def run(argv=None):
    """Run the CLI and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "repro" and args.reps is None:
            args.reps = _DEFAULT_REPS.get(args.experiment, 1)
        args.func(args)
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        return _error("usage", str(exc), 1)
    except FileNotFoundError as exc:
        return _error("file", f"{exc.strerror}: {exc.filename}", 2)
    except OSError as exc:
        return _error("file", f"{exc.strerror or exc}: {exc.filename}", 2)
    except CellwiseError as exc:
        return _error(type(exc).__name__, str(exc), 2)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error("numeric", str(exc), 2)
    return 0


def main():
    sys.exit(run())
