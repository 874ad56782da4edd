"""Command-line frontend: estimate / adaptive / pca / ridge / bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure,
4 sample too small.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import __version__, dataio
from .adaptive import build_grid, run_algorithm2
from .applications import RidgeConfig, robust_ridge, subspace_iteration
from .calibrated import AUTO, CalibratedConfig, run_algorithm1
from .errors import (
    DataError,
    FactorizationFailure,
    InvalidConfidence,
    InvalidEpsilon,
    InvalidRange,
    InvalidSpec,
    SampleTooSmall,
)
from .harness import DistributionSpec, coverage_report, run_trials

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_SAMPLE = 4


class _Parser(argparse.ArgumentParser):
    # the usage-error contract is exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _auto_or_float(text):
    if text.lower() == "auto":
        return AUTO
    if text.lower() in ("inf", "infinity"):
        return float("inf")
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")


def _add_common_estimator_flags(p):
    p.add_argument("--input", required=True, help="CSV file, one observation per row")
    p.add_argument("--delta", type=float, default=0.1, help="confidence parameter")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="target regularization level")
    p.add_argument("--upper", type=_auto_or_float, default=AUTO,
                   help="upper bound L on the spectral norm, or 'auto'")
    p.add_argument("--theta", type=_auto_or_float, default=AUTO,
                   help="truncation level, 'auto', or 'inf'")
    p.add_argument("--header", action="store_true", help="skip a CSV header row")
    p.add_argument("--center", action="store_true",
                   help="subtract the empirical mean (theory assumes known zero mean)")
    p.add_argument("--format", choices=("json", "rcov"), default="json",
                   help="matrix serialization in the output")
    p.add_argument("-o", "--output", required=True, help="output report path")


def _load_observations(args):
    X = dataio.read_csv_matrix(args.input, header=args.header)
    mean = None
    if args.center:
        warnings.warn("centering data; the error guarantees assume a known zero mean")
        mean = X.mean(axis=0)
        X = X - mean
    return X, mean


def _base_manifest(args, command, mean):
    manifest = {
        "command": command,
        "version": __version__,
        "input": args.input,
        "input_digest": dataio.file_digest(args.input),
        "delta": args.delta,
        "lambda": args.lam,
        "header": args.header,
        "center": args.center,
    }
    if mean is not None:
        manifest["subtracted_mean"] = [float(v) for v in mean]
    return manifest


def _emit_estimate(args, payload, matrix):
    if args.format == "rcov":
        rcov_path = args.output + ".rcov"
        dataio.write_rcov(rcov_path, matrix)
        payload["estimate_file"] = rcov_path
        payload["estimate_file_digest"] = dataio.file_digest(rcov_path)
    else:
        payload["estimate"] = dataio.matrix_to_lists(matrix)
    return dataio.write_report(args.output, payload)


def _plan_dict(plan):
    return {"n": plan.n, "T": plan.T, "q": plan.q, "m": plan.m, "r": plan.r}


def cmd_estimate(args):
    X, mean = _load_observations(args)
    cfg = CalibratedConfig(delta=args.delta, lam=args.lam, upper=args.upper,
                           theta=args.theta)
    result = run_algorithm1(X, cfg)
    manifest = _base_manifest(args, "estimate", mean)
    manifest["upper"] = result.upper
    manifest["theta"] = result.theta_used
    payload = {
        "epsilon": result.epsilon,
        "theta": result.theta_used,
        "theta_final": result.theta_final,
        "lambda": result.lam,
        "plan": _plan_dict(result.plan),
        "lambda_schedule": list(result.lambda_schedule),
        "manifest": manifest,
    }
    _emit_estimate(args, payload, result.estimate)
    return EXIT_OK


def cmd_adaptive(args):
    X, mean = _load_observations(args)
    cfg = CalibratedConfig(delta=args.delta, lam=args.lam, upper=args.upper)
    if args.grid == "auto":
        grid = AUTO
    else:
        if args.theta_min is None or args.theta_max is None:
            raise InvalidRange("provide --theta-min and --theta-max, or --grid auto")
        grid = build_grid(args.theta_min, args.theta_max)
    result = run_algorithm2(X, cfg, grid=grid)
    sel = result.selected_estimate
    manifest = _base_manifest(args, "adaptive", mean)
    manifest["upper"] = sel.upper
    payload = {
        "grid": {
            "theta_min": result.grid.theta_min,
            "theta_max": result.grid.theta_max,
            "levels": list(result.grid.levels),
        },
        "selected_index": result.selected_index,
        "selected_theta": result.grid.levels[result.selected_index],
        "epsilon": result.epsilons[result.selected_index],
        "lambda": args.lam,
        "levels": [
            {"theta": theta, "epsilon": eps}
            for theta, eps in zip(result.grid.levels, result.epsilons)
        ],
        "pairwise_tests": result.pairwise_tests.tolist(),
        "plan": _plan_dict(sel.plan),
        "manifest": manifest,
    }
    _emit_estimate(args, payload, sel.estimate)
    return EXIT_OK


def cmd_pca(args):
    X, mean = _load_observations(args)
    cfg = CalibratedConfig(delta=args.delta, lam=args.lam, upper=args.upper,
                           theta=args.theta)
    result = run_algorithm1(X, cfg)
    sub = subspace_iteration(result.estimate, args.k, max_iters=args.max_iters,
                             tol=args.tol)
    manifest = _base_manifest(args, "pca", mean)
    payload = {
        "k": args.k,
        "components": dataio.matrix_to_lists(sub.basis),
        "iterations": sub.iterations,
        "residual": sub.residual,
        "converged": sub.converged,
        "epsilon": result.epsilon,
        "manifest": manifest,
    }
    dataio.write_report(args.output, payload)
    return EXIT_OK


def cmd_ridge(args):
    X, mean = _load_observations(args)
    y = dataio.read_csv_vector(args.responses, header=args.header)
    if y.shape[0] != X.shape[0]:
        raise DataError(
            f"responses length {y.shape[0]} does not match {X.shape[0]} rows"
        )
    # half/half split: covariance from the second half, regression on the first
    half = X.shape[0] // 2
    X_reg, y_reg = X[:half], y[:half]
    X_cov = X[half:]
    cov_cfg = CalibratedConfig(delta=args.delta, lam=max(args.lam, 1e-12),
                               upper=args.upper, theta=args.theta)
    cov = run_algorithm1(X_cov, cov_cfg)
    hold = max(1, half // 4)
    v2 = float(np.mean(y_reg[:hold] ** 2))
    m4 = float(np.mean(y_reg[:hold] ** 4))
    resp_kurt = max(1.0, (m4 ** 0.25) / (v2 ** 0.5)) if v2 > 0 else 1.0
    ridge_cfg = RidgeConfig(
        lam=args.lam, delta=args.delta,
        response_second_moment=max(v2, 1e-12), response_kurtosis=resp_kurt,
        theta_bar=args.theta_bar,
    )
    est = robust_ridge(X_reg, y_reg, cov.estimate, ridge_cfg)
    manifest = _base_manifest(args, "ridge", mean)
    manifest["responses"] = args.responses
    manifest["responses_digest"] = dataio.file_digest(args.responses)
    manifest["theta_bar"] = est.theta_bar
    payload = {
        "weights": [float(w) for w in est.weights],
        "theta_bar": est.theta_bar,
        "lambda": args.lam,
        "n_regression": est.n,
        "n_covariance": X_cov.shape[0],
        "manifest": manifest,
    }
    dataio.write_report(args.output, payload)
    return EXIT_OK


_SIGMA_BUILDERS = {
    "identity": lambda d: np.eye(d),
    "harmonic": lambda d: np.diag(1.0 / np.arange(1, d + 1)),
}


def _parse_dist(text, d, seed):
    sigma = _SIGMA_BUILDERS["harmonic"](d)
    text = text.lower()
    if text == "gaussian":
        return DistributionSpec("gaussian", sigma, seed)
    if text.startswith("t"):
        nu = float(text[1:])
        return DistributionSpec("student_t", sigma, seed, nu=nu)
    if text == "mixture":
        return DistributionSpec("scale_mixture", sigma, seed)
    raise InvalidSpec(f"unknown distribution {text!r} (use gaussian, t<nu>, mixture)")


def cmd_bench(args):
    spec = _parse_dist(args.dist, args.d, args.seed)
    cfg = CalibratedConfig(delta=args.delta, lam=args.lam, upper=args.upper,
                           theta=args.theta)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    reports = {
        name: run_trials(spec, args.n, cfg, args.trials,
                         parallelism=args.threads, estimator=name)
        for name in estimators
    }
    summary = coverage_report(reports)
    payload = {
        "dist": args.dist,
        "d": args.d,
        "n": args.n,
        "trials": args.trials,
        "seed": args.seed,
        "lambda": args.lam,
        "delta": args.delta,
        "estimators": estimators,
        "summary": summary,
        "per_trial": {
            name: [
                {
                    "trial": r.trial,
                    "calibrated_error": r.calibrated_error,
                    "certificate": r.certificate,
                    "passed": r.passed,
                    "selected_theta": r.selected_theta,
                    "error": r.error,
                }
                for r in rs
            ]
            for name, rs in reports.items()
        },
    }
    # wall-clock varies run to run; keep it out of the determinism digest
    dataio.write_report(args.output, payload, nondeterministic_keys=("summary",))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="calibcov",
                     description="Robust calibrated covariance estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="run the iterative calibrated estimator")
    _add_common_estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("adaptive", help="adaptive truncation-level selection")
    _add_common_estimator_flags(p)
    p.add_argument("--grid", choices=("auto", "manual"), default="manual")
    p.add_argument("--theta-min", type=float)
    p.add_argument("--theta-max", type=float)
    p.set_defaults(func=cmd_adaptive)

    p = sub.add_parser("pca", help="robust PCA via subspace iteration")
    _add_common_estimator_flags(p)
    p.add_argument("--k", type=int, required=True, help="number of components")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=1000)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("ridge", help="robust ridge regression (half/half split)")
    _add_common_estimator_flags(p)
    p.add_argument("--responses", required=True, help="CSV file with one column")
    p.add_argument("--theta-bar", type=_auto_or_float, default="auto")
    p.set_defaults(func=cmd_ridge)

    p = sub.add_parser("bench", help="Monte Carlo benchmark campaign")
    p.add_argument("--dist", default="t5", help="gaussian, t<nu>, or mixture")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--upper", type=_auto_or_float, default=AUTO)
    p.add_argument("--theta", type=_auto_or_float, default=AUTO)
    p.add_argument("--estimators", default="algorithm1")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, InvalidSpec) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FactorizationFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SampleTooSmall as exc:
        print(f"sample too small: {exc}", file=sys.stderr)
        return EXIT_SAMPLE
    except (InvalidConfidence, InvalidRange, InvalidEpsilon, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
