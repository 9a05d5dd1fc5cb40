"""Command-line front end.

Subcommands: ``lognorm``, ``fig1``, ``rnn-experiment``, ``lipschitz``,
``solve`` and ``project``. Exit codes: 0 success, 2 invalid input,
3 non-convergence, 4 Lipschitz sandwich violated, 5 step size outside the
certified range (without ``--force``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import io
from .norms import Family, NormSpec, log_norm
from .operators import AffineOperator, SeparableProx, parse_activation, scalar_prox_catalog
from .projection import project_matrix
from .resolvents import FIG1_HEADER, fig1_curves
from .rnn import (
    METHODS,
    empirical_lipschitz,
    equilibrium,
    lipschitz_bound,
    lipschitz_bound_prior,
    load_model,
    random_model,
    save_model,
)
from .solvers import (
    MONOTONE,
    STRONG,
    CertificationError,
    SolveConfig,
    asymptotic_ratio,
    cayley_solve,
    douglas_rachford_solve,
    forward_backward_solve,
    forward_step_solve,
    peaceman_rachford_solve,
    proximal_point_solve,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_SANDWICH = 4
EXIT_UNCERTIFIED = 5


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _spec(norm, eta_file):
    family = Family.parse(norm)
    weights = io.read_vector(eta_file) if eta_file else None
    if family is Family.L2:
        if weights is not None:
            raise CliError("--eta is not supported with --norm 2")
        return NormSpec.l2()
    return NormSpec(family, weights)


def _table(header, rows):
    """Aligned plain-text table."""
    cells = [list(header)] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + "\n"


def _csv_cell(v):
    return "" if isinstance(v, float) and math.isnan(v) else io.format_float(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(float(v)) for v in row) + "\n")


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# --------------------------------------------------------------------------
# subcommands


def cmd_lognorm(args):
    A = io.read_matrix(args.matrix)
    spec = _spec(args.norm, args.eta)
    print(f"{log_norm(A, spec):.15g}")
    return EXIT_OK


def cmd_fig1(args):
    if not (0 < args.c <= args.ell):
        raise CliError(f"need 0 < c <= ell, got c={args.c}, ell={args.ell}")
    if args.grid < 1:
        raise CliError("--grid must be at least 1")
    if args.alpha_max <= 0:
        raise CliError("--alpha-max must be positive")
    grid = np.linspace(0.0, args.alpha_max, args.grid + 1)[1:]
    rows = fig1_curves(args.c, args.ell, grid, args.diagl)
    if args.out:
        path = os.path.join(_ensure_dir(args.out), "fig1.csv")
        _write_csv(path, FIG1_HEADER, rows)
        print(path)
    else:
        sys.stdout.write(",".join(FIG1_HEADER) + "\n")
        for row in rows:
            sys.stdout.write(",".join(_csv_cell(float(v)) for v in row) + "\n")
    return EXIT_OK


EXPERIMENT_DEFAULTS = {
    "n": 200,
    "m": 50,
    "gamma": 0.9,
    "activation": "relu",
    "seed": 0,
    "tol": 1e-10,
    "max_iter": 10_000,
    "out": None,
}

_EXPERIMENT_TYPES = {"n": int, "m": int, "gamma": float, "activation": str, "seed": int,
                     "tol": float, "max_iter": int, "out": str, "alpha": float}


def experiment_config(args):
    """Merge defaults, the key=value config file and command-line flags."""
    cfg = dict(EXPERIMENT_DEFAULTS)
    cfg["alpha"] = None
    if args.config:
        for key, value in io.read_keyvalue(args.config).items():
            key = key.replace("-", "_")
            if key not in _EXPERIMENT_TYPES:
                raise CliError(f"{args.config}: unknown key {key!r}")
            try:
                cfg[key] = _EXPERIMENT_TYPES[key](value)
            except ValueError:
                raise CliError(f"{args.config}: bad value for {key}: {value!r}") from None
    for key in _EXPERIMENT_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["n"] < 1 or cfg["m"] < 1:
        raise CliError("n and m must be at least 1")
    if not cfg["tol"] > 0:
        raise CliError("tol must be positive")
    if cfg["max_iter"] < 0:
        raise CliError("max_iter must be nonnegative")
    return cfg


SUMMARY_HEADER = ("method", "alpha", "iterations", "converged", "theoretical_factor",
                  "empirical_ratio", "final_residual")


def run_experiment(cfg, force=False):
    """Draw a model, run the three equilibrium iterations and collect the results.

    Returns ``(model, u, results)`` with ``results`` keyed by method.
    """
    model, u = random_model(cfg["n"], cfg["m"], cfg["gamma"], cfg["activation"], cfg["seed"])
    config = SolveConfig(alpha=cfg["alpha"], tol=cfg["tol"], max_iter=cfg["max_iter"], force=force)
    results = {m: equilibrium(model, u, m, config) for m in METHODS}
    return model, u, results


def summary_rows(results):
    rows = []
    for m, res in results.items():
        rows.append((m, f"{res.extra['alpha']:.17g}", res.iterations, str(res.converged).lower(),
                     f"{res.factor:.6f}", f"{asymptotic_ratio(res.residuals):.6f}",
                     f"{res.final_residual:.3e}"))
    return rows


def cmd_rnn_experiment(args):
    cfg = experiment_config(args)
    t0 = time.perf_counter()
    try:
        model, u, results = run_experiment(cfg, force=args.force)
    except CertificationError as exc:
        raise CliError(str(exc), EXIT_UNCERTIFIED) from None
    elapsed = time.perf_counter() - t0
    xs = [r.x_star for r in results.values()]
    spread = max(float(np.max(np.abs(x - xs[0]))) for x in xs)

    text = (f"n={cfg['n']} m={cfg['m']} gamma={model.gamma:.17g} activation={model.activation.spec_string} "
            f"seed={cfg['seed']}\n")
    text += _table(SUMMARY_HEADER, summary_rows(results))
    text += f"max_disagreement_inf={spread:.3e}\n"
    if cfg["out"]:
        out = _ensure_dir(cfg["out"])
        for m, res in results.items():
            res.to_csv(os.path.join(out, f"residuals_{m}.csv"))
        with open(os.path.join(out, "summary.txt"), "w") as fh:
            fh.write(text)
        save_model(model, os.path.join(out, "model"))
        io.write_vector(os.path.join(out, "model", "u.csv"), u)
    sys.stdout.write(text)
    print(f"elapsed={elapsed:.2f}s")
    failed = [m for m, r in results.items() if not r.converged]
    if failed:
        print(f"not converged: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_lipschitz(args):
    model = load_model(args.model)
    if not model.gamma < 1:
        raise CliError(f"model has gamma = {model.gamma} >= 1; no certificate")
    bound = lipschitz_bound(model)
    prior = lipschitz_bound_prior(model)
    try:
        emp = empirical_lipschitz(model, pair_count=args.pairs, seed=args.seed,
                                  tol=args.tol, max_iter=args.max_iter)
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    rows = [("gamma", f"{model.gamma:.15g}"), ("bound", f"{bound:.15g}"),
            ("prior_bound", f"{prior:.15g}"), ("empirical", f"{emp:.15g}")]
    sys.stdout.write(_table(("quantity", "value"), rows))
    slack = 1e-9 * max(1.0, bound)
    if not (emp <= bound + slack and bound <= prior + slack):
        print("sandwich violated: empirical <= bound <= prior_bound fails", file=sys.stderr)
        return EXIT_SANDWICH
    return EXIT_OK


SOLVE_METHODS = ("forward_step", "proximal_point", "cayley", "forward_backward",
                 "peaceman_rachford", "douglas_rachford")
_SPLITTING = ("forward_backward", "peaceman_rachford", "douglas_rachford")
# undamped iterations whose monotone variants are different methods
_STRONG_ONLY = ("cayley", "peaceman_rachford")


def load_problem(path, norm=None, eta=None):
    """Read a problem file: ``A=<csv>``, optional ``b=<csv>``, ``activation=<tag>``,
    ``norm=<1|2|inf>``, ``eta=<csv>``, ``x0=<csv>``. Paths are relative to the file."""
    kv = io.read_keyvalue(path)
    unknown = set(kv) - {"A", "b", "activation", "norm", "eta", "x0"}
    if unknown:
        raise CliError(f"{path}: unknown keys {sorted(unknown)}")
    if "A" not in kv:
        raise CliError(f"{path}: missing A")
    A = io.read_matrix(io.resolve(path, kv["A"]))
    b = io.read_vector(io.resolve(path, kv["b"])) if "b" in kv else None
    eta_file = eta or (io.resolve(path, kv["eta"]) if "eta" in kv else None)
    spec = _spec(norm or kv.get("norm", "inf"), eta_file)
    F = AffineOperator(A, b, norm=spec)
    G = SeparableProx(parse_activation(kv["activation"])) if "activation" in kv else None
    x0 = io.read_vector(io.resolve(path, kv["x0"])) if "x0" in kv else None
    if x0 is not None and x0.size != F.dim:
        raise CliError(f"x0 has {x0.size} entries, expected {F.dim}")
    return F, G, x0


def _mode(method, mode, F):
    if mode != "auto":
        return mode
    if method in _STRONG_ONLY:
        return STRONG
    return STRONG if F.cert.strongly_monotone else MONOTONE


def cmd_solve(args):
    F, G, x0 = load_problem(args.problem, args.norm, args.eta)
    method = args.method
    if G is not None and method not in _SPLITTING:
        raise CliError(f"method {method} does not take an activation (G)")
    if G is None and method in _SPLITTING:
        G = SeparableProx(scalar_prox_catalog("identity"))
    mode = _mode(method, args.mode, F)
    try:
        config = SolveConfig(alpha=args.alpha, theta=args.theta, tol=args.tol,
                             max_iter=args.max_iter, mode=mode, force=args.force)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    try:
        if method == "forward_step":
            res = forward_step_solve(F, config, x0)
        elif method == "proximal_point":
            res = proximal_point_solve(F, config, x0=x0)
        elif method == "cayley":
            res = cayley_solve(F, config, x0=x0)
        elif method == "forward_backward":
            res = forward_backward_solve(F, G, config, x0=x0)
        elif method == "peaceman_rachford":
            res = peaceman_rachford_solve(F, G, config, z0=x0)
        else:
            res = douglas_rachford_solve(F, G, config, z0=x0)
    except CertificationError as exc:
        print(f"uncertified: {exc} (use --force to run anyway)", file=sys.stderr)
        return EXIT_UNCERTIFIED
    factor = "none" if res.factor is None else f"{res.factor:.15g}"
    rows = [("method", method), ("mode", mode), ("alpha", f"{args.alpha:.15g}"),
            ("factor", factor), ("iterations", res.iterations),
            ("converged", str(res.converged).lower()), ("final_residual", f"{res.final_residual:.3e}")]
    sys.stdout.write(_table(("key", "value"), rows))
    if args.out:
        out = _ensure_dir(args.out)
        _write_csv(os.path.join(out, "x_star.csv"), ("x",), [(v,) for v in res.x_star])
        res.to_csv(os.path.join(out, "trace.csv"))
    else:
        print("x_star=" + ",".join(io.format_float(v) for v in res.x_star))
    if not res.converged:
        print(res.message, file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_project(args):
    A = io.read_matrix(args.matrix)
    weights = io.read_vector(args.eta) if args.eta else None
    if A.shape[0] != A.shape[1]:
        raise CliError(f"expected a square matrix, got shape {A.shape}")
    P = project_matrix(A, args.gamma, weights)
    spec = NormSpec.linf(weights)
    if args.out:
        path = os.path.join(_ensure_dir(args.out), "projected.csv")
        io.write_matrix(path, P)
    else:
        io_rows = "\n".join(",".join(io.format_float(v) for v in row) for row in P)
        print(io_rows)
    rows = [("mu_before", f"{log_norm(A, spec):.15g}"), ("mu_after", f"{log_norm(P, spec):.15g}"),
            ("distance_fro", f"{float(np.linalg.norm(P - A)):.15g}")]
    sys.stderr.write(_table(("quantity", "value"), rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="noneuclid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lognorm", help="print the log norm of a matrix")
    s.add_argument("matrix")
    s.add_argument("--norm", choices=("1", "2", "inf"), default="inf")
    s.add_argument("--eta", metavar="FILE")
    s.set_defaults(func=cmd_lognorm)

    s = sub.add_parser("fig1", help="forward-step Lipschitz bounds on an alpha grid")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--ell", type=float, default=2.0)
    s.add_argument("--diagl", type=float, default=None, help="defaults to ell")
    s.add_argument("--grid", type=int, default=200, help="number of grid points")
    s.add_argument("--alpha-max", type=float, default=1.0)
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("rnn-experiment", help="equilibrium iterations on a random network")
    s.add_argument("--config", metavar="FILE", help="flat key=value file")
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--activation")
    s.add_argument("--alpha", type=float, help="defaults to the largest certified step")
    s.add_argument("--seed", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_rnn_experiment)

    s = sub.add_parser("lipschitz", help="certified and sampled Lipschitz constants of a model")
    s.add_argument("model", metavar="DIR")
    s.add_argument("--pairs", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    s.set_defaults(func=cmd_lipschitz)

    s = sub.add_parser("solve", help="find a zero of an affine operator plus a separable term")
    s.add_argument("problem", metavar="FILE", help="key=value problem file")
    s.add_argument("--method", choices=SOLVE_METHODS, default="forward_backward")
    s.add_argument("--mode", choices=("auto", STRONG, MONOTONE), default="auto")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=10_000)
    s.add_argument("--norm", choices=("1", "2", "inf"), default=None)
    s.add_argument("--eta", metavar="FILE")
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("project", help="project a matrix onto a log-norm ball")
    s.add_argument("matrix")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--eta", metavar="FILE")
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_project)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
