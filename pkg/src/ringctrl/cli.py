"""Command-line interface.

Subcommands: ``solve`` (run the boundary-value solver and persist the
solution), ``verify`` (re-certify a stored solution against the full-matrix
oracle and the physics diagnostics), ``sweep`` (scan ring sizes and fit the
scaling law) and ``export`` (emit tidy CSV plot data).

Exit codes: 0 success, 1 computational failure, 2 usage error.  All
commands are deterministic for fixed flags (and seed); the default output
directory can be set with ``RINGCTRL_OUT_DIR``.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .backend import BACKEND
from .config import RingConfig, RingControlError
from .dynamics import integrate
from .io import (
    load_solution,
    save_solution,
    write_document,
    write_long_csv,
)
from .shooting import SolverOptions, solve as solve_bvp, sweep as run_sweep
from .verify import ALL_CHECKS, run_checks

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _out_path(name, explicit):
    if explicit:
        return explicit
    return os.path.join(os.environ.get("RINGCTRL_OUT_DIR", "."), name)


def _odd_int(text):
    v = int(text)
    if v < 3 or v % 2 == 0:
        raise argparse.ArgumentTypeError(f"N must be odd and >= 3, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="ringctrl",
        description="Time-optimal single-excitation transfer controls on qubit rings.",
    )
    p.add_argument("--version", action="version",
                   version=f"ringctrl {__version__} (backend: {BACKEND})")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve the traveling-wave boundary-value problem")
    ps.add_argument("--n", type=_odd_int, required=True, help="ring size (odd, >= 3)")
    ps.add_argument("--tau", type=_positive_float, default=1.0,
                    help="transfer time per site (default 1)")
    ps.add_argument("--guess", choices=("fit", "random", "file"), default="fit")
    ps.add_argument("--guess-file", help="solution document to start from (guess=file)")
    ps.add_argument("--seed", type=int, default=0, help="seed for guess=random")
    ps.add_argument("--tol", type=_positive_float, default=1e-10,
                    help="integration tolerance inside the residual (default 1e-10)")
    ps.add_argument("--accept-tol", type=_positive_float, default=1e-8,
                    help="residual infinity-norm acceptance threshold (default 1e-8)")
    ps.add_argument("--max-iter", type=int, default=120)
    ps.add_argument("--samples", type=int, default=200,
                    help="stored trajectory samples per period (default 200)")
    ps.add_argument("--no-trajectory", action="store_true",
                    help="do not store the sampled trajectory in the document")
    ps.add_argument("--out", help="output JSON path (default ringctrl-solution-n<N>.json)")

    pv = sub.add_parser("verify", help="re-certify a stored solution")
    pv.add_argument("--solution", required=True, help="solution document to check")
    pv.add_argument("--checks", default=",".join(ALL_CHECKS),
                    help=f"comma-separated subset of: {','.join(ALL_CHECKS)},algebra")
    pv.add_argument("--out", help="write the JSON report here as well")

    pw = sub.add_parser("sweep", help="scan ring sizes and fit the scaling law")
    pw.add_argument("--n-min", type=_odd_int)
    pw.add_argument("--n-max", type=_odd_int)
    pw.add_argument("--step", type=int, default=2,
                    help="size increment (even, default 2)")
    pw.add_argument("--guess", choices=("fit", "random"), default="fit")
    pw.add_argument("--seed", type=int, default=0)
    pw.add_argument("--tol", type=_positive_float, default=1e-10)
    pw.add_argument("--threads", type=int, default=1,
                    help="parallel solves (disables warm starting; default 1)")
    pw.add_argument("--fit-table", metavar="CSV",
                    help="skip solving; refit the scaling law from an "
                         "existing sweep table")
    pw.add_argument("--out", help="output CSV table path")
    pw.add_argument("--fit-out", help="write fit coefficients as JSON")

    pe = sub.add_parser("export", help="emit tidy CSV plot data from a solution")
    pe.add_argument("--solution", required=True)
    pe.add_argument("--what", choices=("profiles", "couplings", "spectrum", "trajectory"),
                    required=True)
    pe.add_argument("--format", choices=("csv",), default="csv")
    pe.add_argument("--times", default=None,
                    help="comma-separated profile times (default: 0, tau/2, tau)")
    pe.add_argument("--out", help="output CSV path")

    return p


def cmd_solve(args) -> int:
    opts = SolverOptions(
        accept_tol=args.accept_tol,
        max_iter=args.max_iter,
        rtol=args.tol,
        atol=args.tol,
        keep_trajectory=not args.no_trajectory,
        trajectory_samples=args.samples,
    )
    config = RingConfig(n_sites=args.n, transfer_time=args.tau)
    guess = args.guess
    if guess == "file":
        if not args.guess_file:
            print("error: --guess file requires --guess-file", file=sys.stderr)
            return EXIT_USAGE
        prev = load_solution(args.guess_file)
        if prev.config.n_sites != args.n:
            print(f"error: guess file is for N={prev.config.n_sites}, not N={args.n}",
                  file=sys.stderr)
            return EXIT_USAGE
        guess = (prev.a0, prev.l0)

    sol = solve_bvp(config, guess, seed=args.seed, options=opts)
    run = {
        "command": "solve",
        "n": args.n,
        "tau": args.tau,
        "guess": args.guess,
        "seed": args.seed,
        "tol": args.tol,
        "accept_tol": args.accept_tol,
        "max_iter": args.max_iter,
        "samples": args.samples,
        "schema_version": 1,
    }
    out = _out_path(f"ringctrl-solution-n{args.n}.json", args.out)
    save_solution(out, sol, run)
    print(f"N          = {sol.config.n_sites}")
    print(f"L0         = {sol.l0:.12g}")
    print(f"J0         = {sol.j0:.12g}")
    print(f"J0*tau     = {sol.j0_tau:.12g}")
    print(f"residual   = {sol.residual_norm:.3e} (accept < {args.accept_tol:.1e})")
    print(f"converged  = {sol.converged}  [{sol.diagnostics['lm_message']}, "
          f"{sol.diagnostics['n_iter']} iterations]")
    print(f"written    -> {out}")
    if not sol.converged:
        return EXIT_FAILURE
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        sol = load_solution(args.solution)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read solution document: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    try:
        results = run_checks(sol, names)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    all_pass = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_pass &= r.passed
        print(f"[{status}] {r.name}")
        for k, v in r.measured.items():
            bound = r.thresholds.get(k)
            lim = f" (< {bound:.3e})" if isinstance(bound, float) else ""
            if isinstance(v, float):
                print(f"    {k:32s} = {v: .6e}{lim}")
            else:
                print(f"    {k:32s} = {v}{lim}")
    report = {
        "solution": os.path.abspath(args.solution),
        "all_passed": all_pass,
        "checks": [r.to_dict() for r in results],
    }
    if args.out:
        write_document(args.out, report)
        print(f"report -> {args.out}")
    print("verification:", "PASS" if all_pass else "FAIL")
    return EXIT_OK if all_pass else EXIT_FAILURE


def _print_fit(fit, fit_out):
    c, s = fit.coeffs, fit.stderr
    print(f"fit: l0*tau = {c[0]:.4f}(+-{s[0]:.4f}) "
          f"+ {c[1]:.4f}(+-{s[1]:.4f}) * N^{c[2]:.4f}(+-{s[2]:.4f})")
    print(f"     max pointwise relative deviation: {fit.max_rel_dev:.2e}")
    if fit_out:
        write_document(fit_out, {
            "coeffs": list(c), "stderr": list(s),
            "max_rel_dev": fit.max_rel_dev, "n_points": fit.n_points,
        })


def cmd_sweep(args) -> int:
    if args.fit_table:
        import csv as _csv

        from .shooting import fit_l0_tau

        try:
            with open(args.fit_table, newline="") as fh:
                rows = [r for r in _csv.DictReader(fh) if int(r["converged"])]
        except (OSError, KeyError, ValueError) as exc:
            print(f"error: cannot read sweep table: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        if len(rows) < 4:
            print("error: fit needs >= 4 converged rows", file=sys.stderr)
            return EXIT_FAILURE
        fit = fit_l0_tau([int(r["n"]) for r in rows],
                         [float(r["l0_tau"]) for r in rows])
        _print_fit(fit, args.fit_out)
        return EXIT_OK

    if args.n_min is None or args.n_max is None:
        print("error: --n-min and --n-max are required (or use --fit-table)",
              file=sys.stderr)
        return EXIT_USAGE
    if args.step <= 0 or args.step % 2 != 0:
        print(f"error: --step must be a positive even integer, got {args.step}",
              file=sys.stderr)
        return EXIT_USAGE
    if args.n_max < args.n_min:
        print("error: empty sweep range (--n-max < --n-min)", file=sys.stderr)
        return EXIT_USAGE
    ns = list(range(args.n_min, args.n_max + 1, args.step))
    opts = SolverOptions(rtol=args.tol, atol=args.tol)
    result = run_sweep(ns, guess=args.guess, seed=args.seed, options=opts,
                       threads=args.threads)

    out = _out_path(f"ringctrl-sweep-{args.n_min}-{args.n_max}.csv", args.out)
    rows = [(r.n, r.l0_tau, r.j0_tau, r.residual_norm, int(r.converged))
            for r in result.rows]
    write_long_csv(out, rows, header=("n", "l0_tau", "j0_tau", "residual", "converged"))

    print(f"{'N':>4s} {'L0*tau':>12s} {'J0*tau':>12s} {'residual':>10s}  conv")
    for r in result.rows:
        print(f"{r.n:4d} {r.l0_tau:12.8f} {r.j0_tau:12.8f} {r.residual_norm:10.2e}  "
              f"{'yes' if r.converged else 'NO'}")
    if result.fit is not None:
        _print_fit(result.fit, args.fit_out)
    else:
        print("fit: skipped (needs >= 4 converged sizes)")
    print(f"table -> {out}")
    return EXIT_OK if all(r.converged for r in result.rows) else EXIT_FAILURE


def _export_trajectory(sol, samples_per_period=200):
    if sol.trajectory is not None:
        return sol.trajectory
    traj, _ = integrate(sol.a0, sol.tau, sol.config, rtol=1e-12, atol=1e-12,
                        samples=samples_per_period, validate_tol=1e-6)
    return traj


def cmd_export(args) -> int:
    try:
        sol = load_solution(args.solution)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read solution document: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    traj = _export_trajectory(sol)
    n = sol.config.n_sites
    rows = []
    if args.what == "profiles":
        if args.times:
            want = [float(t) for t in args.times.split(",")]
        else:
            want = [0.0, sol.tau / 2.0, sol.tau]
        idx = [int(np.argmin(np.abs(traj.times - t))) for t in want]
        psi2 = 2.0 * traj.xs**2
        for i in idx:
            t = traj.times[i]
            for m in range(n):
                rows.append((t, m + 1, "x", traj.xs[i, m]))
                rows.append((t, m + 1, "y", traj.ys[i, m]))
                rows.append((t, m + 1, "psi2", psi2[i, m]))
    elif args.what == "couplings":
        js = traj.couplings()
        for i, t in enumerate(traj.times):
            for m in range(n):
                rows.append((t, m + 1, "j", js[i, m]))
                rows.append((t, m + 1, "abs_j", abs(js[i, m])))
    elif args.what == "spectrum":
        from .analysis import instantaneous_spectrum

        for s in instantaneous_spectrum(traj):
            for k in range(n):
                rows.append((s.time, k + 1, "eigenvalue", s.eigenvalues[k]))
                rows.append((s.time, k + 1, "overlap_sq",
                             abs(s.overlap_coeffs[k]) ** 2))
    elif args.what == "trajectory":
        for i, t in enumerate(traj.times):
            for m in range(n):
                rows.append((t, m + 1, "x", traj.xs[i, m]))
                rows.append((t, m + 1, "y", traj.ys[i, m]))
    out = _out_path(f"ringctrl-{args.what}.csv", args.out)
    write_long_csv(out, rows)
    print(f"{len(rows)} rows -> {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "export":
            return cmd_export(args)
    except RingControlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
