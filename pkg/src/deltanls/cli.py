"""Command-line front end.

Subcommands: ground-state, action-min, nehari-scan, d-curve,
rearrange-test, verify.  Every run writes JSON reports and CSV curves with
the resolved configuration and code version embedded; profile/curve
figures are rendered next to the CSV unless --no-plot is given.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 verification gate failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, plots
from .errors import ConfigError, DomainError
from .functionals import lagrange_frequency
from .grid import build_grid
from .io import load_state, save_state, write_csv, write_json
from .branch import branch_roots, branch_scan
from .rearrange import battery
from .solvers import SolverConfig, solve_action, solve_ground_state
from .special import PhysicalParams
from .verify import verify_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_GATE = 4


def _add_common(sp, with_solver=True):
    sp.add_argument("--outdir", default=None,
                    help="output directory (default: $DELTANLS_OUTDIR or '.')")
    plot = sp.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true", default=True)
    plot.add_argument("--no-plot", dest="plot", action="store_false")
    if with_solver:
        sp.add_argument("--grid-n", type=int, default=4096)
        sp.add_argument("--grid-radius", type=float, default=None,
                        help="truncation radius (default 40/sqrt(min(omega0,1)/2))")
        sp.add_argument("--rmin-factor", type=float, default=1e-7,
                        help="innermost node as a fraction of the radius")
        sp.add_argument("--max-iters", type=int, default=4000)
        sp.add_argument("--grad-tol", type=float, default=1e-5)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--starts", type=int, default=3)
        sp.add_argument("--lambda-policy", choices=["track-omega", "fixed"],
                        default="track-omega")


def _add_physics(sp, mass=False, omega=False):
    sp.add_argument("--p", type=float, required=True, help="nonlinearity power, p > 2")
    sp.add_argument("--alpha", type=float, required=True, help="defect strength")
    if mass:
        sp.add_argument("--mu", type=float, required=True, help="mass constraint, mu > 0")
    if omega:
        grp = sp.add_mutually_exclusive_group(required=True)
        grp.add_argument("--omega", type=float, help="frequency (absolute)")
        grp.add_argument("--omega-rel", type=float,
                         help="frequency as a multiple of the threshold omega0")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="deltanls",
        description="2D NLS with a point defect: solvers and verification.",
    )
    ap.add_argument("--version", action="version", version=f"deltanls {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ground-state", help="mass-constrained defect ground state")
    _add_physics(sp, mass=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_ground_state)

    sp = sub.add_parser("action-min", help="action minimizer at fixed frequency")
    _add_physics(sp, omega=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_action_min)

    sp = sub.add_parser("nehari-scan", help="singular-branch scan at fixed frequency")
    _add_physics(sp, omega=True)
    sp.add_argument("--lam-min-rel", type=float, default=1e-3)
    sp.add_argument("--lam-max-rel", type=float, default=30.0)
    sp.add_argument("--points", type=int, default=400)
    _add_common(sp, with_solver=False)
    sp.set_defaults(func=cmd_nehari_scan)

    sp = sub.add_parser("d-curve", help="minimal action vs frequency sweep")
    _add_physics(sp)
    sp.add_argument("--omega-min-rel", type=float, default=0.2)
    sp.add_argument("--omega-max-rel", type=float, default=3.0)
    sp.add_argument("--points", type=int, default=9)
    _add_common(sp)
    sp.set_defaults(func=cmd_d_curve)

    sp = sub.add_parser("rearrange-test", help="randomized rearrangement battery")
    sp.add_argument("--cells", type=int, default=64)
    sp.add_argument("--pairs", type=int, default=500)
    sp.add_argument("--ps-trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=1234)
    _add_common(sp, with_solver=False)
    sp.set_defaults(func=cmd_rearrange_test)

    sp = sub.add_parser("verify", help="replay gates on a persisted state file")
    sp.add_argument("--state", required=True, help="path to a state file")
    sp.add_argument("--omega", type=float, default=None,
                    help="override the frequency stored in the file")
    _add_common(sp, with_solver=False)
    sp.set_defaults(func=cmd_verify)
    return ap


def _outdir(args) -> Path:
    base = args.outdir or os.environ.get("DELTANLS_OUTDIR") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _params(args) -> PhysicalParams:
    if getattr(args, "mu", None) is not None and args.mu <= 0:
        raise ConfigError("--mu must be positive")
    try:
        return PhysicalParams(p=args.p, alpha=args.alpha)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _omega(args, params) -> float:
    om = args.omega if args.omega is not None else args.omega_rel * params.omega0
    if om <= 0:
        raise ConfigError("frequency must be positive")
    return om


def _default_radius(params, omega=None) -> float:
    scale = min(params.omega0, 1.0)
    if omega is not None:
        scale = min(scale, omega)
    return 40.0 / math.sqrt(0.5 * scale)


def _grid(args, params, omega=None):
    radius = args.grid_radius or _default_radius(params, omega)
    return build_grid(radius, args.grid_n, args.rmin_factor * radius)


def _config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        seed=args.seed,
        n_starts=args.starts,
        lambda_policy=args.lambda_policy,
    )


def _resolved(args) -> dict:
    # outdir and plot shape where results land, not what is computed, and
    # would break byte-level reproducibility across output locations
    skip = {"func", "outdir", "plot"}
    return {
        "version": __version__,
        "command": args.command,
        "args": {k: v for k, v in sorted(vars(args).items()) if k not in skip},
    }


def cmd_ground_state(args) -> int:
    params = _params(args)
    try:
        params.require_subcritical()
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    grid = _grid(args, params)
    config = _config(args)
    out = _outdir(args)
    meta = _resolved(args)

    result = solve_ground_state(args.mu, params, grid, config)
    omega = lagrange_frequency(result.state, params)
    verification = verify_state(result.state, params, omega)
    payload = {
        "config": meta,
        "converged": result.converged,
        "status": result.status,
        "iterations": result.iterations,
        "grad_norm": result.grad_norm,
        "omega_recovered": omega,
        "functional": result.report.as_dict(),
        "verification": verification.as_dict(),
        "diagnostics": result.diagnostics,
    }
    write_json(out / "ground_state_report.json", payload)
    save_state(out / "ground_state.state", result.state, params,
               omega=omega, extra={"config": meta["args"]})
    r = grid.nodes
    singular = result.state.q * result.state.green_values
    write_csv(out / "ground_state_profile.csv",
              {"r": r, "u": result.state.u_values,
               "phi_lambda": result.state.phi.values, "qG_lambda": singular},
              meta=meta)
    if args.plot:
        plots.render_profile(out / "ground_state_profile.png", r,
                             result.state.u_values, result.state.phi.values,
                             singular, f"ground state, mu={args.mu:g}, p={args.p:g}")
    if not result.converged:
        print("ground-state: solver did not converge", file=sys.stderr)
        return EXIT_NUMERICS
    if not verification.all_passed():
        print("ground-state: verification gates failed", file=sys.stderr)
        return EXIT_GATE
    print(f"ground-state: E={result.report.energy:.9g} omega={omega:.9g} "
          f"q={result.state.q:.6g} ({result.iterations} iterations)")
    return EXIT_OK


def cmd_action_min(args) -> int:
    params = _params(args)
    omega = _omega(args, params)
    grid = _grid(args, params, omega)
    config = _config(args)
    out = _outdir(args)
    meta = _resolved(args)

    result = solve_action(omega, params, grid, config)
    payload = {
        "config": meta,
        "omega": omega,
        "omega0": params.omega0,
        "degenerate": result.degenerate,
        "converged": result.converged,
        "status": result.status,
        "iterations": result.iterations,
        "grad_norm": result.grad_norm,
        "d_omega": result.d_omega,
        "c_omega": result.c_omega,
        "functional": result.report.as_dict(),
        "diagnostics": result.diagnostics,
    }
    if result.degenerate:
        # below the threshold there is nothing to persist but the collapse
        write_json(out / "action_min_report.json", payload)
        j0 = result.diagnostics["objective_initial"]
        j1 = result.diagnostics["objective_final"]
        collapsed = j1 <= 1e-4 * j0
        print(f"action-min: omega <= omega0, objective collapsed "
              f"{j0:.6g} -> {j1:.6g} (no minimizer exists)")
        return EXIT_OK if collapsed else EXIT_NUMERICS
    verification = verify_state(result.state, params, omega)
    nehari_rel = abs(result.report.nehari) / result.report.lp_p
    verification.record("nehari_identity", nehari_rel, 1e-8, nehari_rel <= 1e-8)
    payload["verification"] = verification.as_dict()
    write_json(out / "action_min_report.json", payload)
    save_state(out / "action_min.state", result.state, params,
               omega=omega, extra={"config": meta["args"]})
    r = grid.nodes
    singular = result.state.q * result.state.green_values
    write_csv(out / "action_min_profile.csv",
              {"r": r, "u": result.state.u_values,
               "phi_lambda": result.state.phi.values, "qG_lambda": singular},
              meta=meta)
    if args.plot:
        plots.render_profile(out / "action_min_profile.png", r,
                             result.state.u_values, result.state.phi.values,
                             singular, f"action minimizer, omega={omega:.4g}, p={args.p:g}")
    if not result.converged:
        print("action-min: solver did not converge", file=sys.stderr)
        return EXIT_NUMERICS
    if not verification.all_passed():
        print("action-min: verification gates failed", file=sys.stderr)
        return EXIT_GATE
    print(f"action-min: d(omega)={result.d_omega:.9g} q={result.state.q:.6g} "
          f"({result.iterations} iterations)")
    return EXIT_OK


def cmd_nehari_scan(args) -> int:
    params = _params(args)
    omega = _omega(args, params)
    out = _outdir(args)
    meta = _resolved(args)
    lams = np.geomspace(args.lam_min_rel * params.omega0,
                        args.lam_max_rel * params.omega0, args.points)
    points = branch_scan(omega, params, lams)
    roots = branch_roots(omega, params)
    meta["omega"] = omega
    meta["omega0"] = params.omega0
    meta["roots"] = list(roots) if roots else None
    write_csv(out / "nehari_scan.csv",
              {"lambda": lams,
               "g": np.array([pt.g for pt in points]),
               "q": np.array([pt.q for pt in points]),
               "action": np.array([pt.action for pt in points]),
               "admissible": np.array([float(pt.admissible) for pt in points])},
              meta=meta)
    if args.plot:
        plots.render_nehari_scan(out / "nehari_scan.png", lams,
                                 np.array([pt.action for pt in points]),
                                 np.array([float(pt.admissible) for pt in points]),
                                 omega, params.omega0)
    n_adm = sum(pt.admissible for pt in points)
    print(f"nehari-scan: {n_adm}/{len(points)} admissible points"
          + (f", forbidden interval [{roots[0]:.6g}, {roots[1]:.6g}]" if roots else ""))
    return EXIT_OK


def cmd_d_curve(args) -> int:
    params = _params(args)
    grid_cache = {}
    config = _config(args)
    out = _outdir(args)
    meta = _resolved(args)
    omegas = np.linspace(args.omega_min_rel, args.omega_max_rel, args.points) * params.omega0
    lam_scan = np.geomspace(1e-2 * params.omega0, 100.0 * params.omega0, 500)
    d_vals, d0_vals, binf_vals, ok_flags = [], [], [], []
    failures = 0
    for om in omegas:
        radius = args.grid_radius or _default_radius(params, om)
        key = round(radius, 12)
        if key not in grid_cache:
            grid_cache[key] = build_grid(radius, args.grid_n, args.rmin_factor * radius)
        grid = grid_cache[key]
        act = solve_action(float(om), params, grid, config)
        d_vals.append(act.d_omega)
        act0 = solve_action(float(om), params, grid, config, freeze_charge=True)
        d0_vals.append(act0.d_omega)
        admissible = [pt.action for pt in branch_scan(float(om), params, lam_scan)
                      if pt.admissible]
        binf_vals.append(min(admissible) if admissible else math.nan)
        point_ok = act.converged or act.degenerate
        ok_flags.append(float(point_ok))
        failures += not point_ok
    write_csv(out / "d_curve.csv",
              {"omega": omegas,
               "omega_over_omega0": omegas / params.omega0,
               "d": np.array(d_vals),
               "d0": np.array(d0_vals),
               "branch_inf": np.array(binf_vals),
               "solver_ok": np.array(ok_flags)},
              meta=meta)
    if args.plot:
        plots.render_d_curve(out / "d_curve.png", omegas, np.array(d_vals),
                             np.array(d0_vals), np.array(binf_vals), params.omega0)
    print(f"d-curve: {len(omegas)} frequencies, threshold at omega0={params.omega0:.6g}")
    return EXIT_OK if failures == 0 else EXIT_NUMERICS


def cmd_rearrange_test(args) -> int:
    out = _outdir(args)
    meta = _resolved(args)
    summary, rows = battery(cells=args.cells, pairs=args.pairs,
                            ps_trials=args.ps_trials, seed=args.seed)
    payload = {"config": meta, "summary": summary}
    write_json(out / "rearrange_report.json", payload)
    columns = {key: np.array([row[key] for row in rows]) for key in rows[0]}
    write_csv(out / "rearrange_trials.csv", columns, meta=meta)
    if args.plot:
        from .rearrange import _random_field, rearrange as _do

        rng = np.random.default_rng(args.seed)
        sample = _random_field(rng, args.cells, 1.0)
        plots.render_cells(out / "rearrange_sample.png", sample.values,
                           _do(sample).values, "symmetric decreasing rearrangement")
    status = "pass" if summary["passed"] else "FAIL"
    print(f"rearrange-test: {status} "
          f"(hl={summary['hl_violations']} sum={summary['sum_violations']} "
          f"equim={summary['equimeasurability_failures']} "
          f"ps_ratio={summary['polya_szego_worst_ratio']:.4f})")
    return EXIT_OK if summary["passed"] else EXIT_GATE


def cmd_verify(args) -> int:
    out = _outdir(args)
    meta = _resolved(args)
    state, params, header = load_state(args.state)
    omega = args.omega if args.omega is not None else header.get("omega")
    if omega is None or (isinstance(omega, float) and math.isnan(omega)):
        raise ConfigError("verify: no frequency stored in the state file; pass --omega")
    verification = verify_state(state, params, float(omega))
    payload = {"config": meta, "state_header": header,
               "verification": verification.as_dict()}
    write_json(out / "verify_report.json", payload)
    for name, entry in verification.comparisons.items():
        flag = "PASS" if entry["passed"] else "FAIL"
        print(f"verify: {name}: {flag} (lhs={entry['lhs']:.6g}, rhs={entry['rhs']:.6g})")
    return EXIT_OK if verification.all_passed() else EXIT_GATE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"deltanls: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"deltanls: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
