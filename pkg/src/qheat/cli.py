"""Command-line entry point: ``qheat <subcommand> ...``.

Exit codes: 0 success, 1 at least one failed sweep cell (or failed solve),
2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

log = logging.getLogger("qheat")

EXIT_OK, EXIT_CELL_FAILED, EXIT_BAD_CONFIG = 0, 1, 2


class UsageError(Exception):
    pass


def _problem(args, *, default_steps=None):
    from .grid import load_problem, make_problem

    if getattr(args, "config", None):
        try:
            return load_problem(args.config)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"invalid problem config: {exc}") from exc
    try:
        return make_problem(args.m, n_steps=args.steps if args.steps is not None else default_steps,
                            lam=args.lam, t_final=args.t_final, initial=args.initial)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _region(m, which):
    from .grid import region_indices

    return region_indices(m, which)


def cmd_solve_classical(args) -> int:
    from .grid import (assemble_block_system, heat_in_region, march_explicit,
                       solve_block_direct, spectral_solve)

    problem = _problem(args, default_steps=args.m if args.t_final is None else None)
    if args.method == "march":
        final = march_explicit(problem)
    elif args.method == "block":
        final = solve_block_direct(assemble_block_system(problem))
    else:
        final = None
    values = spectral_solve(problem) if final is None else final.final
    if args.out and final is not None:
        final.to_csv(args.out)
    heat = heat_in_region(values, _region(problem.m, args.region), problem.grid.delta_x)
    print(f"m={problem.m} steps={problem.grid.n_steps} lambda={problem.lam:.6g} "
          f"H_S={heat!r}")
    return EXIT_OK


def cmd_solve_qlsp(args) -> int:
    from .chebyshev import filter_weights
    from .grid import assemble_block_system, heat_in_region
    from .qae import ReadoutNorms, heat_readout
    from .qlsp import (StateVector, WalkSchedule, adiabatic_error_bound, adiabatic_evolve,
                       build_hamiltonian_path, chebyshev_filter, extract_solution,
                       filter_step, walk_step)

    problem = _problem(args, default_steps=args.m if args.t_final is None else None)
    system = assemble_block_system(problem)
    try:
        path = build_hamiltonian_path(system.to_dense(), system.rhs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    schedule = WalkSchedule(args.walk_steps, args.dt_walk)
    run = adiabatic_evolve(path, schedule, track_overlaps=False)
    target = path.target_state()
    fid = run.state.fidelity(target)
    print(f"walk_steps={args.walk_steps} fidelity={fid:.10f} "
          f"bound={adiabatic_error_bound(path, schedule):.6g}")
    state = run.state
    if not args.no_filter:
        state = chebyshev_filter(state, walk_step(path, 1.0, filter_step(path)),
                                 filter_weights(args.taps, args.sidelobe_db))
        print(f"filtered_fidelity={state.fidelity(target):.10f}")
    ext = extract_solution(state, path)
    m = problem.m
    u_final = ext.values[-m:]
    region = _region(m, args.region)
    dx = problem.grid.delta_x
    ref = heat_in_region(system.solve()[-m:], region, dx)
    res = heat_readout(StateVector.from_vector(u_final), region,
                       ReadoutNorms(float(np.linalg.norm(u_final)), dx), args.epsilon,
                       seed=args.seed, prep_cost=args.walk_steps + args.taps - 1, m=m)
    print(f"H_S_estimate={res.estimate!r} H_S_reference={ref!r} "
          f"error={abs(res.estimate - ref):.3e} queries={res.combined_queries}")
    return EXIT_OK


def cmd_solve_osk(args) -> int:
    from .grid import make_problem
    from .osk import SmoothnessParams, build_hierarchy, make_estimator, osk_solve

    if args.config:
        problem = _problem(args)
    else:
        problem = make_problem(args.m, n_steps=1, t_final=args.t_final or 0.05,
                               initial=args.initial)
    t_final = args.t_final or problem.grid.t_final or 0.05
    try:
        hier = build_hierarchy(t_final, args.n, args.k, args.knf, args.kns)
        est = make_estimator(args.estimator, args.qae_ancillas, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = osk_solve(problem, hier, SmoothnessParams(r=args.r), est)
    if args.out:
        res.trajectory.to_csv(args.out)
    print("n,k,sup_error,queries")
    print(res.report_line())
    return EXIT_OK


def cmd_kappa_study(args) -> int:
    from .conditioning import heat_system_builder, kappa_scaling_study

    try:
        fit = kappa_scaling_study(args.m, heat_system_builder(args.lam, args.steps_per_point),
                                  workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print("m,norm_A,sigma_min,kappa")
    for m, nA, smin, kap in fit.rows():
        print(f"{m},{nA!r},{smin!r},{kap!r}")
    print(f"# slope={fit.slope:.4f} r2={fit.r2:.5f} norm_spread={fit.norm_spread:.4f}")
    return EXIT_OK


def cmd_estimate_mean(args) -> int:
    from .qae import amplitude_estimate, ancillas_for, build_mean_oracle

    if args.values:
        g = np.array([float(v) for v in args.values.split(",")])
    else:
        g = np.random.default_rng(args.seed).random(args.random)
    M = args.ancillas if args.ancillas else ancillas_for(args.epsilon)
    try:
        oracle = build_mean_oracle(g)
        res = amplitude_estimate(oracle, M, seed=args.seed, mode=args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mean = res.estimate * oracle.padding_ratio
    print(f"ancillas={M} estimate={mean!r} exact={oracle.mean!r} "
          f"error={abs(mean - oracle.mean):.3e} bound={res.bound * oracle.padding_ratio:.3e} "
          f"queries={res.query_count}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .report import render_report, write_dat_files
    from .sweep import ConfigError, load_config, records_to_csv, run_sweep, timings_to_csv

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seeds=(args.seed,))
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    records = run_sweep(cfg, workers=args.workers)
    out = args.out or cfg.records_path
    text = records_to_csv(records, out)
    if out is None:
        sys.stdout.write(text)
    timings = args.timings or cfg.timings_path
    if timings:
        timings_to_csv(records, timings)
    rep = args.report or cfg.report_path
    if rep:
        Path(rep).write_text(render_report(records, "Sweep report"))
    dat = args.dat_dir or cfg.dat_dir
    if dat:
        write_dat_files(records, dat)
    failed = [r for r in records if not r.ok]
    for r in failed:
        log.error("cell %s m=%d eps=%g seed=%d failed: %s", r.method, r.m, r.epsilon, r.seed,
                  r.message)
    return EXIT_CELL_FAILED if failed else EXIT_OK


def cmd_report(args) -> int:
    from .report import records_for_models, render_report, write_dat_files
    from .sweep import log_grid, records_from_csv

    if args.records:
        try:
            records = records_from_csv(Path(args.records))
        except (OSError, ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"cannot read records: {exc}") from exc
        title = f"Report for {args.records}"
    else:
        records = records_for_models(args.m, log_grid(args.eps_min, args.eps_max))
        title = "Cost-model comparison"
    if not records:
        raise UsageError("no records to report")
    text = render_report(records, title)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.dat_dir:
        write_dat_files(records, args.dat_dir)
    return EXIT_CELL_FAILED if any(not r.ok for r in records) else EXIT_OK


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed for every stochastic path (default: deterministic read-out)")
    common.add_argument("-v", "--verbose", action="store_true")

    grid_opts = argparse.ArgumentParser(add_help=False)
    grid_opts.add_argument("--config", help="YAML problem file (overrides grid flags)")
    grid_opts.add_argument("--m", type=int, default=8, help="interior grid points")
    grid_opts.add_argument("--steps", type=int, default=None, help="time steps N")
    grid_opts.add_argument("--lam", type=float, default=0.25, help="CFL number")
    grid_opts.add_argument("--t-final", type=float, default=None)
    grid_opts.add_argument("--initial", default="sine:1")
    grid_opts.add_argument("--region", default="left", choices=["left", "right", "full"])

    p = argparse.ArgumentParser(prog="qheat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-classical", parents=[common, grid_opts],
                       help="explicit FDM, block solve or DST")
    s.add_argument("--method", choices=["march", "block", "fft"], default="march")
    s.add_argument("--out", help="trajectory CSV (march/block only)")
    s.set_defaults(func=cmd_solve_classical)

    s = sub.add_parser("solve-qlsp", parents=[common, grid_opts],
                       help="adiabatic walk emulation + filter + read-out")
    s.set_defaults(m=2)
    s.add_argument("--walk-steps", type=int, default=128)
    s.add_argument("--dt-walk", type=float, default=1.0)
    s.add_argument("--taps", type=int, default=32)
    s.add_argument("--sidelobe-db", type=float, default=40.0)
    s.add_argument("--no-filter", action="store_true")
    s.add_argument("--epsilon", type=float, default=0.02)
    s.set_defaults(func=cmd_solve_qlsp)

    s = sub.add_parser("solve-osk", parents=[common, grid_opts],
                       help="hierarchical Taylor/QAE integrator")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--knf", type=int, default=3)
    s.add_argument("--kns", type=int, default=8)
    s.add_argument("--r", type=int, default=2, help="Taylor degree")
    s.add_argument("--estimator", choices=["exact", "qae"], default="exact")
    s.add_argument("--qae-ancillas", type=int, default=12)
    s.add_argument("--out", help="trajectory CSV")
    s.set_defaults(func=cmd_solve_osk)

    s = sub.add_parser("kappa-study", parents=[common], help="condition-number scaling fit")
    s.add_argument("--m", type=_int_list, default=[4, 8, 16, 32, 64])
    s.add_argument("--lam", type=float, default=0.25)
    s.add_argument("--steps-per-point", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_kappa_study)

    s = sub.add_parser("estimate-mean", parents=[common], help="QAE mean of values in [0, 1]")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--values", help="comma-separated samples")
    src.add_argument("--random", type=int, default=16, help="number of random samples")
    s.add_argument("--ancillas", type=int, default=None)
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--mode", choices=["argmax", "sample"], default="argmax")
    s.set_defaults(func=cmd_estimate_mean)

    s = sub.add_parser("sweep", parents=[common], help="run a YAML-configured sweep")
    s.add_argument("config")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", help="records CSV (default: config or stdout)")
    s.add_argument("--timings")
    s.add_argument("--report")
    s.add_argument("--dat-dir")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", parents=[common], help="report from records or cost models")
    s.add_argument("--records", help="records CSV; without it the pure models are evaluated")
    s.add_argument("--m", type=_int_list, default=[1, 4, 16])
    s.add_argument("--eps-min", type=float, default=1e-4)
    s.add_argument("--eps-max", type=float, default=1e-1)
    s.add_argument("--out")
    s.add_argument("--dat-dir")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qheat: error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"qheat: failed: {exc}", file=sys.stderr)
        return EXIT_CELL_FAILED


if __name__ == "__main__":
    sys.exit(main())
