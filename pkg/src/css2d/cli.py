"""Command-line surface: simulate, picard, check, lemma.

Exit codes: 0 success, 1 failed invariant check, 2 configuration error,
3 instability (overflow guard), 4 non-contracting iteration, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics, dynamics, estimates, initdata
from .config import ConfigError, RunConfig, load_config
from .fields import State
from .nullforms import advection_direct, advection_nullform, manufactured_lorenz_state
from .snapshots import DiagnosticsWriter, SnapshotError, read_snapshot, write_snapshot
from .spectral import Grid

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_NOT_CONTRACTING = 4
EXIT_IO = 5


def build_initial_state(cfg: RunConfig) -> State:
    """Initial data from a preset, a full snapshot, or raw snapshot profiles."""
    if cfg.snapshot:
        return read_snapshot(cfg.snapshot)
    grid = Grid(cfg.n_points, cfg.side_length)
    if cfg.raw_profile:
        src = read_snapshot(cfg.raw_profile)
        if src.grid.n_points != grid.n_points:
            raise ConfigError(
                f"raw profile grid {src.grid.n_points} != config grid {grid.n_points}")
        free = initdata.FreeData(psi0=src.phi, psi1=src.dphi, rng_seed=cfg.rng_seed)
        return initdata.make_state(grid, free, kappa=cfg.kappa, m_bound=cfg.m_bound)
    params = dict(cfg.preset_params)
    kwargs = {}
    for key in ("delta", "sigma", "separation", "vel", "a0_amp", "acf_amp"):
        if key in params:
            kwargs[key] = params.pop(key)
    if "mode" in params:
        kwargs["mode"] = int(params.pop("mode"))
    if "center1" in params or "center2" in params:
        L = cfg.side_length
        kwargs["center"] = (params.pop("center1", L / 2.0), params.pop("center2", L / 2.0))
    if params:
        raise ConfigError(f"unknown data parameters: {sorted(params)}")
    kwargs["rng_seed"] = cfg.rng_seed
    return initdata.preset_state(cfg.preset, grid, kappa=cfg.kappa,
                                 m_bound=cfg.m_bound, **kwargs)


def cmd_simulate(cfg: RunConfig) -> int:
    cfg.validate()
    state = build_initial_state(cfg)
    if cfg.scheme == "rk4":
        dynamics._check_cfl(state.grid, cfg.dt, dynamics.DEFAULT_CFL_FACTOR)
    os.makedirs(cfg.out_dir, exist_ok=True)
    e_ref = diagnostics.energy(state)
    csv_path = os.path.join(cfg.out_dir, "diagnostics.csv")
    last_record = None

    with DiagnosticsWriter(csv_path) as writer:
        def on_step(step: int, st: State):
            nonlocal last_record
            last_record = diagnostics.make_record(st, cfg.s, e_ref)
            writer.write(last_record)
            if cfg.snapshot_stride and step and step % cfg.snapshot_stride == 0:
                write_snapshot(os.path.join(cfg.out_dir, f"snapshot_{step:06d}.css2"), st)

        try:
            traj = dynamics.evolve(state, cfg.T, cfg.dt, cfg.scheme,
                                   record_stride=max(1, dynamics._n_steps(cfg.T, cfg.dt)),
                                   callback=on_step, callback_stride=cfg.diagnostics_stride)
        except dynamics.StepUnstable as exc:
            print(f"unstable: {exc}", file=sys.stderr)
            return EXIT_UNSTABLE

    write_snapshot(os.path.join(cfg.out_dir, "state_final.css2"), traj.final)
    print(diagnostics.DiagnosticsRecord.csv_header())
    print(last_record.csv_row())
    return EXIT_OK


def cmd_picard(cfg: RunConfig, m_max: int, tol: float) -> int:
    cfg.validate()
    state = build_initial_state(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "picard_report.csv")
    code = EXIT_OK
    try:
        report, _ = dynamics.picard_iterate(state, cfg.T, cfg.dt, m_max=m_max,
                                            tol=tol, s=cfg.s)
    except dynamics.NotContracting as exc:
        report = exc.report
        code = EXIT_NOT_CONTRACTING
        print(f"not contracting: {exc}", file=sys.stderr)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,diff_phi_hs,diff_a_hs,ratio\n")
        for i, (dp, da) in enumerate(zip(report.diff_phi, report.diff_a), start=1):
            ratio = report.ratios[i - 2] if i >= 2 else float("nan")
            fh.write(f"{i},{dp:.17g},{da:.17g},{ratio:.17g}\n")
    print(f"iterations={report.iterations} converged={report.converged} "
          f"final_diff={report.combined[-1] if report.diff_phi else 0.0:.3e}")
    return code


def _check_line(results: list, name: str, value: float, tol: float, ok=None):
    passed = (value <= tol) if ok is None else ok
    results.append(passed)
    status = "PASS" if passed else "FAIL"
    print(f"check {name}: {status} ({value:.3e} vs {tol:.3e})")


def cmd_check(cfg: RunConfig) -> int:
    cfg.validate()
    state = build_initial_state(cfg)
    results: list = []

    res0 = diagnostics.constraint_residuals(state)
    if cfg.snapshot:
        # inherited mid-run state: judge against run tolerances
        _check_line(results, "state.sphere", res0["max_rho"], 1e-7)
        _check_line(results, "state.f1", res0["f1_res_L2"], 1e-5)
        _check_line(results, "state.f2", res0["f2_res_L2"], 1e-5)
        _check_line(results, "state.f3", res0["f3_res_L2"], 1e-5)
        _check_line(results, "state.lorenz", res0["lorenz_res_L2"], 1e-5)
    else:
        _check_line(results, "initial.sphere", state.sphere_deviation(), 1e-14)
        _check_line(results, "initial.tangency", state.tangency_deviation(), 1e-14)
        _check_line(results, "initial.f1", res0["f1_res_L2"], 1e-10)
        _check_line(results, "initial.f2", res0["f2_res_L2"], 1e-10)
        _check_line(results, "initial.f3", res0["f3_res_L2"], 1e-10)
        _check_line(results, "initial.lorenz", res0["lorenz_res_L2"], 1e-12)

    e_ref = diagnostics.energy(state)
    records = []

    def on_step(step: int, st: State):
        records.append(diagnostics.make_record(st, cfg.s, e_ref))

    n_steps = dynamics._n_steps(cfg.T, cfg.dt)
    stride = max(1, n_steps // 10)
    try:
        traj = dynamics.evolve(state, cfg.T, cfg.dt, cfg.scheme, record_stride=stride,
                               callback=on_step, callback_stride=cfg.diagnostics_stride)
    except dynamics.StepUnstable as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    _check_line(results, "run.energy_drift", max(r.rel_energy_drift for r in records), 1e-6)
    _check_line(results, "run.max_rho", max(r.max_rho for r in records), 1e-7)
    _check_line(results, "run.f2", max(r.f2_res_L2 for r in records), 1e-5)
    _check_line(results, "run.lorenz", max(r.lorenz_res_L2 for r in records), 1e-5)

    rng = np.random.default_rng(cfg.rng_seed)
    gap = 0.0
    for _ in range(20):
        st = manufactured_lorenz_state(state.grid, rng, kappa=state.kappa)
        gap = max(gap, float(np.max(np.abs(advection_direct(st) - advection_nullform(st)))))
    _check_line(results, "nullform.decomposition", gap, 1e-9)

    rep = diagnostics.scaling_check(traj, 2.0)
    _check_line(results, "scaling.pointwise", max(rep.max_mismatch_phi, rep.max_mismatch_a),
                10.0 * rep.discretization_error + 1e-13, ok=rep.pointwise_ok)
    _check_line(results, "scaling.hdot1", rep.norm_invariance_error, 1e-10, ok=rep.norm_ok)

    return EXIT_OK if all(results) else EXIT_CHECK_FAILED


def _print_verdict(verdict, title: str):
    print(f"{title}: {'PASS' if verdict.passed else 'FAIL'}")
    for c in verdict.conditions:
        status = "ok " if c.satisfied else "BAD"
        print(f"  [{status}] {c.name}: margin {c.margin:+.6g}  ({c.detail})")


def cmd_lemma(args) -> int:
    rows = []
    if args.matrix:
        vals = [float(x) for x in args.matrix.split(",")]
        if len(vals) != 6:
            raise ConfigError("matrix needs 6 comma-separated values s0,s1,s2,b0,b1,b2")
        verdict = estimates.product_conditions(estimates.ExponentMatrix(*vals))
        _print_verdict(verdict, "product estimate")
        rows = [("product", c.name, c.satisfied, c.margin) for c in verdict.conditions]
    elif args.nullform:
        parts = args.nullform.split(",")
        if len(parts) not in (6, 7):
            raise ConfigError("nullform needs kind,alpha1,alpha2,beta0,beta_plus,beta_minus[,n]")
        kind = parts[0]
        nums = [float(x) for x in parts[1:6]]
        n = int(parts[6]) if len(parts) == 7 else 2
        p = estimates.NullformExponents(kind, *nums, n=n)
        verdict = estimates.nullform_conditions(p)
        _print_verdict(verdict, f"{kind} estimate")
        rows = [(kind, c.name, c.satisfied, c.margin) for c in verdict.conditions]
    elif args.preset_s is not None:
        report = estimates.standard_instantiations(args.preset_s, args.preset_eps)
        for name, (p, verdict) in report.items():
            _print_verdict(verdict, f"{name} (kind {p.kind})")
            dim = verdict.condition("dimension")
            print(f"  dimension offset: {dim.margin:+.6g}")
            rows.extend((name, c.name, c.satisfied, c.margin) for c in verdict.conditions)
    else:
        raise ConfigError("lemma needs --matrix, --nullform, or preset --s/--eps")

    if args.ratio_trials:
        if not args.nullform and args.preset_s is None:
            raise ConfigError("--ratio-trials needs --nullform or preset exponents")
        if args.nullform:
            parts = args.nullform.split(",")
            p = estimates.NullformExponents(parts[0], *[float(x) for x in parts[1:6]],
                                            n=int(parts[6]) if len(parts) == 7 else 2)
        else:
            p = estimates.instantiation_exponents("q0j_gauge", args.preset_s, args.preset_eps)
        grid = Grid(args.grid_n, 20.0)
        rep = estimates.empirical_ratio(p.kind, p, args.ratio_trials, grid,
                                        n_t=args.time_samples, seed=args.seed)
        print(f"empirical {p.kind}: max ratio {rep.max_ratio:.6g} over "
              f"{len(rep.ratios)} trials ({rep.degenerate_trials} degenerate), "
              f"taper retention {rep.taper_loss:.3f}")
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("trial,ratio\n")
                for i, r in enumerate(rep.ratios):
                    fh.write(f"{i},{r:.17g}\n")
    elif args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("group,condition,satisfied,margin\n")
            for group, name, ok, margin in rows:
                fh.write(f"{group},{name},{int(ok)},{margin:.17g}\n")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="css2d",
        description="Pseudo-spectral lab for the gauged sigma model on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="evolve and write diagnostics + snapshots")
    p_sim.add_argument("config")

    p_pic = sub.add_parser("picard", help="fixed-point iteration report")
    p_pic.add_argument("config")
    p_pic.add_argument("--m-max", type=int, default=25)
    p_pic.add_argument("--tol", type=float, default=1e-8)

    p_chk = sub.add_parser("check", help="invariant suite on a configured run")
    p_chk.add_argument("config")

    p_lem = sub.add_parser("lemma", help="exponent-condition verdicts")
    p_lem.add_argument("--matrix", help="s0,s1,s2,b0,b1,b2")
    p_lem.add_argument("--nullform", help="kind,alpha1,alpha2,beta0,beta_plus,beta_minus[,n]")
    p_lem.add_argument("preset", nargs="?", help="'preset' to run the bundled instantiations")
    p_lem.add_argument("--s", dest="preset_s", type=float)
    p_lem.add_argument("--eps", dest="preset_eps", type=float, default=0.0)
    p_lem.add_argument("--ratio-trials", type=int, default=0)
    p_lem.add_argument("--grid-n", type=int, default=64)
    p_lem.add_argument("--time-samples", type=int, default=64)
    p_lem.add_argument("--seed", type=int, default=0)
    p_lem.add_argument("--csv")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(load_config(args.config))
        if args.command == "picard":
            return cmd_picard(load_config(args.config), args.m_max, args.tol)
        if args.command == "check":
            return cmd_check(load_config(args.config))
        if args.command == "lemma":
            return cmd_lemma(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SnapshotError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
