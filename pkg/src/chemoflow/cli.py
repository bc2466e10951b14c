"""Command line interface.

Subcommands: simulate, energy-audit, sugiyama-check, mms-convergence,
relenergy-audit, weak-strong.  Every check prints one PASS or FAIL line
with the measured defect and the tolerance it was held against.  Exit
codes: 0 all checks passed, 2 a check failed, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (
    RunConfig,
    config_grid,
    config_initial,
    config_params,
    config_settings,
    load_config,
)
from .dynamics import run
from .energetics import (
    energy_audit_sweep,
    energy_csv_text,
    ledger_series,
    sugiyama_ensemble_audit,
)
from .errors import ConfigError, SimulationError, SnapshotFormatError
from .fields import make_grid
from .mms import convergence_study, default_manufactured
from .relenergy import relenergy_audit, weak_strong_diagnostic
from .snapshot import write_snapshot
from .thermo import sugiyama_exponents


class _Printer:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def info(self, msg: str) -> None:
        if not self.quiet:
            print(msg)

    def verdict(self, passed: bool, label: str, detail: str) -> None:
        print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")


def _load(args) -> tuple[RunConfig, list[str]]:
    if args.config is None:
        return RunConfig(), []
    return load_config(args.config)


def _emit_warnings(warnings: list[str]) -> None:
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)


def _cmd_simulate(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    grid = config_grid(cfg)
    params = config_params(cfg)
    settings = config_settings(cfg)
    initial = config_initial(cfg, grid)
    try:
        traj = run(initial, params, settings, seed=cfg.seed)
    except SimulationError as exc:
        pr.verdict(False, "simulate", f"aborted: {exc}")
        if exc.trajectory is not None and len(exc.trajectory) > 0:
            write_snapshot(exc.trajectory.states[-1], out / "last_good.vnsf")
        return 2
    out.mkdir(parents=True, exist_ok=True)
    for i, state in enumerate(traj):
        write_snapshot(state, out / f"snapshot_{i:06d}.vnsf")
    ledgers = ledger_series(traj)
    (out / "energy.csv").write_text(energy_csv_text(ledgers))
    e0, e1 = ledgers[0].E, ledgers[-1].E
    pr.info(
        f"steps {traj.n_steps}, snapshots {len(traj)}, t_end {traj.times[-1]!r}"
    )
    pr.info(f"energy {e0!r} -> {e1!r}, mass {ledgers[-1].mass!r}")
    if traj.diagnostic:
        pr.info(f"diagnostic: {traj.diagnostic}")
    pr.verdict(True, "simulate", f"completed {traj.n_steps} steps to t = {traj.times[-1]!r}")
    return 0


def _cmd_energy_audit(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    params = config_params(cfg)
    settings = config_settings(cfg)
    initial = config_initial(cfg)
    sweep = energy_audit_sweep(
        initial, params, settings, scales=cfg.audit_scales, form=cfg.audit_form
    )
    out.mkdir(parents=True, exist_ok=True)
    base = sweep.reports[0]
    for rep, scale in zip(sweep.reports, cfg.audit_scales):
        pr.info(
            f"scale {scale}: form {rep.form}, c_fit {rep.c_fit!r}, "
            f"max defect {rep.max_defect!r}, E {rep.e_initial!r} -> {rep.e_final!r}"
        )
    pr.verdict(
        sweep.passed,
        "energy-audit",
        f"defect envelopes {[f'{c:.6g}' for c in sweep.c_fits]} vary "
        f"{sweep.variation:.3g} (tolerance 0.2); "
        f"E change {base.e_final - base.e_initial:.6g} (tolerance {base.atol:.3g})",
    )
    return 0 if sweep.passed else 2


def _cmd_sugiyama(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    try:
        exps = sugiyama_exponents(cfg.sug_m, cfg.sug_d)
    except ValueError as exc:
        pr.verdict(False, "sugiyama-check", f"inadmissible exponents: {exc}")
        return 2
    pr.info(
        f"m {exps.m}, d {exps.d}: theta {exps.theta!r}, closing exponent {exps.c2!r}"
    )
    grid = config_grid(cfg)
    audit = sugiyama_ensemble_audit(
        grid,
        m=cfg.sug_m,
        d=cfg.sug_d,
        kappa=cfg.sug_kappa,
        xi=cfg.sug_xi,
        n_pairs=cfg.sug_pairs,
        seed=cfg.seed,
    )
    fine = make_grid(grid.dim, 2 * grid.nx, 2 * grid.ny, grid.lx, grid.ly, grid.bc)
    audit_fine = sugiyama_ensemble_audit(
        fine,
        m=cfg.sug_m,
        d=cfg.sug_d,
        kappa=cfg.sug_kappa,
        xi=cfg.sug_xi,
        n_pairs=cfg.sug_pairs,
        seed=cfg.seed,
    )
    drift = abs(audit_fine.sup - audit.sup) / max(audit.sup, 1e-30)
    passed = audit.passed and np.isfinite(audit.sup) and drift < 0.02
    pr.verdict(
        passed,
        "sugiyama-check",
        f"sup required C1 {audit.sup!r} over {cfg.sug_pairs} pairs, "
        f"grid-halving drift {drift:.3e} (tolerance 2e-02)",
    )
    return 0 if passed else 2


def _cmd_mms(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    params = config_params(cfg)
    settings = replace(
        config_settings(cfg),
        t_end=cfg.mms_t_end,
        snapshot_stride=10 ** 9,
        include_convection=not args.no_convection,
    )
    ms = default_manufactured(cfg.mms_dim)
    report = convergence_study(ms, params, cfg.mms_resolutions, settings)
    for n, h, e in zip(report.resolutions, report.spacings, report.errors):
        pr.info(f"n {n}: h {h!r}, L2 error {e!r}")
    pr.info(f"orders {[f'{p:.3f}' for p in report.orders]}")
    passed = report.min_order >= args.min_order
    pr.verdict(
        passed,
        "mms-convergence",
        f"min observed order {report.min_order:.3f} "
        f"(threshold {args.min_order}, convection "
        f"{'off' if args.no_convection else 'on'})",
    )
    return 0 if passed else 2


def _blob_initial_factory(cfg: RunConfig):
    from .config import config_initial as build

    def make_initial(grid):
        sub = replace(
            cfg,
            dim=grid.dim,
            nx=grid.nx,
            ny=grid.ny,
            ic="gaussian_blob" if cfg.ic == "from_snapshot" else cfg.ic,
        )
        return build(sub, grid)

    return make_initial


def _cmd_relenergy(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    params = config_params(cfg)
    snap_dt = cfg.snap_dt if cfg.snap_dt is not None else cfg.t_end / 10.0
    settings = replace(config_settings(cfg), snap_dt=snap_dt)
    make_initial = _blob_initial_factory(cfg)
    weak_grid = make_grid(cfg.dim, cfg.rel_weak, cfg.rel_weak, cfg.lx, cfg.ly,
                          config_grid(cfg).bc)
    fine_grid = make_grid(cfg.dim, cfg.rel_fine, cfg.rel_fine, cfg.lx, cfg.ly,
                          config_grid(cfg).bc)
    weak = run(make_initial(weak_grid), params, settings)
    strong = run(make_initial(fine_grid), params, settings)
    report = relenergy_audit(weak, strong, params)
    pr.info(
        f"relE range [{report.rel_E.min()!r}, {report.rel_E.max()!r}], "
        f"residual norms max {report.res_norms.max()!r}"
    )
    worst = int(np.argmax(report.defects - report.tolerances))
    pr.verdict(
        report.passed,
        "relenergy-audit",
        f"max defect {report.max_defect:.6g} vs tolerance "
        f"{report.tolerances[worst]:.6g} at t = {report.times[worst]!r} "
        f"(weak {cfg.rel_weak}, strong {cfg.rel_fine})",
    )
    return 0 if report.passed else 2


def _cmd_weak_strong(args, out: Path, pr: _Printer) -> int:
    cfg, warnings = _load(args)
    _emit_warnings(warnings)
    params = config_params(cfg)
    snap_dt = cfg.snap_dt if cfg.snap_dt is not None else cfg.t_end / 10.0
    settings = replace(config_settings(cfg), snap_dt=snap_dt)
    make_initial = _blob_initial_factory(cfg)
    report = weak_strong_diagnostic(
        make_initial,
        params,
        cfg.ws_coarse,
        cfg.ws_fine,
        settings,
        dim=cfg.dim,
        lx=cfg.lx,
        ly=cfg.ly,
        bc=config_grid(cfg).bc,
        ratio_min=cfg.ws_ratio_min,
    )
    for n, s, a, b in zip(
        report.resolutions, report.sup_rel_H, report.growth_A, report.growth_B
    ):
        pr.info(f"n {n}: sup relH {s!r}, envelope A {a:.4g}, B {b:.4g}")
    pr.verdict(
        report.passed,
        "weak-strong",
        f"sup relH ratios {[f'{r:.3f}' for r in report.ratios]} vs fine "
        f"{report.fine_resolution}; min ratio {report.min_ratio:.3f} "
        f"(threshold {cfg.ws_ratio_min})",
    )
    return 0 if report.passed else 2


_COMMANDS = {
    "simulate": _cmd_simulate,
    "energy-audit": _cmd_energy_audit,
    "sugiyama-check": _cmd_sugiyama,
    "mms-convergence": _cmd_mms,
    "relenergy-audit": _cmd_relenergy,
    "weak-strong": _cmd_weak_strong,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemoflow",
        description="Chemotaxis compressible flow simulator with built-in audits",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="config file path")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--quiet", action="store_true", help="only PASS/FAIL lines")
        if name == "mms-convergence":
            p.add_argument(
                "--min-order", type=float, default=0.9,
                help="minimum acceptable observed order",
            )
            p.add_argument(
                "--no-convection", action="store_true",
                help="switch Rusanov transport off (expect second order)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    pr = _Printer(args.quiet)
    try:
        return _COMMANDS[args.command](args, args.out, pr)
    except (ConfigError, SnapshotFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
