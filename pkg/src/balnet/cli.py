"""Scenario runner: parse a config, run the limit solver and/or the particle
simulation, and emit CSV time series plus a machine-readable verdict.

Exit status is 0 when the run succeeds (and, in compare mode, passes its
tolerances); nonzero with a diagnostic on blow-up, missing balance roots, or
configuration errors.  The NTHREADS environment variable caps the numerical
thread pools without changing any output byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import ComparisonReport, compare
from .balance import solve_balance
from .config import (MODES, ScenarioConfig, parse_config, preset_names,
                     preset_text)
from .errors import (BalnetError, BlowUp, InvalidInitialState, NoConvergence,
                     ParseError, UnstableRoot, ValidationError)
from .limit import LimitTrajectory, integrate_limit
from .particles import InitialLaw, ObservableSeries, SimConfig, simulate

_thread_cap_controller = None


def _apply_thread_cap():
    """Cap BLAS/OpenMP pools at NTHREADS when threadpoolctl is available.
    Results are unaffected by design; this only bounds resource usage."""
    global _thread_cap_controller
    raw = os.environ.get("NTHREADS")
    if not raw:
        return
    try:
        workers = max(1, int(raw))
    except ValueError:
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    _thread_cap_controller = threadpool_limits(limits=workers)


def _fmt(value: float, precision: int) -> str:
    return "%.*g" % (precision, value)


def _write_csv(path: Path, comment: str, names, columns, precision: int):
    rows = len(columns[0])
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("# %s\n" % comment)
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i], precision) for col in columns) + "\n")


def write_limit_csv(path: Path, cfg: ScenarioConfig, traj: LimitTrajectory):
    m = cfg.model.basis.size
    names = (["t"] + ["v_e_%d" % (a + 1) for a in range(m)]
             + ["v_i_%d" % (a + 1) for a in range(m)]
             + ["K_e", "K_i", "residual_norm", "stability_margin"])
    coeffs = traj.coefficients
    cov = traj.covariances
    columns = [traj.times]
    columns += [coeffs[:, a] for a in range(2 * m)]
    columns += [cov[:, 0], cov[:, 1], traj.residual_norms, traj.stability_margins]
    _write_csv(path, "preset=%s seed=%d mode=limit" % (cfg.name, cfg.seed),
               names, columns, cfg.csv_precision)


def write_particle_csv(path: Path, cfg: ScenarioConfig, series: ObservableSeries):
    m = cfg.model.basis.size
    names = (["t"] + ["vhat_e_%d" % (a + 1) for a in range(m)]
             + ["vhat_i_%d" % (a + 1) for a in range(m)]
             + ["Khat_e", "Khat_i"])
    columns = [series.times]
    columns += [series.v_e[:, a] for a in range(m)]
    columns += [series.v_i[:, a] for a in range(m)]
    columns += [series.k_e, series.k_i]
    _write_csv(path, "preset=%s seed=%d mode=particle" % (cfg.name, cfg.seed),
               names, columns, cfg.csv_precision)


def write_verdict(path: Path, cfg: ScenarioConfig, report: ComparisonReport):
    lines = [
        "preset = %s" % cfg.name,
        "seed = %d" % cfg.seed,
        "sup_mean_error_e = %.17g" % report.sup_mean_error_e,
        "sup_mean_error_i = %.17g" % report.sup_mean_error_i,
        "sup_var_error = %.17g" % report.sup_var_error,
        "tol_mean_e = %.17g" % report.tolerances.mean_e,
        "tol_mean_i = %.17g" % report.tolerances.mean_i,
        "tol_var = %.17g" % report.tolerances.var,
    ]
    if report.wasserstein_series:
        lines.append("sup_wasserstein_upper = %.17g"
                     % max(w[2] for w in report.wasserstein_series))
        if report.tolerances.wasserstein is not None:
            lines.append("tol_wasserstein = %.17g" % report.tolerances.wasserstein)
    lines.append("passed = %s" % ("true" if report.passed else "false"))
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve_initial_means(cfg: ScenarioConfig) -> np.ndarray:
    """Initial mean coefficients: the balanced root at the initial variances.

    Particle mode accepts a marginally stable root (the balance identity is
    the initial-condition requirement; stability only gates the limit)."""
    m = cfg.model.basis.size
    guess = cfg.v_guess if cfg.v_guess is not None else np.zeros(2 * m)
    # The balance equations need strictly positive variances; a deterministic
    # start (K0 = 0) still balances at the K -> 0 limit of the gain means,
    # which for every bundled scenario equals the root at a tiny variance.
    k_e = max(cfg.k_e0, 1e-10)
    k_i = max(cfg.k_i0, 1e-10)
    try:
        v0, _ = solve_balance(cfg.model, k_e, k_i, guess,
                              rule_order=cfg.quadrature_order,
                              tol=cfg.newton_tol, max_iter=cfg.newton_max_iter)
        return v0
    except UnstableRoot as err:
        if cfg.mode == "particle" and err.report is not None and err.report.root is not None:
            print("note: starting particles from a balance root that is not "
                  "strictly stable (margin = %g)" % err.report.stability_margin,
                  file=sys.stderr)
            return err.report.root
        raise


def run_scenario(cfg: ScenarioConfig, out_dir: str = None) -> int:
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    try:
        v0 = _resolve_initial_means(cfg)
    except (UnstableRoot, NoConvergence) as err:
        print("error: no stable balanced root for these parameters (%s)" % err,
              file=sys.stderr)
        return 2

    traj = None
    if cfg.mode in ("limit", "compare"):
        try:
            traj = integrate_limit(cfg.model, v0, (cfg.k_e0, cfg.k_i0),
                                   cfg.horizon, cfg.dt,
                                   rule_order=cfg.quadrature_order,
                                   corrector_tol=cfg.newton_tol)
        except InvalidInitialState as err:
            print("error: %s" % err, file=sys.stderr)
            return 2
        write_limit_csv(out / "limit.csv", cfg, traj)
        if traj.terminated is not None:
            print("note: limit trajectory terminated at t = %g (%s)"
                  % traj.terminated, file=sys.stderr)

    series = None
    if cfg.mode in ("particle", "compare"):
        sim = SimConfig(model=cfg.model, n=cfg.n, dt=cfg.dt,
                        horizon=cfg.horizon, seed=cfg.seed,
                        initial=InitialLaw(v=v0, k_e=cfg.k_e0, k_i=cfg.k_i0),
                        observable_stride=cfg.observable_stride,
                        snapshot_stride=cfg.snapshot_stride)
        try:
            series = simulate(sim)
        except BlowUp as err:
            if err.partial is not None:
                write_particle_csv(out / "particle.csv", cfg, err.partial)
            print("error: %s" % err, file=sys.stderr)
            return 3
        write_particle_csv(out / "particle.csv", cfg, series)

    if cfg.mode == "compare":
        report = compare(series, traj, cfg.tolerances)
        write_verdict(out / "verdict.txt", cfg, report)
        return 0 if report.passed else 1
    return 0


def _load_config_text(spec: str) -> str:
    path = Path(spec)
    if path.exists():
        return path.read_text(encoding="utf-8")
    return preset_text(spec)


def _preset_summary(name: str) -> str:
    for line in preset_text(name).splitlines():
        line = line.strip()
        if line.startswith("#"):
            return line.lstrip("# ").strip()
        if line:
            break
    return ""


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = argparse.ArgumentParser(
        prog="balnet",
        description="Balanced-network simulation and verification runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one scenario")
    run_p.add_argument("--config", required=True,
                       help="path to a scenario file, or a bundled preset name")
    run_p.add_argument("--mode", choices=MODES, help="override the config mode")
    run_p.add_argument("--n", type=int, help="override the particle count")
    run_p.add_argument("--seed", type=int, help="override the RNG seed")
    run_p.add_argument("--out", help="override the output directory")
    sub.add_parser("presets", help="list bundled scenarios")
    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in preset_names():
            print("%s  %s" % (name, _preset_summary(name)))
        return 0

    try:
        cfg = parse_config(_load_config_text(args.config))
        overrides = {}
        if args.mode is not None:
            overrides["mode"] = args.mode
        if args.n is not None:
            if args.n < 1:
                raise ValidationError("n must be >= 1")
            overrides["n"] = args.n
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except (ParseError, ValidationError, OSError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 2
    try:
        return run_scenario(cfg, out_dir=args.out)
    except BalnetError as err:
        print("error: %s" % err, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
