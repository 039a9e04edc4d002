"""Command-line entry point.

Subcommands mirror the experiment kinds: groundstate, evolve, sweep,
stability, vortex, inhom.  Common flags: --config PATH, --out DIR, and for
evolve --resume CHECKPOINT.  Exit codes: 0 success (a detected collapse is a
valid scientific outcome), 2 config error, 3 numerical failure, 4 io error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .diagnostics import classify_blowup, record
from .experiments import (
    ExperimentError,
    SweepResult,
    inhomogeneous_threshold,
    stability_run,
    threshold_sweep,
    vortex_counterexample,
    vortex_state,
)
from .grid import WaveField, gaussian_field
from .groundstate import (
    ResolutionError,
    ShootingError,
    lift_to_grid,
    minimize_energy_constrained,
    solve_Q_radial,
)
from .integrator import Integrator, Status, new_state
from .operators import ConstantPower, ModelError
from .storage import (
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
    write_run_meta,
    write_series,
    write_summary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _initial_field(cfg: RunConfig, grid, params) -> WaveField:
    if cfg.initial == "gaussian":
        f = gaussian_field(grid, cfg.gamma)
        return WaveField(grid, f.values * cfg.c)
    if cfg.initial in ("scaled-Q", "chirped-Q"):
        nl = params.nonlinearity
        lam = nl.lam if isinstance(nl, ConstantPower) else nl.lam_min
        if lam <= 0:
            raise ConfigError("profile initial data needs a positive coupling")
        profile = solve_Q_radial(cfg.p, lam, cfg.n)
        nu = cfg.nu if cfg.initial == "chirped-Q" else 0.0
        return lift_to_grid(profile, grid, c=cfg.c, alpha=cfg.alpha,
                            theta=cfg.theta, nu=nu)
    if cfg.initial == "vortex":
        f = vortex_state(grid, cfg.gamma, cfg.vortex_m)
        return WaveField(grid, f.values * cfg.c)
    raise ConfigError(f"unknown initial kind {cfg.initial!r}")


def _sweep_summary(result: SweepResult) -> dict:
    rows = []
    for r in result.rows:
        rows.append({
            "c": r.c,
            "family": r.family,
            "verdict": r.verdict,
            "outcome": r.outcome,
            "t_detect": r.t_detect,
            "max_grad_ratio": r.max_grad_ratio,
            "window": list(r.window) if r.window else None,
        })
    out = {
        "kind": "sweep",
        "family": result.family,
        "reference_mass": result.reference_mass,
        "transition_c": result.transition_c,
        "rows": rows,
    }
    if result.marks:
        out["marks"] = result.marks
    return out


def _run_evolve(cfg: RunConfig, out: Path, resume: str | None, cfg_text: str) -> int:
    grid = cfg.make_grid()
    params = cfg.physics()
    integ = Integrator(grid, params)
    if resume:
        state, history = load_checkpoint(resume)
        if state.field.grid != grid:
            raise ConfigError("checkpoint grid does not match the configuration")
        records = history
        if state.status in (Status.FINISHED, Status.RUNNING):
            state.status = Status.RUNNING
    else:
        u0 = _initial_field(cfg, grid, params)
        state = new_state(u0, params, cfg.effective_dt())
        records = []

    verdict = classify_blowup(record(state.field, integ.ops, state.t), params)
    t_end = cfg.effective_t_end()
    interval = cfg.checkpoint_interval
    while state.status is Status.RUNNING:
        if interval > 0:
            state, records = integ.evolve(state, t_end, cfg.cadence,
                                          history=records, max_steps=interval)
            if state.status in (Status.RUNNING,):
                save_checkpoint(state, out / f"ckpt_{state.step_count:08d}.rnls", records)
        else:
            state, records = integ.evolve(state, t_end, cfg.cadence, history=records)
        if state.status is not Status.RUNNING:
            break

    write_series(records, out / "series.csv")
    save_checkpoint(state, out / "final.rnls", records)
    summary = {
        "kind": "evolve",
        "status": state.status.value,
        "t_final": state.t,
        "steps": state.step_count,
        "t_detect": state.detect_time,
        "initial_verdict": verdict.condition,
        "verdict_window": list(verdict.window) if verdict.window else None,
        "mass_initial": records[0].mass,
        "mass_final": records[-1].mass,
        "energy_initial": records[0].energy,
        "energy_final": records[-1].energy,
        "params": {"omega": cfg.omega, "gamma": cfg.gamma, "p": cfg.p,
                   "kappa": cfg.kappa},
    }
    write_summary(summary, out / "summary.json", cfg_text)
    if state.status is Status.RESOLUTION_LOST:
        return EXIT_NUMERICAL
    return EXIT_OK


def _run_groundstate(cfg: RunConfig, out: Path, cfg_text: str) -> int:
    grid = cfg.make_grid()
    params = cfg.physics()
    nl = params.nonlinearity
    lam = nl.lam if isinstance(nl, ConstantPower) else nl.lam_max
    if lam > 0:
        profile = solve_Q_radial(cfg.p, lam, cfg.n)
        profile.save(out / "profile_radial.txt")
        free_mass = profile.mass
    else:
        free_mass = None
    result = minimize_energy_constrained(params, cfg.c, grid, tau=cfg.tau,
                                         tol=cfg.gs_tol)
    state = new_state(result.field, params, cfg.effective_dt())
    save_checkpoint(state, out / "minimizer.rnls", [])
    summary = {
        "kind": "groundstate",
        "c": cfg.c,
        "energy": result.energy,
        "omega_multiplier": result.omega,
        "residual": result.residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "free_profile_mass": free_mass,
    }
    write_summary(summary, out / "summary.json", cfg_text)
    return EXIT_OK if result.converged else EXIT_NUMERICAL


def _run_sweep(cfg: RunConfig, out: Path, cfg_text: str, inhom: bool) -> int:
    grid = cfg.make_grid()
    params = cfg.physics()
    periods = cfg.t_periods if cfg.t_periods is not None else 3.0
    if inhom:
        result = inhomogeneous_threshold(params, cfg.c_list, grid, periods,
                                         cfg.dt, cfg.cadence, alpha=cfg.alpha,
                                         workers=cfg.workers)
    else:
        result = threshold_sweep(params, cfg.family, cfg.c_list, grid, periods,
                                 cfg.dt, cfg.cadence, alpha=cfg.alpha,
                                 workers=cfg.workers)
    for row in result.rows:
        write_series(row.records, out / f"series_c{row.c:g}.csv")
    write_summary(_sweep_summary(result), out / "summary.json", cfg_text)
    return EXIT_OK


def _run_stability(cfg: RunConfig, out: Path, cfg_text: str) -> int:
    grid = cfg.make_grid()
    params = cfg.physics()
    periods = cfg.t_periods if cfg.t_periods is not None else 5.0
    result = stability_run(params, cfg.c, cfg.delta, grid,
                           directions=cfg.directions, t_periods=periods,
                           dt=cfg.dt, samples_per_period=cfg.samples_per_period,
                           seed=cfg.seed, gs_tol=cfg.gs_tol,
                           stability_bound=cfg.stability_bound)
    with open(out / "stability_distances.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,distance,direction\n")
        for run in result.runs:
            for t, d in zip(run.times, run.distances):
                fh.write(f"{t:.17g},{d:.17g},{run.direction}\n")
    summary = {
        "kind": "stability",
        "c": cfg.c,
        "delta": cfg.delta,
        "verdict": result.verdict,
        "ground_state_energy": result.ground_state.energy,
        "ground_state_residual": result.ground_state.residual,
        "runs": [
            {"direction": r.direction, "sup_distance": r.sup_distance, "status": r.status}
            for r in result.runs
        ],
    }
    write_summary(summary, out / "summary.json", cfg_text)
    return EXIT_OK


def _run_vortex(cfg: RunConfig, out: Path, cfg_text: str) -> int:
    grid = cfg.make_grid()
    result = vortex_counterexample(grid, cfg.gamma, cfg.omega, cfg.K,
                                   cfg.a_exponent, range(cfg.m_min, cfg.m_max + 1))
    with open(out / "vortex.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("m,kinetic,trap,angular,interaction,energy,analytic_energy,tail\n")
        for r in result.rows:
            fh.write(
                f"{r.m},{r.kinetic:.17g},{r.trap:.17g},{r.angular:.17g},"
                f"{r.interaction:.17g},{r.energy:.17g},{r.analytic_energy:.17g},"
                f"{r.tail:.17g}\n"
            )
    summary = {
        "kind": "vortex",
        "gamma": cfg.gamma,
        "omega": cfg.omega,
        "K": cfg.K,
        "a": cfg.a_exponent,
        "slope_fit": result.slope_fit,
        "slope_expected": result.slope_expected,
        "monotone_decreasing": all(
            b.energy < a.energy for a, b in zip(result.rows, result.rows[1:])
        ),
    }
    write_summary(summary, out / "summary.json", cfg_text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rnls",
        description="Spectral simulator and diagnostics for the rotational NLS",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("groundstate", "evolve", "sweep", "stability", "vortex", "inhom"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out", required=True, help="output directory")
        if name == "evolve":
            p.add_argument("--resume", default=None, help="checkpoint to resume from")
    args = parser.parse_args(argv)

    t_start = time.perf_counter()
    try:
        cfg_text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        cfg = parse_config(cfg_text)
        if cfg.experiment != args.command:
            raise ConfigError(
                f"config says experiment = {cfg.experiment!r} but the "
                f"{args.command!r} subcommand was invoked"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective.cfg").write_text(cfg.to_text(), encoding="utf-8")
        if args.command == "evolve":
            code = _run_evolve(cfg, out, args.resume, cfg_text)
        elif args.command == "groundstate":
            code = _run_groundstate(cfg, out, cfg_text)
        elif args.command in ("sweep", "inhom"):
            code = _run_sweep(cfg, out, cfg_text, inhom=args.command == "inhom")
        elif args.command == "stability":
            code = _run_stability(cfg, out, cfg_text)
        else:
            code = _run_vortex(cfg, out, cfg_text)
        write_run_meta(out / "run_meta.txt", time.perf_counter() - t_start)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShootingError, ExperimentError, ResolutionError, ModelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, CheckpointError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
