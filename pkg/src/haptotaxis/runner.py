"""Scenario orchestration: run a configured mode, evaluate every enabled
invariant check, and write the CSV / JSON / checkpoint outputs."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from haptotaxis import steady
from haptotaxis.checkpoint import checkpoint_load, checkpoint_save
from haptotaxis.config import ScenarioConfig
from haptotaxis.diagnostics import CSV_COLUMNS, lyapunov_decay_check
from haptotaxis.fixedpoint import PicardReport, picard_iterate
from haptotaxis.integrator import StepConfig, Trajectory, run
from haptotaxis.model import InitialData, State, check_admissibility

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: bool
    measured: float | None = None
    threshold: float | None = None
    detail: str = ""

    @property
    def margin(self) -> float | None:
        if self.measured is None or self.threshold is None:
            return None
        return self.threshold - self.measured


@dataclass
class RunSummary:
    name: str
    mode: str
    config: dict
    admissibility: dict | None = None
    final: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    steps: int = 0
    wall_clock: float = 0.0

    def add(self, check: Check) -> None:
        if any(c.name == check.name for c in self.checks):
            raise ValueError(f"check {check.name!r} recorded twice")
        self.checks.append(check)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def ok(self, strict: bool = False) -> bool:
        return not self.failures and not (strict and self.warnings)

    def as_dict(self) -> dict:
        checks = []
        for c in self.checks:
            d = asdict(c)
            d["margin"] = c.margin
            checks.append(d)
        return {
            "name": self.name,
            "mode": self.mode,
            "config": self.config,
            "admissibility": self.admissibility,
            "final": self.final,
            "checks": checks,
            "failures": [c.name for c in self.failures],
            "warnings": self.warnings,
            "extra": self.extra,
            "steps": self.steps,
            "wall_clock_s": self.wall_clock,
        }


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_summary(summary: RunSummary, path: Path) -> None:
    path.write_text(json.dumps(_clean(summary.as_dict()), indent=2, default=_json_default) + "\n")


def write_csv(traj: Trajectory, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in traj.records:
            writer.writerow([repr(float(v)) for v in rec.row()])


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header}")
    data = np.array([[float(x) for x in r] for r in body]).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _initial(cfg: ScenarioConfig) -> tuple[InitialData, State | None]:
    if cfg.checkpoint is None:
        return cfg.initial_data(), None
    state = checkpoint_load(cfg.checkpoint, cfg.grid)
    # predictions refer to the original matrix w0 and the resumed density
    init = InitialData(state.grid, state.u.copy(), state.w0.copy(), cfg.gamma)
    return init, state


def simulation_checks(
    cfg: ScenarioConfig, init: InitialData, traj: Trajectory, summary: RunSummary
) -> None:
    """Evaluate the enabled invariant checks of ``cfg.checks`` on ``traj``."""
    ck = cfg.checks
    params = cfg.params
    grid = init.grid
    vol = grid.volume
    prediction = steady.predict(init, params)
    records = traj.records
    mass = traj.column("mass")
    M0 = mass[0] / vol

    if ck.mass:
        if params.delta > 0:
            bound = vol * max(1.0, M0)
            worst = float(np.max(mass))
            summary.add(Check("mass_bound", worst <= bound * (1 + ck.tol_mass), worst, bound * (1 + ck.tol_mass)))
        else:
            drift = float(np.max(np.abs(mass - mass[0])) / max(abs(mass[0]), 1e-300))
            summary.add(Check("mass_conservation", drift <= ck.tol_conservation, drift, ck.tol_conservation))

    if ck.lyapunov and len(records) >= 2:
        rep = lyapunov_decay_check(records)
        summary.add(
            Check(
                "lyapunov_monotone",
                rep.passed,
                rep.max_increment,
                rep.tol,
                f"max |dF/dt + D| = {rep.max_residual:.3e} over {rep.checked_pairs} intervals",
            )
        )

    if ck.energy_bounds:
        F0 = records[0].F
        F = traj.column("F")
        c4 = max(vol, abs(F0))
        worst = float(np.max(np.abs(F)))
        summary.add(Check("free_energy_bound", worst <= c4 + ck.tol_bounds, worst, c4 + ck.tol_bounds))
        ent_bound = F0 + vol * max(1.0, M0) + ck.tol_bounds
        worst = float(np.max(traj.column("entropy")))
        summary.add(Check("entropy_bound", worst <= ent_bound, worst, ent_bound))

    if ck.w_monotone:
        worst = 0.0
        for s1, s2 in zip(traj.states[:-1], traj.states[1:]):
            worst = max(worst, float(np.max(s2.w - s1.w)))
        w_ok = worst <= 0 and all(float(np.min(s.w)) > 0 for s in traj.states)
        summary.add(Check("w_monotone_positive", w_ok, worst, 0.0))

    if prediction.lam is not None:
        lam = prediction.lam
        if ck.floor:
            floor = lam - ck.tol_floor
            worst = float(np.min(traj.column("u_min")))
            # report measured as the deficit below the floor so that margin > 0 means pass
            summary.add(Check("positivity_floor", worst >= floor, floor - worst, 0.0, f"min u = {worst:.6g}, lambda = {lam:.6g}"))
        if ck.envelope:
            env = steady.rate_envelope_check(traj, prediction, ck.tol_env, ck.fit_tol)
            summary.extra["envelope"] = env.as_dict()
            summary.add(
                Check(
                    "w_envelope",
                    env.w_envelope_ok,
                    env.max_ratio,
                    1 + ck.tol_env,
                    "" if env.first_violation is None else f"first violation at t={env.first_violation:g}",
                )
            )
            if env.w_fit is not None:
                need = lam * (1 - ck.fit_tol)
                summary.add(Check("w_rate", bool(env.w_rate_ok), -env.w_fit.rate, -need, f"fitted {env.w_fit.rate:.6g} >= {need:.6g}"))
            if env.u_fit is not None:
                need = env.u_rate_pred * (1 - ck.fit_tol)
                summary.add(Check("u_rate", bool(env.u_rate_ok), -env.u_fit.rate, -need, f"fitted {env.u_fit.rate:.6g} >= {need:.6g}"))
            summary.warnings += env.notes
    elif ck.floor or ck.envelope:
        summary.warnings.append("gamma = 0: positivity floor and rate envelopes not evaluated")

    if ck.steady:
        last = records[-1]
        dist = last.u_dist_l2
        ok = dist < ck.tol_steady and last.w_max < ck.tol_steady
        summary.add(
            Check("steady_state", ok, max(dist, last.w_max), ck.tol_steady, f"u* = {prediction.u_star} ({prediction.u_star_value:.6g})")
        )
        target = State(grid, np.full(grid.shape, prediction.u_star_value), np.zeros(grid.shape), init.w0, np.zeros(grid.shape))
        r1, r2 = steady.stationary_residual(target, params)
        summary.add(Check("stationary_residual", max(r1, r2) <= 1e-12, max(r1, r2), 1e-12))


def _simulate(cfg: ScenarioConfig, out: Path | None, workers: int, summary: RunSummary) -> Trajectory:
    init, start = _initial(cfg)
    report = check_admissibility(init, cfg.params)
    summary.admissibility = report.as_dict()
    checked = cfg.checks.admissibility
    if checked:
        summary.add(Check("admissibility", report.passed, report.compatibility_residual, report.compatibility_tol))
        if not report.passed:
            return None
    else:
        summary.warnings.append("run unchecked: admissibility not enforced")

    step_cfg = StepConfig(**{**asdict(cfg.step), "workers": workers})
    observers = []
    every = cfg.output.checkpoint_every
    if out is not None and every > 0:
        ckpt = out / f"{cfg.output.name}_checkpoint.bin"
        counter = {"n": 0}

        def save(state, rec):
            counter["n"] += 1
            if counter["n"] % every == 0:
                checkpoint_save(state, ckpt)

        observers.append(save)

    traj = run(init, cfg.params, step_cfg, observers, checked=False, start=start)
    summary.steps = traj.steps
    last = traj.records[-1]
    summary.final = {**last.as_dict(), "steady_at": traj.steady_at, "clip_mass_total": traj.clip_mass}
    simulation_checks(cfg, init, traj, summary)
    if out is not None:
        write_csv(traj, out / f"{cfg.output.name}_diagnostics.csv")
        if every > 0:
            checkpoint_save(traj.final, out / f"{cfg.output.name}_checkpoint.bin")
    return traj


def picard_checks(cfg: ScenarioConfig, init: InitialData, rep: PicardReport, summary: RunSummary, workers: int = 1) -> None:
    pc = cfg.picard
    summary.add(Check("picard_converged", rep.converged, float(rep.iterates), float(pc.max_iter)))
    summary.add(Check("picard_x_set", rep.in_x_set, float(len(rep.violations)), 0.0, "; ".join(rep.summary()["violations"])))
    bound = 2 * pc.tol * (1 + rep.final_U.sup())
    summary.add(Check("picard_fixed_point", rep.fixed_point_residual <= bound, rep.fixed_point_residual, bound))
    if pc.compare_integrator:
        dt = pc.T / pc.steps
        step_cfg = StepConfig(
            dt_max=dt, t_end=pc.T, record_every=1, steady_threshold=None, workers=workers, cfl=1.0
        )
        traj = run(init, cfg.params, step_cfg, checked=False)
        diff = _trajectory_gap(traj, rep)
        summary.add(Check("picard_vs_integrator", diff <= 5 * dt, diff, 5 * dt))


def _trajectory_gap(traj: Trajectory, rep: PicardReport) -> float:
    times = rep.final_u.times
    if len(traj.states) != len(times) or np.max(np.abs(traj.times - times)) > 1e-9 * times[-1]:
        raise ValueError("integrator and Picard time grids differ")
    return float(max(np.max(np.abs(s.u - u)) for s, u in zip(traj.states, rep.final_u.values)))


def write_picard_csv(rep: PicardReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("iterate", "residual", "contraction_ratio"))
        for i, r in enumerate(rep.residuals, start=1):
            ratio = r / rep.residuals[i - 2] if i > 1 and rep.residuals[i - 2] > 0 else float("nan")
            writer.writerow((i, repr(float(r)), repr(float(ratio))))


def _picard(cfg: ScenarioConfig, out: Path | None, workers: int, summary: RunSummary) -> PicardReport:
    init = cfg.initial_data()
    report = check_admissibility(init, cfg.params)
    summary.admissibility = report.as_dict()
    if cfg.checks.admissibility:
        summary.add(Check("admissibility", report.passed, report.compatibility_residual, report.compatibility_tol))
    pc = cfg.picard
    rep = picard_iterate(init, cfg.params, pc.T, pc.steps, pc.sigma, pc.max_iter, pc.tol, workers)
    summary.extra["picard"] = rep.summary()
    summary.steps = rep.iterates
    summary.final = {"U_sup": rep.final_U.sup(), "u_min": float(np.min(rep.final_u.values))}
    picard_checks(cfg, init, rep, summary, workers)
    if out is not None:
        write_picard_csv(rep, out / f"{cfg.output.name}_picard.csv")
    return rep


def run_scenario(cfg: ScenarioConfig, out: str | Path | None = None, workers: int = 1, strict: bool = False):
    """Execute ``cfg`` and return ``(summary, result)``.

    ``result`` is the trajectory (simulate) or the Picard report (picard).
    Outputs go to ``out`` (defaulting to ``cfg.output.dir``) unless ``out``
    is ``False``.
    """
    if cfg.mode == "verify-all":
        raise ValueError("verify-all is dispatched by haptotaxis.acceptance.verify_all")
    out_dir = None
    if out is not False:
        out_dir = Path(out if out is not None else cfg.output.dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    summary = RunSummary(cfg.output.name, cfg.mode, cfg.echo())
    t0 = time.perf_counter()
    if cfg.mode == "simulate":
        result = _simulate(cfg, out_dir, workers, summary)
    else:
        result = _picard(cfg, out_dir, workers, summary)
    summary.wall_clock = time.perf_counter() - t0
    if strict and summary.warnings:
        summary.extra["strict"] = "warnings treated as failures"
    if out_dir is not None:
        write_summary(summary, out_dir / f"{cfg.output.name}_summary.json")
        if cfg.output.plot and cfg.mode == "simulate" and result is not None:
            from haptotaxis.plotting import plot_run

            plot_run(out_dir / f"{cfg.output.name}_diagnostics.csv", cfg, out_dir)
    for c in summary.failures:
        log.warning("%s: check %s failed (measured %s, threshold %s) %s", cfg.output.name, c.name, c.measured, c.threshold, c.detail)
    return summary, result
