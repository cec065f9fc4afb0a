"""Reference scenarios and the acceptance criteria evaluated on them.

Shared by ``tests/test_acceptance.py`` and the ``verify-all`` subcommand.
Each criterion returns a ``Criterion`` holding one line per measured
quantity, so a report can print pass/fail per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from haptotaxis import steady
from haptotaxis.config import ScenarioConfig, parse_config
from haptotaxis.diagnostics import fit_decay, lyapunov_decay_check
from haptotaxis.fixedpoint import picard_iterate
from haptotaxis.grid import (
    Grid,
    advective_div,
    gradient,
    integrate,
    laplacian_neumann,
)
from haptotaxis.integrator import StepConfig, Trajectory, run
from haptotaxis.model import InitialData, Parameters, State
from haptotaxis.runner import RunSummary, _clean, run_scenario, write_csv

_BASE = """
grid: {{extents: [1.0], n: [{n}]}}
params: {{delta: {delta}, beta: {beta}}}
initial:
  u0: {{profile: cosine-bump, base: 1.0, amplitude: 0.5}}
  w0: {{profile: constant, value: 1.0}}
  gamma: 0.5
step: {{dt_max: {dt}, t_end: {t_end}, record_every: {every}, scheme: imex_euler}}
checks: {{steady: {steady}}}
output: {{name: {name}}}
"""

SCENARIOS = {
    "S1": _BASE.format(n=256, delta=0.0, beta=1.0, dt=1e-4, t_end=40.0, every=100, name="S1", steady="true"),
    "S2": _BASE.format(n=256, delta=1.0, beta=1.0, dt=1e-4, t_end=40.0, every=100, name="S2", steady="true"),
    "S3": _BASE.format(n=64, delta=1.0, beta=2.0, dt=1e-3, t_end=200.0, every=100, name="S3", steady="false"),
    "FP1": """
mode: picard
grid: {extents: [1.0], n: [16]}
params: {delta: 0.0, beta: 2.0}
initial:
  u0: {profile: cosine-bump, base: 1.0, amplitude: 0.5}
  w0: {profile: constant, value: 1.0}
  gamma: 0.5
picard: {T: 0.05, steps: 64, max_iter: 50, tol: 1.0e-9}
output: {name: FP1}
""",
}

LAMBDA_S2 = 0.5 * math.exp(-1.0)


def scenario(name: str) -> ScenarioConfig:
    return parse_config(SCENARIOS[name])


@dataclass
class Line:
    label: str
    passed: bool
    measured: float
    threshold: float
    relation: str = "<="

    def __str__(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.label}: {self.measured:.6g} {self.relation} {self.threshold:.6g}"


@dataclass
class Criterion:
    number: int
    title: str
    lines: list[Line] = field(default_factory=list)

    def check(self, label: str, measured: float, threshold: float, relation: str = "<=") -> None:
        ok = {"<=": measured <= threshold, ">=": measured >= threshold, "<": measured < threshold}[relation]
        self.lines.append(Line(label, bool(ok), float(measured), float(threshold), relation))

    @property
    def passed(self) -> bool:
        return bool(self.lines) and all(line.passed for line in self.lines)

    def report(self) -> str:
        head = f"criterion {self.number} ({self.title}): {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + [f"    {line}" for line in self.lines])

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "lines": [vars(line) for line in self.lines],
        }


def run_simulation(name: str, out: Path | bool = False, workers: int = 1) -> tuple[RunSummary, Trajectory]:
    return run_scenario(scenario(name), out, workers)


def _short(name: str, t_end: float, dt: float | None = None) -> tuple[InitialData, Parameters, StepConfig]:
    cfg = scenario(name)
    step = StepConfig(
        dt_max=dt or cfg.step.dt_max,
        t_end=t_end,
        record_every=cfg.step.record_every,
        steady_threshold=None,
    )
    return cfg.initial_data(), cfg.params, step


# -- criterion 1 -------------------------------------------------------------


def mass_bound(s1: Trajectory, s2: Trajectory) -> Criterion:
    c = Criterion(1, "mass bound and conservation")
    grid = s2.states[0].grid
    m2 = s2.column("mass")
    M0 = m2[0] / grid.volume
    c.check("S2 max mass / (|Omega| max(1, M0))", float(np.max(m2)) / (grid.volume * max(1.0, M0)), 1 + 1e-6)
    m1 = s1.column("mass")
    c.check("S1 relative mass drift", float(np.max(np.abs(m1 - m1[0])) / m1[0]), 1e-10)
    return c


# -- criterion 2 -------------------------------------------------------------


def lyapunov_refinement(name: str, t_end: float = 0.5, dt: float = 1e-4) -> tuple[float, float]:
    """Worst residual ``|dF/dt + D|`` on ``[0, t_end]`` at ``dt`` and ``dt/2``,
    with the record cadence fixed in steps."""
    out = []
    for step_dt in (dt, dt / 2):
        init, params, step = _short(name, t_end, step_dt)
        traj = run(init, params, step)
        out.append(lyapunov_decay_check(traj.records).max_residual)
    return out[0], out[1]


def lyapunov(s1: Trajectory, s2: Trajectory, refine: bool = True) -> Criterion:
    c = Criterion(2, "Lyapunov monotonicity")
    for label, traj in (("S1", s1), ("S2", s2)):
        rep = lyapunov_decay_check(traj.records)
        c.check(f"{label} max F increment (tol 1e-6 (1+|F0|))", rep.max_increment, rep.tol)
        if refine:
            r_dt, r_half = lyapunov_refinement(label)
            c.check(f"{label} residual ratio dt -> dt/2 ({r_dt:.3e} -> {r_half:.3e})", r_dt / r_half, 1.7, ">=")
    return c


# -- criterion 3 -------------------------------------------------------------


def positivity_floor(s2: Trajectory) -> Criterion:
    c = Criterion(3, "positivity floor")
    lam = steady.predict(_init_of(s2, 0.5), Parameters(delta=1.0)).lam
    c.check("lambda = min(1, gamma) exp(-|w0|)", abs(lam - 0.18394), 5e-6)
    c.check("S2 min u over all records", float(np.min(s2.column("u_min"))), lam - 1e-3, ">=")
    return c


def _init_of(traj: Trajectory, gamma: float) -> InitialData:
    s = traj.states[0]
    return InitialData(s.grid, s.u, s.w0, gamma)


# -- criterion 4 -------------------------------------------------------------


def homogeneous_ode_oracle(delta: float, beta: float, t_end: float, dt: float, u0: float = 1.0, w0: float = 1.0):
    """Explicit Euler on the spatially homogeneous reduction
    ``u' = delta u (1 - u)``, ``w' = -w^beta u``."""
    u, w = u0, w0
    steps = int(round(t_end / dt))
    for _ in range(steps):
        u, w = u + dt * delta * u * (1 - u), w - dt * w**beta * u
    return u, w


def homogeneous_run(beta: float, t_end: float, dt: float = 1e-3) -> Trajectory:
    grid = Grid((1.0,), (16,))
    init = InitialData(grid, np.ones(16), np.ones(16), 1.0)
    step = StepConfig(dt_max=dt, t_end=t_end, record_every=100, steady_threshold=None)
    return run(init, Parameters(delta=1.0, beta=beta), step)


def exponential_decay(s2: Trajectory) -> Criterion:
    c = Criterion(4, "exponential decay of w (beta = 1)")
    t = s2.times
    w_max = s2.column("w_max")
    ratio = w_max / np.exp(-LAMBDA_S2 * t)
    c.check("S2 max w_max(t) / exp(-lambda t)", float(np.max(ratio)), 1.05)
    fit = fit_decay(t, w_max, "exponential")
    c.check("S2 fitted tail rate of w_max", fit.rate, 0.9 * LAMBDA_S2, ">=")

    dt = 1e-3
    traj = homogeneous_run(1.0, 1.0, dt)
    _, w_oracle = homogeneous_ode_oracle(1.0, 1.0, 1.0, dt / 1000)
    w_num = float(np.max(traj.final.w))
    c.check("homogeneous |w(1) - oracle|", abs(w_num - w_oracle), 1e-6)
    c.check("homogeneous |w(1) - exp(-1)|", abs(w_num - math.exp(-1.0)), 1e-6)
    c.check("homogeneous max |u - 1|", float(np.max(np.abs(traj.final.u - 1.0))), 1e-8, "<")
    return c


# -- criterion 5 -------------------------------------------------------------


def steady_states(s1: Trajectory, s2: Trajectory) -> Criterion:
    c = Criterion(5, "steady state")
    last = s2.records[-1]
    c.check("S2 final |u - 1|_L2", last.u_dist_l2, 1e-3, "<")
    c.check("S2 final max w", last.w_max, 1e-3, "<")
    c.check("S2 final time", last.t, 40.0)
    grid = s2.states[0].grid
    zero = np.zeros(grid.shape)
    for delta in (0.0, 1.0):
        target = State(grid, np.ones(grid.shape), zero, np.ones(grid.shape), zero)
        r1, r2 = steady.stationary_residual(target, Parameters(delta=delta))
        c.check(f"stationary residual at (1, 0), delta={delta:g}", max(r1, r2), 1e-12)
    last = s1.records[-1]
    c.check("S1 final |u - mean u0|_L2", last.u_dist_l2, 1e-3, "<")
    return c


# -- criterion 6 -------------------------------------------------------------


def polynomial_decay(s3: Trajectory) -> Criterion:
    c = Criterion(6, "polynomial decay of w (beta = 2)")
    lam = LAMBDA_S2
    t = s3.times
    w_max = s3.column("w_max")
    c.check("S3 final time", t[-1], 200.0, ">=")
    c.check("S3 max w_max(t) (1 + lambda t)", float(np.max(w_max * (1 + lam * t))), 1.05)
    fit = fit_decay(t, w_max, "polynomial", beta=2.0)
    c.check("S3 fitted lambda from slope of 1/w_max", fit.rate, 0.9 * lam, ">=")
    traj = homogeneous_run(2.0, 5.0)
    err = max(float(np.max(np.abs(s.w - 1.0 / (1.0 + s.t)))) for s in traj.states)
    c.check("homogeneous max |w - 1/(1+t)|", err, 1e-12)
    return c


# -- criterion 7 -------------------------------------------------------------


def picard(sweep: tuple[float, ...] = (0.05, 0.2, 0.8, 3.2)) -> Criterion:
    c = Criterion(7, "Picard construction")
    cfg = scenario("FP1")
    init = cfg.initial_data()
    pc = cfg.picard
    rep = picard_iterate(init, cfg.params, pc.T, pc.steps, pc.sigma, pc.max_iter, pc.tol)
    c.check("FP1 converged (1 = yes)", float(rep.converged), 1.0, ">=")
    c.check("FP1 iterations", rep.iterates, 12)
    c.check("FP1 max successive residual ratio (strict decrease)", max(rep.contraction_ratios, default=0.0), 1.0, "<")
    c.check("FP1 X-set violations", len(rep.violations), 0)

    dt = pc.T / pc.steps
    step = StepConfig(dt_max=dt, t_end=pc.T, record_every=1, steady_threshold=None, cfl=1.0)
    traj = run(init, cfg.params, step)
    gap = max(float(np.max(np.abs(s.u - u))) for s, u in zip(traj.states, rep.final_u.values))
    c.check("FP1 |u_picard - u_integrator|_inf over [0, T]", gap, 5 * dt)

    ratios = []
    for T in sweep:
        r = picard_iterate(init, cfg.params, T, pc.steps, None, pc.max_iter, pc.tol)
        ratios.append(r.contraction)
    increasing = all(b > a for a, b in zip(ratios[:-1], ratios[1:]))
    c.check(
        "contraction ratio increasing over T = " + ", ".join(f"{T:g}" for T in sweep) + " (" + ", ".join(f"{r:.3g}" for r in ratios) + ")",
        float(increasing),
        1.0,
        ">=",
    )
    return c


# -- criterion 8 -------------------------------------------------------------


def oracle_instance() -> tuple[InitialData, Parameters]:
    """Eight cells on (0, 2) with nonuniform u0 and w0, delta = 1, beta = 1."""
    grid = Grid((2.0,), (8,))
    (x,) = grid.mesh()
    u0 = 1.0 + 0.25 * np.cos(np.pi * x / 2)
    w0 = 1.0 + 0.5 * np.cos(np.pi * x / 2)
    return InitialData(grid, u0, w0, 0.0), Parameters(delta=1.0, beta=1.0)


def oracle_state(scheme: str, dt: float, t_end: float = 0.1) -> State:
    init, params = oracle_instance()
    step = StepConfig(dt_max=dt, t_end=t_end, record_every=10**9, scheme=scheme, steady_threshold=None, cfl=1.0)
    return run(init, params, step).final


def oracle_equivalence() -> Criterion:
    c = Criterion(8, "oracle equivalence")
    ref = oracle_state("explicit_euler", 1e-6)
    errs = []
    for dt in (1e-3, 5e-4):
        s = oracle_state("imex_euler", dt)
        errs.append(max(float(np.max(np.abs(s.u - ref.u))), float(np.max(np.abs(s.w - ref.w)))))
    c.check("L_inf difference at t=0.1, dt=1e-3", errs[0], 1e-4)
    ratio = errs[0] / errs[1]
    c.check("error ratio dt / (dt/2) lower", ratio, 1.7, ">=")
    c.check("error ratio dt / (dt/2) upper", ratio, 2.3)
    return c


# -- criterion 9 -------------------------------------------------------------


def operator_properties() -> Criterion:
    c = Criterion(9, "operator unit properties")
    rng = np.random.default_rng(12345)
    for grid in (Grid((1.0,), (37,)), Grid((2.0, 1.0), (24, 17))):
        f = rng.standard_normal(grid.shape)
        g = rng.standard_normal(grid.shape)
        u = rng.random(grid.shape)
        lap = laplacian_neumann(grid, f)
        scale = float(np.max(np.abs(f)))
        c.check(f"{grid.dim}D |int lap f| / |f|_inf", abs(integrate(grid, lap)) / scale, 1e-12)
        adv = advective_div(grid, u, f)
        hmin = min(grid.h)
        c.check(f"{grid.dim}D |int div(u grad w)| h / (|u| |w|)", abs(integrate(grid, adv)) * hmin / (np.max(u) * scale), 1e-12)
        lhs = integrate(grid, laplacian_neumann(grid, f) * g)
        rhs = integrate(grid, f * laplacian_neumann(grid, g))
        c.check(f"{grid.dim}D Laplacian symmetry defect", abs(lhs - rhs) / max(abs(lhs), 1.0), 1e-10)

    def errors(n: int) -> tuple[float, float]:
        grid = Grid((1.0,), (n,))
        (x,) = grid.mesh()
        f = np.cos(np.pi * x)
        e_lap = float(np.max(np.abs(laplacian_neumann(grid, f) + np.pi**2 * f)))
        # interior cells only for the gradient (boundary cells are one-sided)
        e_grad = float(np.max(np.abs(gradient(grid, x**3)[0][1:-1] - 3 * x[1:-1] ** 2)))
        return e_lap, e_grad

    (l1, g1), (l2, g2) = errors(32), errors(64)
    c.check("Laplacian error ratio h -> h/2", l1 / l2, 3.5, ">=")
    c.check("gradient interior error ratio h -> h/2", g1 / g2, 3.5, ">=")
    return c


# -- criterion 10 ------------------------------------------------------------


def determinism(tmp: Path, name: str = "S2", t_end: float = 2.0) -> Criterion:
    c = Criterion(10, "determinism")
    cfg = scenario(name)
    cfg.step.t_end = t_end
    cfg.checks.steady = False
    blobs = []
    for i, workers in enumerate((1, 1, 2)):
        out = Path(tmp) / f"det_{i}"
        run_scenario(cfg, out, workers)
        blobs.append((out / f"{cfg.output.name}_diagnostics.csv").read_bytes())
    c.check("reruns with identical bytes (1 thread)", float(blobs[0] == blobs[1]), 1.0, ">=")
    c.check("rerun with 2 threads identical bytes", float(blobs[0] == blobs[2]), 1.0, ">=")
    return c


def verify_all(out: str | Path, workers: int = 1, refine: bool = True) -> tuple[list[Criterion], list[RunSummary]]:
    """Run every reference scenario, write one summary per scenario, and a
    roll-up ``verify_all_summary.json`` listing each criterion."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    trajs = {}
    for name in ("S1", "S2", "S3", "FP1"):
        summary, result = run_scenario(scenario(name), out, workers)
        summaries.append(summary)
        trajs[name] = result
    s1, s2, s3 = trajs["S1"], trajs["S2"], trajs["S3"]
    criteria = [
        mass_bound(s1, s2),
        lyapunov(s1, s2, refine),
        positivity_floor(s2),
        exponential_decay(s2),
        steady_states(s1, s2),
        polynomial_decay(s3),
        picard(),
        oracle_equivalence(),
        operator_properties(),
        determinism(out / "determinism"),
    ]
    rollup = {
        "scenarios": {s.name: {"passed": s.ok(), "failures": [c.name for c in s.failures]} for s in summaries},
        "criteria": [c.as_dict() for c in criteria],
        "passed": all(c.passed for c in criteria) and all(s.ok() for s in summaries),
    }
    (out / "verify_all_summary.json").write_text(json.dumps(_clean(rollup), indent=2) + "\n")
    return criteria, summaries


__all__ = [
    "SCENARIOS",
    "Criterion",
    "scenario",
    "run_simulation",
    "mass_bound",
    "lyapunov",
    "positivity_floor",
    "exponential_decay",
    "steady_states",
    "polynomial_decay",
    "picard",
    "oracle_equivalence",
    "operator_properties",
    "determinism",
    "verify_all",
    "write_csv",
]
