"""Time stepping for the density ``u`` with the matrix ``w`` in closed form.

``w`` solves a pointwise ODE driven by the accumulated exposure
``Uacc = int_0^t u``:

    beta = 1:  w = w0 exp(-Uacc)
    beta > 1:  w = (w0^(1-beta) + (beta-1) Uacc)^(1/(1-beta))

so only ``u`` needs a spatial discretization. The default ``flux``
formulation updates ``u`` through conservative face fluxes of
``grad u - u grad w`` (zero on the wall), which keeps the mass exactly
constant when ``delta = 0``. The ``v`` formulation advances
``v = u exp(-w)`` under homogeneous Neumann data instead and is kept for
cross-validation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from haptotaxis import steady
from haptotaxis.diagnostics import DiagnosticsRecord, record
from haptotaxis.grid import (
    advective_div,
    gradient,
    integrate,
    laplacian_neumann,
    solve_shifted_laplacian,
)
from haptotaxis.model import InitialData, Parameters, State, check_admissibility

log = logging.getLogger(__name__)

EPS_VEL = 1e-12
SCHEMES = ("imex_euler", "explicit_euler")
FORMULATIONS = ("flux", "v")


class SolverError(RuntimeError):
    pass


class CFLViolation(SolverError):
    pass


class InvariantViolation(SolverError):
    pass


class AdmissibilityError(ValueError):
    pass


@dataclass
class StepConfig:
    dt_max: float = 1e-3
    cfl: float = 0.9
    t_end: float = 1.0
    scheme: str = "imex_euler"
    record_every: int = 10
    formulation: str = "flux"
    upwind: bool = False
    steady_threshold: float | None = 1e-9
    w_threshold: float = 1e-6
    clip_tol: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    states: list[State] = field(default_factory=list)
    records: list[DiagnosticsRecord] = field(default_factory=list)
    steps: int = 0
    clip_mass: float = 0.0
    steady_at: float | None = None
    checked: bool = True

    def append(self, state: State, rec: DiagnosticsRecord) -> None:
        if self.records and not rec.t > self.records[-1].t:
            raise InvariantViolation("recorded times must be strictly increasing")
        self.states.append(state)
        self.records.append(rec)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def final(self) -> State:
        return self.states[-1]


def w_closed_form(w0: np.ndarray, Uacc: np.ndarray, beta: float) -> np.ndarray:
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    if beta == 1:
        return w0 * np.exp(-Uacc)
    return (w0 ** (1.0 - beta) + (beta - 1.0) * Uacc) ** (1.0 / (1.0 - beta))


def cfl_dt(state: State, params: Parameters, config: StepConfig) -> float:
    """Largest step allowed by the explicit parts of ``config.scheme``."""
    grid = state.grid
    dt = config.dt_max
    for hh, gw in zip(grid.h, gradient(grid, state.w)):
        dt = min(dt, config.cfl * hh / (float(np.max(np.abs(gw))) + EPS_VEL))
    u_inf = float(np.max(np.abs(state.u)))
    # e^w v w^beta equals u w^beta
    uptake = float(np.max(np.abs(state.u * state.w**params.beta)))
    dt = min(dt, config.cfl / (params.delta * (1.0 + 2.0 * u_inf) + uptake + EPS_VEL))
    if config.scheme == "explicit_euler":
        dt = min(dt, config.cfl * min(grid.h) ** 2 / (2 * grid.dim))
    return dt


def _stability_limit(state: State, params: Parameters, scheme: str) -> float:
    return cfl_dt(state, params, StepConfig(dt_max=math.inf, cfl=1.0, scheme=scheme))


def step(
    state: State,
    params: Parameters,
    dt: float,
    scheme: str = "imex_euler",
    formulation: str = "flux",
    upwind: bool = False,
    workers: int = 1,
    check_cfl: bool = True,
) -> tuple[State, float]:
    """Advance one step of size ``dt``; returns the new state and the mass
    removed by clipping negative densities."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if check_cfl and dt > _stability_limit(state, params, scheme) * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:g} exceeds the stability limit at t={state.t:g}")
    grid, u, w = state.grid, state.u, state.w
    implicit = scheme == "imex_euler"

    if formulation == "flux":
        rhs = -advective_div(grid, u, w, upwind) + params.delta * u * (1.0 - u)
        if implicit:
            u_star = solve_shifted_laplacian(grid, u + dt * rhs, dt, workers)
        else:
            u_star = u + dt * (laplacian_neumann(grid, u) + rhs)
        v_new = None
    elif formulation == "v":
        ew = np.exp(w)
        v = u / ew
        adv = sum(gv * gw for gv, gw in zip(gradient(grid, v), gradient(grid, w)))
        rhs = adv + u * v * w**params.beta + params.delta * v * (1.0 - u)
        if implicit:
            v_new = solve_shifted_laplacian(grid, v + dt * rhs, dt, workers)
        else:
            v_new = v + dt * (laplacian_neumann(grid, v) + rhs)
        u_star = v_new * ew
    else:
        raise ValueError(f"unknown formulation {formulation!r}")

    if not np.all(np.isfinite(u_star)):
        raise SolverError(f"non-finite density after step at t={state.t:g}")
    clipped = 0.0
    if np.any(u_star < 0):
        clipped = integrate(grid, np.maximum(-u_star, 0.0))
        u_star = np.maximum(u_star, 0.0)
        if v_new is not None:
            v_new = np.maximum(v_new, 0.0)

    Uacc = state.Uacc + 0.5 * dt * (u + u_star)
    w_new = w_closed_form(state.w0, Uacc, params.beta)
    u_new = u_star if v_new is None else v_new * np.exp(w_new)
    return state.evolve(u=u_new, w=w_new, Uacc=Uacc, t=state.t + dt), clipped


Observer = Callable[[State, DiagnosticsRecord], None]


def run(
    init: InitialData,
    params: Parameters,
    config: StepConfig,
    observers: Iterable[Observer] = (),
    checked: bool = True,
    start: State | None = None,
) -> Trajectory:
    """Integrate from ``init`` to ``config.t_end`` or until a steady state is
    detected, recording diagnostics every ``config.record_every`` steps and
    at the final time.

    ``start`` resumes from a saved state instead of ``init`` (which still
    supplies the predictions and the admissibility check).
    """
    if checked:
        report = check_admissibility(init, params)
        if not report.passed:
            raise AdmissibilityError(f"initial data not admissible: {report.as_dict()}")
    observers = list(observers)
    prediction = steady.predict(init, params)
    u_target = prediction.u_star_value
    grid = init.grid
    clip_budget = config.clip_tol * grid.volume

    traj = Trajectory(checked=checked)
    state = State.initial(init) if start is None else start

    def emit(s: State) -> None:
        rec = record(s, params, u_target, traj.clip_mass)
        traj.append(s, rec)
        for obs in observers:
            obs(s, rec)

    emit(state)
    t_end = config.t_end
    t_eps = 1e-12 * max(1.0, t_end)
    steps_since = 0
    while state.t < t_end - t_eps:
        dt = min(cfl_dt(state, params, config), t_end - state.t)
        state, clipped = step(
            state, params, dt, config.scheme, config.formulation, config.upwind, config.workers, check_cfl=False
        )
        traj.steps += 1
        steps_since += 1
        if clipped:
            traj.clip_mass += clipped
            if traj.clip_mass > clip_budget:
                raise InvariantViolation(
                    f"clipped mass {traj.clip_mass:.3e} exceeds {clip_budget:.3e} at t={state.t:g}; reduce dt"
                )
        last = state.t >= t_end - t_eps
        if steps_since >= config.record_every or last:
            steps_since = 0
            previous = traj.states[-1]
            emit(state)
            if (
                config.steady_threshold is not None
                and not last
                and steady.detect_steady([previous, state], config.steady_threshold, config.w_threshold)
            ):
                traj.steady_at = state.t
                log.info("steady state detected at t=%g", state.t)
                break
    return traj
