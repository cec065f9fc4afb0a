"""Free energy, dissipation, and the per-record quantities written to CSV.

The entropy functional is

    F(u, w) = int u (ln u - 1) + 1/2 int w^-beta |grad w|^2

and along smooth solutions dF/dt = -D with

    D(u, w) = 4 int |grad sqrt(u)|^2 + beta/2 int u |grad w|^2 / w
              + delta int u (u - 1) ln u.

``0 ln 0`` is taken as 0. Negative powers of ``w`` are evaluated with ``w``
clamped below at ``EPS_W``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from haptotaxis.grid import Grid, gradient, integrate, lp_norm

if TYPE_CHECKING:
    from haptotaxis.model import Parameters, State

EPS_W = 1e-12

CSV_COLUMNS = (
    "t",
    "mass",
    "F",
    "D",
    "entropy",
    "u_min",
    "u_max",
    "w_max",
    "grad_w_l2",
    "u_dist_l2",
    "clip_mass",
)


def xlogx(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] * np.log(u[pos])
    return out


def _grad_sq(grid: Grid, f: np.ndarray) -> np.ndarray:
    return sum(g * g for g in gradient(grid, f))


def free_energy(grid: Grid, u: np.ndarray, w: np.ndarray, beta: float) -> float:
    return free_energy_terms(grid, u, w, beta)[0]


def free_energy_terms(grid: Grid, u: np.ndarray, w: np.ndarray, beta: float) -> tuple[float, float, float, bool]:
    """Return ``(F, entropy part, gradient part, clamped)``."""
    entropy_part = integrate(grid, xlogx(u) - u)
    clamped = bool(np.any(w < EPS_W))
    wc = np.maximum(w, EPS_W)
    grad_part = 0.5 * integrate(grid, wc ** (-beta) * _grad_sq(grid, w))
    return entropy_part + grad_part, entropy_part, grad_part, clamped


def dissipation(grid: Grid, u: np.ndarray, w: np.ndarray, beta: float, delta: float) -> float:
    u_pos = np.maximum(u, 0.0)
    wc = np.maximum(w, EPS_W)
    fisher = 4.0 * integrate(grid, _grad_sq(grid, np.sqrt(u_pos)))
    taxis = 0.5 * beta * integrate(grid, u_pos / wc * _grad_sq(grid, w))
    logistic = 0.0
    if delta:
        # u (u - 1) ln u, with the 0 ln 0 = 0 convention
        logistic = delta * integrate(grid, (u_pos - 1.0) * xlogx(u_pos))
    return fisher + taxis + logistic


def lyapunov_F(state: State, params: Parameters) -> float:
    return free_energy(state.grid, state.u, state.w, params.beta)


def dissipation_D(state: State, params: Parameters) -> float:
    return dissipation(state.grid, state.u, state.w, params.beta, params.delta)


def entropy(state: State) -> float:
    return integrate(state.grid, xlogx(state.u))


def mass(state: State) -> float:
    return integrate(state.grid, state.u)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    F: float
    D: float
    entropy: float
    u_min: float
    u_max: float
    w_max: float
    grad_w_l2: float
    u_dist_l2: float
    clip_mass: float
    saturated: bool = False

    def row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)


def record(state: State, params: Parameters, u_target: float | None = None, clip_mass: float = 0.0) -> DiagnosticsRecord:
    """Evaluate every diagnostic column for one snapshot.

    ``u_target`` is the predicted constant steady value of ``u``; when
    ``None`` the current mean is used.
    """
    grid, u, w = state.grid, state.u, state.w
    F, _, _, clamped = free_energy_terms(grid, u, w, params.beta)
    m = integrate(grid, u)
    target = m / grid.volume if u_target is None else u_target
    rec = DiagnosticsRecord(
        t=float(state.t),
        mass=m,
        F=F,
        D=dissipation(grid, u, w, params.beta, params.delta),
        entropy=integrate(grid, xlogx(u)),
        u_min=float(np.min(u)),
        u_max=float(np.max(u)),
        w_max=float(np.max(w)),
        grad_w_l2=float(np.sqrt(integrate(grid, _grad_sq(grid, w)))),
        u_dist_l2=lp_norm(grid, u - target, 2),
        clip_mass=float(clip_mass),
        saturated=clamped,
    )
    if not all(np.isfinite(v) for v in rec.row()):
        raise FloatingPointError(f"non-finite diagnostics at t={state.t}: {rec}")
    return rec


@dataclass
class LyapunovReport:
    max_increment: float
    max_residual: float
    tol: float
    checked_pairs: int
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def lyapunov_decay_check(records: Sequence[DiagnosticsRecord], tol: float | None = None) -> LyapunovReport:
    """Discrete form of ``dF/dt = -D <= 0`` over consecutive records.

    The residual on each interval is ``(F2 - F1)/(t2 - t1) + (D1 + D2)/2``.
    Intervals that start from a record whose gradient term was evaluated
    with a clamped ``w`` are skipped, and so is everything after it.
    """
    if len(records) < 2:
        raise ValueError("lyapunov_decay_check needs at least two records")
    if tol is None:
        tol = 1e-6 * (1.0 + abs(records[0].F))
    max_inc = 0.0
    max_res = 0.0
    pairs = 0
    for r1, r2 in zip(records[:-1], records[1:]):
        if r1.saturated or r2.saturated:
            break
        dt = r2.t - r1.t
        inc = r2.F - r1.F
        max_inc = max(max_inc, inc)
        max_res = max(max_res, abs(inc / dt + 0.5 * (r1.D + r2.D)))
        pairs += 1
    return LyapunovReport(max_inc, max_res, tol, pairs, max_inc <= tol)


@dataclass
class FitResult:
    model: str
    rate: float
    residual: float
    samples: int
    envelope_ok: bool | None = None
    first_violation: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def fit_decay(
    t: Sequence[float],
    y: Sequence[float],
    model: str = "exponential",
    beta: float | None = None,
    tail: float = 0.5,
    bound: Callable[[np.ndarray], np.ndarray] | None = None,
    min_samples: int = 3,
) -> FitResult:
    """Least-squares decay rate on the tail of a positive series.

    ``exponential`` fits ``ln y`` against ``t`` and returns minus the slope.
    ``polynomial`` needs ``beta > 1``; it fits ``y^(1-beta)`` against ``t``
    and returns the slope divided by ``beta - 1``, which is the ``lambda`` of
    ``y = (c + lambda (beta-1) t)^(-1/(beta-1))``.

    When ``bound`` is given the envelope ``y <= bound(t)`` is checked on
    every sample, not only the tail.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise ValueError("t and y must have the same length")
    if np.any(y <= 0):
        raise ValueError("fit_decay needs a strictly positive series")
    start = int(np.floor(len(t) * (1.0 - tail)))
    tt, yy = t[start:], y[start:]
    if len(tt) < min_samples:
        raise ValueError(f"fit_decay needs at least {min_samples} tail samples, got {len(tt)}")

    if model == "exponential":
        z = np.log(yy)
        scale = -1.0
    elif model == "polynomial":
        if beta is None or beta <= 1:
            raise ValueError("polynomial fit requires beta > 1")
        z = yy ** (1.0 - beta)
        scale = 1.0 / (beta - 1.0)
    else:
        raise ValueError(f"unknown decay model {model!r}")
    coef, res, *_ = np.polyfit(tt, z, 1, full=True)
    residual = float(np.sqrt(res[0] / len(tt))) if len(res) else 0.0
    out = FitResult(model, float(coef[0] * scale), residual, len(tt))
    if bound is not None:
        over = y > bound(t)
        out.envelope_ok = not bool(np.any(over))
        if not out.envelope_ok:
            out.first_violation = float(t[np.argmax(over)])
    return out
