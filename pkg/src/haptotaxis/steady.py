"""Steady states, predicted asymptotic rates and the checks built on them.

Constant-in-space stationary pairs are ``(0, w~)`` and ``(k, 0)`` with
``k = 1`` when ``delta > 0``; for ``delta = 0`` mass conservation picks
``k`` as the initial mean. With ``u0 >= gamma > 0`` the density stays above
``lambda = min(1, gamma) exp(-|w0|_inf)``, which drives the decay of ``w``:
exponential at rate ``lambda`` for ``beta = 1`` and like
``(|w0|^(1-beta) + lambda (beta-1) t)^(-1/(beta-1))`` for ``beta > 1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from haptotaxis.diagnostics import FitResult, fit_decay
from haptotaxis.grid import advective_div, integrate, laplacian_neumann, lp_norm

if TYPE_CHECKING:
    from haptotaxis.integrator import Trajectory
    from haptotaxis.model import InitialData, Parameters, State


@dataclass(frozen=True)
class SteadyPrediction:
    u_star: str
    u_star_value: float
    lam: float | None
    rate_model: str
    beta: float
    delta: float
    w0_inf: float
    poincare: float

    @property
    def exponent(self) -> float | None:
        """Power of the algebraic ``w`` decay; ``None`` for ``beta = 1``."""
        return None if self.beta == 1 else 1.0 / (self.beta - 1.0)

    def w_bound(self, t: np.ndarray) -> np.ndarray:
        if self.lam is None:
            raise ValueError("no rate prediction without a positive gamma")
        t = np.asarray(t, dtype=float)
        if self.beta == 1:
            return self.w0_inf * np.exp(-self.lam * t)
        b = self.beta
        return (self.w0_inf ** (1 - b) + self.lam * (b - 1) * t) ** (-1 / (b - 1))

    def u_rate(self) -> float | None:
        """Predicted decay rate of the squared distance ``int (u - u*)^2``.

        Exponential rate for ``beta = 1``; algebraic exponent for ``beta > 1``.
        """
        if self.lam is None:
            return None
        if self.beta > 1:
            return self.exponent
        if self.delta > 0:
            return 2 * self.lam * min(1.0, self.delta)
        return min(2 * self.lam, self.poincare)

    def as_dict(self) -> dict:
        return asdict(self)


def predict(init: InitialData, params: Parameters) -> SteadyPrediction:
    grid = init.grid
    if params.delta > 0:
        label, value = "one", 1.0
    else:
        value = integrate(grid, init.u0) / grid.volume
        label = "zero" if value == 0 else "mean_of_u0"
    w0_inf = float(np.max(np.abs(init.w0)))
    lam = min(1.0, init.gamma) * math.exp(-w0_inf) if init.gamma > 0 else None
    return SteadyPrediction(
        u_star=label,
        u_star_value=value,
        lam=lam,
        rate_model="exponential" if params.beta == 1 else "polynomial",
        beta=params.beta,
        delta=params.delta,
        w0_inf=w0_inf,
        # first nonzero Neumann eigenvalue of the rectangle
        poincare=(math.pi / max(grid.extents)) ** 2,
    )


def stationary_residual(state: State, params: Parameters) -> tuple[float, float]:
    grid, u, w = state.grid, state.u, state.w
    r1 = laplacian_neumann(grid, u) - advective_div(grid, u, w) + params.delta * u * (1.0 - u)
    r2 = np.maximum(w, 0.0) ** params.beta * u
    return lp_norm(grid, r1, 2), lp_norm(grid, r2, 2)


def detect_steady(states: Sequence[State], threshold: float = 1e-9, w_threshold: float = 1e-6) -> bool:
    """True when the relative L2 change of ``u`` per unit time between the
    last two snapshots is below ``threshold`` and ``w`` has either decayed
    below ``w_threshold`` or also stopped changing."""
    if len(states) < 2:
        raise ValueError("detect_steady needs at least two snapshots")
    s1, s2 = states[-2], states[-1]
    grid = s2.grid
    dt = s2.t - s1.t

    def rate(a: np.ndarray, b: np.ndarray) -> float:
        change = lp_norm(grid, b - a, 2)
        if change == 0:
            return 0.0
        if dt <= 0:
            return math.inf
        return change / max(lp_norm(grid, b, 2), 1e-300) / dt

    if rate(s1.u, s2.u) >= threshold:
        return False
    return float(np.max(s2.w)) < w_threshold or rate(s1.w, s2.w) < threshold


@dataclass
class EnvelopeReport:
    w_envelope_ok: bool
    first_violation: float | None
    max_ratio: float
    w_fit: FitResult | None
    w_rate_pred: float
    w_rate_ok: bool | None
    u_fit: FitResult | None
    u_rate_pred: float | None
    u_rate_ok: bool | None
    mean_drift: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.w_envelope_ok and self.w_rate_ok is not False and self.u_rate_ok is not False

    def as_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def rate_envelope_check(
    traj: Trajectory,
    prediction: SteadyPrediction,
    tol_env: float = 0.05,
    fit_tol: float = 0.1,
    tail: float = 0.5,
) -> EnvelopeReport:
    """Compare a trajectory against the predicted decay of ``w`` and ``u``.

    ``w_max`` must stay under the predicted envelope (times ``1 + tol_env``)
    at every record, and the fitted tail rate of ``w_max`` must reach the
    predicted ``lambda`` up to the relative ``fit_tol``. For ``u`` the squared
    distance ``int (u - u*)^2`` is fitted (exponential rate for ``beta = 1``,
    log-log exponent for ``beta > 1``); samples at round-off level are
    dropped and the check is skipped when too few remain.
    """
    if prediction.lam is None:
        raise ValueError("rate_envelope_check needs a prediction made with gamma > 0")
    t = traj.times
    try:
        w_max = traj.column("w_max")
        u_dist = traj.column("u_dist_l2")
    except AttributeError as exc:
        raise KeyError(f"missing diagnostics column: {exc}") from exc
    notes = []

    bound = prediction.w_bound(t) * (1.0 + tol_env)
    over = w_max > bound
    first = float(t[np.argmax(over)]) if np.any(over) else None
    ratio = float(np.max(w_max / prediction.w_bound(t)))

    w_fit = None
    w_ok = None
    keep = w_max > 0
    try:
        model = prediction.rate_model
        w_fit = fit_decay(t[keep], w_max[keep], model, prediction.beta, tail)
        w_ok = w_fit.rate >= prediction.lam * (1.0 - fit_tol)
    except ValueError as exc:
        notes.append(f"w fit skipped: {exc}")

    u_fit = None
    u_ok = None
    u_pred = prediction.u_rate()
    grid = traj.states[0].grid
    floor = 1e-11 * max(1.0, prediction.u_star_value) * math.sqrt(grid.volume)
    keep = (u_dist > floor) & (t > 0)
    sq = u_dist[keep] ** 2
    tk = t[keep]
    try:
        if prediction.beta == 1:
            u_fit = fit_decay(tk, sq, "exponential", tail=tail)
        else:
            # ln y against ln t: the exponential fit on log-time returns the exponent
            u_fit = fit_decay(np.log(tk), sq, "exponential", tail=tail)
            u_fit.model = "power"
        u_ok = u_fit.rate >= u_pred * (1.0 - fit_tol)
    except ValueError as exc:
        notes.append(f"u fit skipped: {exc}")

    drift = None
    if prediction.delta == 0:
        m = traj.column("mass") / grid.volume
        drift = float(np.max(np.abs(m - prediction.u_star_value)))
        if drift > 1e-8 * max(1.0, prediction.u_star_value):
            notes.append(f"mean drifted by {drift:.3e}: conservation defect")

    return EnvelopeReport(
        w_envelope_ok=first is None,
        first_violation=first,
        max_ratio=ratio,
        w_fit=w_fit,
        w_rate_pred=prediction.lam,
        w_rate_ok=w_ok,
        u_fit=u_fit,
        u_rate_pred=u_pred,
        u_rate_ok=u_ok,
        mean_drift=drift,
        notes=notes,
    )
