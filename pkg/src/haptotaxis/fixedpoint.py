"""Picard construction of the solution for ``beta > 1``.

With ``U = (beta-1) int_0^t u`` the matrix is ``w = (w0^(1-beta) + U)^(1/(1-beta))``,
so the system closes in ``(u, U)``. Freezing ``U = phi`` gives a linear
parabolic problem for ``u`` with coefficients built from

    g = (w0^(1-beta) + phi)^(1/(1-beta)),  a_i = dg/dx_i,
    a = lap g - delta (1 + g^-beta dg/dt),

and the wall condition ``du/dn = u dg/dn``. ``S`` solves that problem,
``R`` integrates the result in time, and the fixed point of ``R o S`` is the
solution. Distances are measured in the sup norm over space-time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from haptotaxis.grid import Grid, gradient, laplacian_neumann, solve_shifted_laplacian
from haptotaxis.model import InitialData, Parameters

log = logging.getLogger(__name__)


@dataclass
class SpaceTimeField:
    """Values on ``times[0] < ... < times[M]``; ``values[k]`` is a grid field."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), *self.grid.shape):
            raise ValueError(f"values shape {self.values.shape} does not match times x grid")
        steps = np.diff(self.times)
        if len(steps) and (np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]):
            raise ValueError("times must be uniform and increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("space-time field has non-finite values")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @classmethod
    def zeros(cls, grid: Grid, T: float, steps: int) -> SpaceTimeField:
        times = np.linspace(0.0, T, steps + 1)
        return cls(grid, times, np.zeros((steps + 1, *grid.shape)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _require_beta(beta: float) -> None:
    if not beta > 1:
        raise ValueError(f"the fixed-point construction requires beta > 1, got {beta}")


def g_of_phi(phi: SpaceTimeField, w0: np.ndarray, beta: float) -> SpaceTimeField:
    _require_beta(beta)
    vals = (w0 ** (1.0 - beta) + phi.values) ** (1.0 / (1.0 - beta))
    return SpaceTimeField(phi.grid, phi.times, vals)


def solve_linear_parabolic(
    g: SpaceTimeField, u0: np.ndarray, params: Parameters, workers: int = 1
) -> SpaceTimeField:
    """Operator ``S``: solve the frozen-coefficient problem on ``g.times``.

    Works with ``v = u exp(-g)``, which turns the wall condition into a
    homogeneous Neumann one:

        v_t = lap v - sum_i b_i dv/dx_i - b v,
        b_i = a_i - 2 dg/dx_i,
        b   = a + g_t - lap g + sum_i a_i dg/dx_i - |grad g|^2.

    Diffusion is implicit, the remaining terms are taken at the old level,
    and ``g_t`` is a forward difference.
    """
    grid = g.grid
    beta, delta = params.beta, params.delta
    dt = g.dt
    out = np.empty_like(g.values)
    out[0] = u0
    v = u0 * np.exp(-g.values[0])
    for k in range(len(g.times) - 1):
        gk = g.values[k]
        g_t = (g.values[k + 1] - gk) / dt
        grad_g = gradient(grid, gk)
        lap_g = laplacian_neumann(grid, gk)
        a_i = grad_g
        a = lap_g - delta * (1.0 + gk ** (-beta) * g_t)
        b_i = [ai - 2.0 * gi for ai, gi in zip(a_i, grad_g)]
        b = a + g_t - lap_g + sum(ai * gi for ai, gi in zip(a_i, grad_g)) - sum(gi * gi for gi in grad_g)
        explicit = -sum(bi * dv for bi, dv in zip(b_i, gradient(grid, v))) - b * v
        v = solve_shifted_laplacian(grid, v + dt * explicit, dt, workers)
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"linear solve produced non-finite values at t={g.times[k + 1]:g}")
        out[k + 1] = v * np.exp(g.values[k + 1])
    return SpaceTimeField(grid, g.times, out)


def operator_R(u: SpaceTimeField, beta: float) -> SpaceTimeField:
    """``U = (beta - 1) int_0^t u`` by the cumulative trapezoidal rule."""
    incr = 0.5 * u.dt * (u.values[1:] + u.values[:-1])
    vals = np.zeros_like(u.values)
    vals[1:] = (beta - 1.0) * np.cumsum(incr, axis=0)
    return SpaceTimeField(u.grid, u.times, vals)


def x_set_violations(U: SpaceTimeField, sigma: float, tol: float = 0.0) -> list[str]:
    """Clauses of the admissible set that ``U`` breaks: zero at ``t = 0``,
    nonnegative, nondecreasing in time, sup norm at most ``sigma``."""
    bad = []
    if np.any(U.values[0] != 0):
        bad.append("initial")
    if np.any(U.values < -tol):
        bad.append("nonnegative")
    if np.any(np.diff(U.values, axis=0) < -tol):
        bad.append("monotone")
    if U.sup() > sigma:
        bad.append("radius")
    return bad


@dataclass
class PicardReport:
    iterates: int
    residuals: list[float]
    contraction_ratios: list[float]
    converged: bool
    final_U: SpaceTimeField
    final_u: SpaceTimeField
    sigma: float
    fixed_point_residual: float
    violations: list[tuple[int, str]] = field(default_factory=list)
    norm: str = "discrete sup norm over space-time (Hoelder norm has no discrete analogue)"

    @property
    def in_x_set(self) -> bool:
        return not self.violations

    @property
    def contraction(self) -> float:
        """Largest observed ratio of successive residuals (0 if fewer than two)."""
        return max(self.contraction_ratios, default=0.0)

    def summary(self) -> dict:
        return {
            "iterates": self.iterates,
            "converged": self.converged,
            "residuals": self.residuals,
            "contraction_ratios": self.contraction_ratios,
            "sigma": self.sigma,
            "fixed_point_residual": self.fixed_point_residual,
            "in_x_set": self.in_x_set,
            "violations": [f"iterate {i}: {c}" for i, c in self.violations],
            "norm": self.norm,
        }


def default_sigma(u0: np.ndarray, beta: float, T: float) -> float:
    return 2.0 * (beta - 1.0) * T * (float(np.max(np.abs(u0))) + 1.0)


def picard_iterate(
    init: InitialData,
    params: Parameters,
    T: float,
    steps: int = 64,
    sigma: float | None = None,
    max_iter: int = 50,
    tol: float = 1e-9,
    workers: int = 1,
) -> PicardReport:
    """Iterate ``u_n = S(U_n)``, ``U_{n+1} = R(u_n)`` from ``U_0 = 0``.

    Stops once ``|U_{n+1} - U_n| < tol (1 + |U_{n+1}|)`` or after
    ``max_iter`` sweeps. Non-convergence and violations of the admissible
    set are reported, not raised.
    """
    _require_beta(params.beta)
    if T <= 0 or steps < 1:
        raise ValueError("T must be positive and steps >= 1")
    if sigma is None:
        sigma = default_sigma(init.u0, params.beta, T)
    U = SpaceTimeField.zeros(init.grid, T, steps)
    residuals: list[float] = []
    violations: list[tuple[int, str]] = []
    converged = False
    u = None
    for it in range(1, max_iter + 1):
        u = solve_linear_parabolic(g_of_phi(U, init.w0, params.beta), init.u0, params, workers)
        U_next = operator_R(u, params.beta)
        violations += [(it, c) for c in x_set_violations(U_next, sigma)]
        res = float(np.max(np.abs(U_next.values - U.values)))
        residuals.append(res)
        U = U_next
        log.debug("picard iterate %d residual %.3e", it, res)
        if res < tol * (1.0 + U.sup()):
            converged = True
            break
    ratios = [b / a for a, b in zip(residuals[:-1], residuals[1:]) if a > 0]
    u = solve_linear_parabolic(g_of_phi(U, init.w0, params.beta), init.u0, params, workers)
    fp_res = float(np.max(np.abs(operator_R(u, params.beta).values - U.values)))
    return PicardReport(
        iterates=len(residuals),
        residuals=residuals,
        contraction_ratios=ratios,
        converged=converged,
        final_U=U,
        final_u=u,
        sigma=sigma,
        fixed_point_residual=fp_res,
        violations=violations,
    )
