"""State containers, parameters and the ``v = u exp(-w)`` change of variables."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from haptotaxis.diagnostics import free_energy
from haptotaxis.grid import Grid


@dataclass(frozen=True)
class Parameters:
    """Logistic rate ``delta`` and degeneracy exponent ``beta``.

    The remaining coefficients of the general model are normalized
    (``a = b = k = 1``, ``alpha = 0``) and kept only for the record.
    """

    delta: float = 0.0
    beta: float = 1.0
    a: float = field(default=1.0, init=False)
    b: float = field(default=1.0, init=False)
    k: float = field(default=1.0, init=False)
    alpha: float = field(default=0.0, init=False)

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not self.beta >= 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")


@dataclass(frozen=True)
class State:
    """Snapshot of a run.

    ``Uacc`` is the running time integral of ``u``; together with ``w0``
    it determines ``w`` in closed form.
    """

    grid: Grid
    u: np.ndarray
    w: np.ndarray
    w0: np.ndarray
    Uacc: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("u", "w", "w0", "Uacc"):
            arr = self.grid.check(getattr(self, name))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"state field {name} has non-finite values")
            # lock a view so the caller's array stays writable
            arr = arr.view()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def initial(cls, init: InitialData) -> State:
        return cls(init.grid, init.u0.copy(), init.w0.copy(), init.w0.copy(), np.zeros(init.grid.shape), 0.0)

    def evolve(self, **changes) -> State:
        return replace(self, **changes)


@dataclass(frozen=True)
class InitialData:
    """Initial density ``u0 >= 0``, matrix ``w0 > 0`` and a certified floor
    ``gamma <= min u0`` (zero when no floor is claimed)."""

    grid: Grid
    u0: np.ndarray
    w0: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u0", self.grid.check(self.u0))
        object.__setattr__(self, "w0", self.grid.check(self.w0))
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


@dataclass
class AdmissibilityReport:
    u0_min: float
    w0_min: float
    F0: float
    compatibility_residual: float
    compatibility_tol: float
    gamma: float
    nonnegative: bool
    w0_positive: bool
    finite_energy: bool
    compatible: bool
    gamma_certified: bool

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.w0_positive and self.finite_energy and self.compatible and self.gamma_certified

    def as_dict(self) -> dict:
        out = dict(vars(self))
        out["passed"] = self.passed
        return out


def _wall_normal_derivatives(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    # first-order one-sided differences between the wall cell and its neighbour,
    # oriented along the outward normal
    out = []
    for axis in range(grid.dim):
        f_lo = np.take(f, [0, 1], axis=axis)
        f_hi = np.take(f, [-1, -2], axis=axis)
        h = grid.h[axis]
        out.append(-(np.take(f_lo, 1, axis=axis) - np.take(f_lo, 0, axis=axis)) / h)
        out.append(-(np.take(f_hi, 1, axis=axis) - np.take(f_hi, 0, axis=axis)) / h)
    return out


def _wall_values(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    out = []
    for axis in range(grid.dim):
        out.append(np.take(f, 0, axis=axis))
        out.append(np.take(f, -1, axis=axis))
    return out


def _wall_curvature(grid: Grid, f: np.ndarray) -> float:
    # size of the second difference next to each wall, used to bound the O(h)
    # truncation of the one-sided derivative for profiles with zero wall slope
    worst = 0.0
    for axis in range(grid.dim):
        if grid.n[axis] < 3:
            continue
        second = np.diff(f, n=2, axis=axis) / grid.h[axis] ** 2
        lo = np.take(second, 0, axis=axis)
        hi = np.take(second, -1, axis=axis)
        worst = max(worst, float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
    return worst


def compatibility_residual(grid: Grid, u0: np.ndarray, w0: np.ndarray) -> float:
    """Largest ``|du0/dn - u0 dw0/dn|`` over wall cells."""
    du = _wall_normal_derivatives(grid, u0)
    dw = _wall_normal_derivatives(grid, w0)
    uw = _wall_values(grid, u0)
    return max(float(np.max(np.abs(a - b * c))) for a, b, c in zip(du, uw, dw))


def check_admissibility(init: InitialData, params: Parameters, *, abs_tol: float = 1e-8) -> AdmissibilityReport:
    """Check the initial data: ``u0 >= 0``, ``w0 > 0``, finite free energy,
    no-flux compatibility at the wall and ``min u0 >= gamma``.

    The compatibility residual uses first-order one-sided differences, whose
    truncation error for a profile with zero wall slope is about ``h |f''|``.
    The tolerance is therefore ``abs_tol * (1 + |u0|_inf |w0|_inf)`` plus
    twice that truncation allowance, so smooth compatible data passes at any
    resolution while a genuine wall slope does not.
    """
    grid = init.grid
    u0, w0 = init.u0, init.w0
    u0_min = float(np.min(u0))
    w0_min = float(np.min(w0))
    scale = 1.0 + float(np.max(np.abs(u0))) * float(np.max(np.abs(w0)))
    h = max(grid.h)
    allowance = 2.0 * h * (_wall_curvature(grid, u0) + float(np.max(np.abs(u0))) * _wall_curvature(grid, w0))
    tol = abs_tol * scale + allowance

    if u0_min >= 0 and w0_min > 0:
        F0 = free_energy(grid, u0, w0, params.beta)
    else:
        F0 = float("nan")
    residual = compatibility_residual(grid, u0, w0)
    return AdmissibilityReport(
        u0_min=u0_min,
        w0_min=w0_min,
        F0=F0,
        compatibility_residual=residual,
        compatibility_tol=tol,
        gamma=init.gamma,
        nonnegative=u0_min >= 0,
        w0_positive=w0_min > 0,
        finite_energy=bool(np.isfinite(F0)),
        compatible=residual <= tol,
        gamma_certified=u0_min >= init.gamma,
    )


def to_v(state: State) -> np.ndarray:
    return state.u * np.exp(-state.w)


def from_v(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    return v * np.exp(w)
