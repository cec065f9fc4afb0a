"""Uniform cell-centered grids on intervals and rectangles, with the
finite-volume stencils shared by every solver in the package.

Fields are plain ``numpy`` arrays of shape ``grid.shape``. Boundary faces
carry zero flux: the Laplacian uses ghost-cell reflection, the advective
flux is set to zero on the wall, so every divergence-form operator
telescopes to an exact zero integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft


@dataclass(frozen=True)
class Grid:
    """Cell-centered Cartesian grid on ``(0, L_1) x ... x (0, L_d)``.

    Attributes:
        extents: physical length of each axis.
        n: number of cells along each axis.
    """

    extents: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if len(extents) not in (1, 2) or len(n) != len(extents):
            raise ValueError("grid must be 1D or 2D with one cell count per axis")
        if any(e <= 0 for e in extents) or any(k < 2 for k in n):
            raise ValueError("extents must be positive and n >= 2 on every axis")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "n", n)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @cached_property
    def h(self) -> tuple[float, ...]:
        return tuple(e / k for e, k in zip(self.extents, self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def centers(self) -> list[np.ndarray]:
        """1D coordinate arrays of the cell centers, one per axis."""
        return [(np.arange(k) + 0.5) * hh for k, hh in zip(self.n, self.h)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.centers(), indexing="ij"))

    def spec(self) -> dict:
        return {"extents": list(self.extents), "n": list(self.n)}

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    @cached_property
    def _laplacian_symbol(self) -> np.ndarray:
        # eigenvalues of the Neumann Laplacian in the DCT-II basis
        sym = np.zeros(self.shape)
        for axis, (k, hh) in enumerate(zip(self.n, self.h)):
            lam = -(4.0 / hh**2) * np.sin(np.pi * np.arange(k) / (2 * k)) ** 2
            sym = sym + lam.reshape([-1 if a == axis else 1 for a in range(self.dim)])
        return sym


def face_differences(grid: Grid, f: np.ndarray, axis: int) -> np.ndarray:
    """Interior face differences ``(f[i+1] - f[i]) / h`` along ``axis``."""
    return np.diff(f, axis=axis) / grid.h[axis]


def _pad_zero_faces(flux: np.ndarray, axis: int) -> np.ndarray:
    shape = list(flux.shape)
    shape[axis] += 2
    out = np.zeros(shape)
    inner = [slice(None)] * flux.ndim
    inner[axis] = slice(1, -1)
    out[tuple(inner)] = flux
    return out


def divergence(grid: Grid, fluxes: list[np.ndarray]) -> np.ndarray:
    """Divergence of interior face fluxes, with zero flux on every wall face."""
    out = np.zeros(grid.shape)
    for axis, flux in enumerate(fluxes):
        full = _pad_zero_faces(flux, axis)
        out += np.diff(full, axis=axis) / grid.h[axis]
    return out


def laplacian_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Five-point (three-point in 1D) Laplacian with reflecting ghost cells."""
    f = grid.check(f)
    return divergence(grid, [face_differences(grid, f, a) for a in range(grid.dim)])


def face_gradient(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    """Normal derivative on every face, wall faces included (and zero there)."""
    f = grid.check(f)
    return [_pad_zero_faces(face_differences(grid, f, a), a) for a in range(grid.dim)]


def gradient(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    """Cell-centered gradient, one array per axis.

    Interior cells get the central difference; boundary cells use the
    reflected ghost value, which makes the wall-face normal derivative zero.
    """
    out = []
    for axis, faces in enumerate(face_gradient(grid, f)):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out.append(0.5 * (faces[tuple(lo)] + faces[tuple(hi)]))
    return out


def face_average(f: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * f.ndim
    hi = [slice(None)] * f.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (f[tuple(lo)] + f[tuple(hi)])


def _face_upwind(u: np.ndarray, velocity: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return np.where(velocity >= 0, u[tuple(lo)], u[tuple(hi)])


def advective_fluxes(grid: Grid, u: np.ndarray, w: np.ndarray, upwind: bool = False) -> list[np.ndarray]:
    """Interior face fluxes ``u_face * dw/dn`` of the taxis term.

    ``u_face`` is the arithmetic mean of the two neighbours, or the upwind
    value (the taxis velocity of ``u`` is ``+dw/dn``) when ``upwind``.
    """
    fluxes = []
    for axis in range(grid.dim):
        dw = face_differences(grid, w, axis)
        uf = _face_upwind(u, dw, axis) if upwind else face_average(u, axis)
        fluxes.append(uf * dw)
    return fluxes


def advective_div(grid: Grid, u: np.ndarray, w: np.ndarray, upwind: bool = False) -> np.ndarray:
    """Conservative discretization of ``div(u grad w)`` with zero wall flux."""
    u = grid.check(u)
    w = grid.check(w)
    return divergence(grid, advective_fluxes(grid, u, w, upwind))


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Midpoint rule. Sums in C order, so the result is reproducible."""
    f = grid.check(f)
    return float(np.sum(f) * grid.cell_volume)


def lp_norm(grid: Grid, f: np.ndarray, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError(f"lp_norm requires p >= 1, got {p}")
    f = grid.check(f)
    if np.isinf(p):
        return float(np.max(np.abs(f)))
    return integrate(grid, np.abs(f) ** p) ** (1.0 / p)


def solve_shifted_laplacian(grid: Grid, rhs: np.ndarray, dt: float, workers: int = 1) -> np.ndarray:
    """Solve ``(I - dt * L) x = rhs`` for the Neumann Laplacian ``L``.

    ``L`` is diagonal in the orthonormal DCT-II basis, so the SPD solve is a
    forward transform, a pointwise division and an inverse transform.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    coeffs = fft.dctn(rhs, type=2, norm="ortho", workers=workers)
    coeffs /= 1.0 - dt * grid._laplacian_symbol
    return fft.idctn(coeffs, type=2, norm="ortho", workers=workers)
