import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from haptotaxis.grid import (
    Grid,
    advective_div,
    advective_fluxes,
    face_gradient,
    gradient,
    integrate,
    laplacian_neumann,
    lp_norm,
    solve_shifted_laplacian,
)


def test_grid_spacing_and_volume():
    g = Grid((2.0, 1.0), (40, 10))
    assert g.h == (0.05, 0.1)
    assert g.volume == 2.0
    assert integrate(g, np.ones(g.shape)) == pytest.approx(g.volume, rel=1e-15)


@pytest.mark.parametrize("extents,n", [((0.0,), (4,)), ((1.0,), (1,)), ((1.0, 1.0, 1.0), (2, 2, 2)), ((1.0,), (4, 4))])
def test_grid_rejects_bad_shape(extents, n):
    with pytest.raises(ValueError):
        Grid(extents, n)


def test_shape_mismatch_rejected():
    g = Grid((1.0,), (8,))
    with pytest.raises(ValueError, match="does not match"):
        laplacian_neumann(g, np.ones(9))


def test_laplacian_annihilates_constants():
    g = Grid((2.0, 1.0), (12, 7))
    assert np.max(np.abs(laplacian_neumann(g, np.full(g.shape, 3.7)))) == 0.0


def test_laplacian_cosine_second_order():
    errs = []
    for n in (64, 128):
        g = Grid((1.0,), (n,))
        (x,) = g.mesh()
        f = np.cos(np.pi * x)
        errs.append(np.max(np.abs(laplacian_neumann(g, f) + np.pi**2 * f)))
    assert errs[0] < 5e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_gradient_of_constant_is_zero():
    g = Grid((1.0, 1.0), (6, 5))
    for comp in gradient(g, np.full(g.shape, 2.0)):
        assert np.all(comp == 0.0)


def test_gradient_of_square_interior_second_order():
    errs = []
    for n in (50, 100):
        g = Grid((1.0,), (n,))
        (x,) = g.mesh()
        errs.append(np.max(np.abs(gradient(g, x**2)[0][1:-1] - 2 * x[1:-1])))
    # central differences are exact for quadratics
    assert max(errs) < 1e-12


def test_cosine_wall_normal_gradient_zero():
    g = Grid((1.0,), (32,))
    (x,) = g.mesh()
    faces = face_gradient(g, np.cos(np.pi * x))[0]
    assert faces[0] == 0.0 and faces[-1] == 0.0


def test_advective_div_trivial_cases():
    g = Grid((1.0, 2.0), (8, 9))
    rng = np.random.default_rng(0)
    u = rng.random(g.shape)
    assert np.all(advective_div(g, u, np.full(g.shape, 4.0)) == 0.0)
    assert np.all(advective_div(g, np.zeros(g.shape), rng.random(g.shape)) == 0.0)


def test_upwind_flux_picks_donor_cell():
    g = Grid((1.0,), (3,))
    u = np.array([1.0, 2.0, 3.0])
    w = np.array([0.0, 1.0, 0.0])
    (flux,) = advective_fluxes(g, u, w, upwind=True)
    # dw/dn > 0 on the first face moves u rightwards from cell 0
    assert flux[0] == pytest.approx(1.0 * 3.0)
    assert flux[1] == pytest.approx(3.0 * -3.0)


def test_integrate_examples():
    assert integrate(Grid((1.0,), (10,)), np.ones(10)) == pytest.approx(1.0, abs=1e-15)
    g = Grid((2.0, 1.0), (8, 4))
    assert integrate(g, np.full(g.shape, 3.0)) == pytest.approx(6.0, abs=1e-14)
    g = Grid((1.0,), (100,))
    (x,) = g.mesh()
    assert abs(integrate(g, x) - 0.5) <= 1e-12


def test_lp_norm_examples():
    g = Grid((1.0,), (20,))
    assert lp_norm(g, np.full(20, 2.0), 2) == pytest.approx(2.0, rel=1e-14)
    assert lp_norm(g, np.full(20, -3.0), math.inf) == 3.0
    step = np.where(np.arange(20) < 10, 1.0, 0.0)
    assert lp_norm(g, step, 1) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(ValueError):
        lp_norm(g, step, 0.5)


def test_shifted_laplacian_solve_inverts_operator():
    g = Grid((1.0, 3.0), (9, 14))
    rng = np.random.default_rng(1)
    x = rng.standard_normal(g.shape)
    dt = 0.37
    rhs = x - dt * laplacian_neumann(g, x)
    assert np.max(np.abs(solve_shifted_laplacian(g, rhs, dt) - x)) < 1e-12


def test_shifted_laplacian_threads_bitwise_equal():
    g = Grid((1.0, 1.0), (64, 64))
    rhs = np.random.default_rng(2).standard_normal(g.shape)
    a = solve_shifted_laplacian(g, rhs, 1e-3, workers=1)
    b = solve_shifted_laplacian(g, rhs, 1e-3, workers=2)
    assert a.tobytes() == b.tobytes()


grids = st.sampled_from([Grid((1.0,), (7,)), Grid((3.0,), (16,)), Grid((1.0, 2.0), (5, 6))])


@st.composite
def field_pair(draw):
    g = draw(grids)
    elems = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    f = draw(arrays(float, g.shape, elements=elems))
    h = draw(arrays(float, g.shape, elements=elems))
    return g, f, h


@settings(max_examples=60, deadline=None)
@given(field_pair())
def test_divergence_forms_integrate_to_zero(data):
    g, f, w = data
    scale = max(1.0, float(np.max(np.abs(f))))
    assert abs(integrate(g, laplacian_neumann(g, f))) <= 1e-12 * scale
    u = np.abs(f)
    bound = 1e-12 * max(1.0, np.max(u)) * max(1.0, np.max(np.abs(w))) / min(g.h)
    assert abs(integrate(g, advective_div(g, u, w))) <= bound
    assert abs(integrate(g, advective_div(g, u, w, upwind=True))) <= bound


@settings(max_examples=60, deadline=None)
@given(field_pair())
def test_laplacian_symmetric_and_nonpositive(data):
    g, f, h = data
    a = integrate(g, laplacian_neumann(g, f) * h)
    b = integrate(g, f * laplacian_neumann(g, h))
    scale = max(1.0, abs(a), abs(b))
    assert abs(a - b) <= 1e-10 * scale
    assert integrate(g, f * laplacian_neumann(g, f)) <= 1e-9 * max(1.0, float(np.sum(f * f)))
