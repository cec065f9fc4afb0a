import math

import numpy as np
import pytest

from haptotaxis.grid import Grid, integrate
from haptotaxis.integrator import (
    AdmissibilityError,
    CFLViolation,
    InvariantViolation,
    StepConfig,
    Trajectory,
    cfl_dt,
    run,
    step,
    w_closed_form,
)
from haptotaxis.model import InitialData, Parameters, State


def const_state(g, u, w):
    return State(g, np.full(g.shape, float(u)), np.full(g.shape, float(w)), np.full(g.shape, float(w)), np.zeros(g.shape))


def cosine_init(n=32, gamma=0.5):
    g = Grid((1.0,), (n,))
    (x,) = g.mesh()
    return InitialData(g, 1 + 0.5 * np.cos(np.pi * x), 1 + 0.3 * np.cos(np.pi * x), gamma)


def test_w_closed_form_examples():
    one = np.ones(4)
    assert np.all(w_closed_form(one * 0.7, np.zeros(4), 1.0) == 0.7)
    assert np.all(w_closed_form(one * 0.7, np.zeros(4), 3.0) == pytest.approx(0.7, rel=1e-15))
    assert np.allclose(w_closed_form(one, one * math.log(2), 1.0), 0.5, rtol=1e-15)
    assert np.allclose(w_closed_form(one, one, 2.0), 0.5, rtol=1e-15)
    with pytest.raises(ValueError):
        w_closed_form(one, one, 0.5)


@pytest.mark.parametrize("formulation", ["flux", "v"])
def test_zero_density_is_invariant(formulation):
    g = Grid((1.0, 1.0), (8, 8))
    (x, y) = g.mesh()
    w0 = 1 + 0.2 * np.cos(np.pi * x) * np.cos(np.pi * y)
    s = State(g, np.zeros(g.shape), w0, w0, np.zeros(g.shape))
    s2, clipped = step(s, Parameters(delta=1.0), 1e-3, formulation=formulation)
    assert s2.t == 1e-3 and clipped == 0.0
    assert np.all(s2.u == 0) and np.array_equal(s2.w, w0)


def test_homogeneous_density_stays_constant():
    g = Grid((1.0,), (16,))
    s = const_state(g, 1.5, 0.8)
    p = Parameters(delta=0.0, beta=1.0)
    dt = 1e-3
    for _ in range(200):
        s, _ = step(s, p, dt)
    # only DCT round-off moves a constant
    assert np.max(np.abs(s.u - 1.5)) < 1e-14
    expected = w_closed_form(np.full(g.shape, 0.8), np.full(g.shape, 1.5 * 200 * dt), 1.0)
    assert np.max(np.abs(s.w - expected)) < 1e-12


def explicit_reference(s, p, dt, substeps):
    h = dt / substeps
    for _ in range(substeps):
        s, _ = step(s, p, h, scheme="explicit_euler")
    return s


def test_one_step_against_fine_reference():
    init = cosine_init(8)
    s0 = State.initial(init)
    p = Parameters(delta=1.0, beta=1.0)
    errs = []
    for dt in (2e-3, 1e-3):
        ref = explicit_reference(s0, p, dt, 1000)
        s1, _ = step(s0, p, dt)
        errs.append(max(np.max(np.abs(s1.u - ref.u)), np.max(np.abs(s1.w - ref.w))))
    assert errs[0] < 2e-3
    assert errs[1] < errs[0]


def test_cfl_examples():
    g = Grid((1.0,), (100,))
    cfg = StepConfig(dt_max=1e-3)
    assert cfl_dt(const_state(g, 0.0, 2.0), Parameters(), cfg) == 1e-3
    cfg = StepConfig(dt_max=1.0, cfl=0.5, scheme="explicit_euler")
    assert cfl_dt(const_state(g, 0.0, 2.0), Parameters(), cfg) == pytest.approx(2.5e-5, rel=1e-12)


def test_cfl_monotone_in_h():
    cfg = StepConfig(dt_max=1.0, scheme="explicit_euler")
    p = Parameters(delta=1.0)
    prev = math.inf
    for n in (16, 32, 64, 128):
        g = Grid((1.0,), (n,))
        (x,) = g.mesh()
        s = State(g, 1 + 0.5 * np.cos(np.pi * x), 1 + np.cos(np.pi * x), np.ones(n) * 2, np.zeros(n))
        dt = cfl_dt(s, p, cfg)
        assert dt <= prev
        prev = dt


def test_step_raises_on_cfl_violation():
    g = Grid((1.0,), (100,))
    with pytest.raises(CFLViolation):
        step(const_state(g, 1.0, 1.0), Parameters(), 1e-3, scheme="explicit_euler")


def test_t_end_zero_only_initial_snapshot():
    traj = run(cosine_init(), Parameters(), StepConfig(t_end=0.0))
    assert len(traj.states) == 1 and traj.steps == 0 and traj.final.t == 0.0


def test_homogeneous_long_run():
    g = Grid((1.0,), (16,))
    init = InitialData(g, np.ones(16), np.ones(16), 1.0)
    traj = run(init, Parameters(delta=1.0), StepConfig(dt_max=1e-2, t_end=10.0, steady_threshold=None))
    assert np.max(np.abs(traj.final.u - 1.0)) < 1e-8
    assert np.max(np.abs(traj.final.w - math.exp(-10.0))) < 1e-12


def test_run_invariants():
    traj = run(cosine_init(), Parameters(delta=1.0), StepConfig(dt_max=1e-3, t_end=0.5, record_every=7))
    t = traj.times
    assert np.all(np.diff(t) > 0) and t[-1] == pytest.approx(0.5)
    for a, b in zip(traj.states[:-1], traj.states[1:]):
        assert np.all(b.w > 0) and np.all(b.w <= a.w) and np.all(b.w <= b.w0)
        assert np.all(b.Uacc >= a.Uacc)
    assert traj.clip_mass == 0.0


def test_mass_conserved_without_source():
    traj = run(cosine_init(64), Parameters(), StepConfig(dt_max=1e-3, t_end=1.0))
    m = traj.column("mass")
    assert np.max(np.abs(m - m[0])) / m[0] < 1e-12


def test_formulations_agree():
    init = cosine_init(32)
    p = Parameters(delta=1.0, beta=2.0)
    a = run(init, p, StepConfig(dt_max=1e-3, t_end=0.2)).final
    b = run(init, p, StepConfig(dt_max=1e-3, t_end=0.2, formulation="v")).final
    assert np.max(np.abs(a.u - b.u)) < 5e-3


def test_admissibility_enforced():
    g = Grid((1.0,), (16,))
    (x,) = g.mesh()
    init = InitialData(g, 1 + x, np.ones(16))
    with pytest.raises(AdmissibilityError):
        run(init, Parameters(), StepConfig(t_end=0.1))
    traj = run(init, Parameters(), StepConfig(t_end=0.01), checked=False)
    assert not traj.checked


def test_resume_matches_continuous_run():
    init = cosine_init(32)
    p = Parameters(delta=1.0)
    cfg = dict(dt_max=1e-3, steady_threshold=None)
    full = run(init, p, StepConfig(t_end=0.4, **cfg)).final
    half = run(init, p, StepConfig(t_end=0.2, **cfg)).final
    resumed = run(init, p, StepConfig(t_end=0.4, **cfg), start=half).final
    assert resumed.t == pytest.approx(full.t)
    assert np.max(np.abs(resumed.u - full.u)) < 1e-12


def test_steady_exit_before_t_end():
    g = Grid((1.0,), (16,))
    init = InitialData(g, np.ones(16), np.ones(16), 1.0)
    traj = run(init, Parameters(delta=1.0), StepConfig(dt_max=1e-2, t_end=100.0, w_threshold=1e-6))
    assert traj.steady_at is not None and traj.final.t < 100.0


def test_trajectory_rejects_non_increasing_time():
    init = cosine_init(8)
    traj = run(init, Parameters(), StepConfig(t_end=0.01))
    with pytest.raises(InvariantViolation):
        traj.append(traj.states[0], traj.records[0])


def test_integrate_volume_helper():
    g = Grid((2.0,), (10,))
    assert integrate(g, np.ones(10)) == pytest.approx(2.0)
    assert isinstance(Trajectory(), Trajectory)
