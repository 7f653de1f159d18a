import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orlicz_parabolic.fields import SampledFunction
from orlicz_parabolic.nfunction import make_power, make_power_log, normalize
from orlicz_parabolic.solver import (
    NumericalError,
    Problem,
    SchemeOptions,
    boundary_flux,
    discrete_energy,
    flux,
    manufactured_problem,
    manufactured_source,
    solve,
    stable_dt,
    step_explicit,
    step_implicit_variational,
)

import oracles

P3 = make_power(3)
HEAT = make_power(2, oracle=True)
IMPLICIT = SchemeOptions(scheme="implicit-variational", tol=1e-13)


# flux -------------------------------------------------------------------------


def test_flux_examples():
    np.testing.assert_allclose(flux(P3, [[2.0]]), [[4.0]])
    np.testing.assert_allclose(flux(P3, [3.0, 4.0]), [15.0, 20.0])
    assert np.all(flux(P3, [[0.0]]) == 0.0)
    # regularized: g(s_eps) xi / s_eps with s_eps = sqrt(xi**2 + eps**2)
    np.testing.assert_allclose(flux(P3, [[3.0]], epsilon=4.0), [[15.0]])


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2), st.floats(0, 1))
def test_flux_odd_and_aligned(xi, eps):
    nf = normalize(make_power_log(2, 1, math.e))
    a = flux(nf, xi, eps)
    np.testing.assert_allclose(flux(nf, [-v for v in xi], eps), -a, rtol=1e-14, atol=0)
    # parallel to xi with nonnegative coefficient
    assert a[0] * xi[0] >= 0 and a[1] * xi[1] >= 0
    assert abs(a[0] * xi[1] - a[1] * xi[0]) <= 1e-9 * (1 + np.abs(a).max() * np.abs(xi).max())


# stable step ------------------------------------------------------------------------


def test_stable_dt_linear():
    u = SampledFunction(np.random.default_rng(0).normal(size=33), 1.0)
    assert stable_dt(u, HEAT, 0.0, sigma=0.9) == pytest.approx(0.9 * u.dx**2 / 2, rel=1e-14)
    u2 = SampledFunction(np.zeros((9, 9)), 1.0)
    assert stable_dt(u2, HEAT, 0.0, sigma=0.5) == pytest.approx(0.5 * u2.dx**2 / 4, rel=1e-14)


def test_stable_dt_power_slope_two():
    # g = t**2 at slope 2: g/s = 2, g' = 4, so D_max = 4
    u = SampledFunction.from_callable(lambda x: 2 * x, 33, 1.0)
    assert stable_dt(u, P3, 0.0, sigma=1.0) == pytest.approx(u.dx**2 / 8, rel=1e-12)


def test_stable_dt_flat_degenerate_returns_cap():
    u = SampledFunction(np.full(17, 3.0), 1.0)
    assert stable_dt(u, P3, 0.0, cap=0.125) == 0.125
    with pytest.raises(ValueError):
        stable_dt(np.zeros(5), P3, 0.0)


# explicit scheme ------------------------------------------------------------------------


@pytest.mark.parametrize("fun", [lambda x: 0 * x + 2.0, lambda x: 0.7 * x - 0.1])
def test_explicit_keeps_affine_states(fun):
    pb = Problem(P3, 33, fun)
    u = pb.initial_values()
    new = step_explicit(u, -1.0, 1e-4, pb)
    np.testing.assert_allclose(new, u, atol=1e-14)


def test_explicit_consistency_with_manufactured_solution():
    ue = lambda x, t: np.sin(np.pi * x) * np.exp(-t)
    errs = []
    for N in (33, 65, 129):
        # eps large enough that the regularization layer is resolved on all grids
        pb = manufactured_problem(ue, P3, 0.5, N, T=1.0)
        x = pb.mesh()[0]
        dt = 1e-9
        new = step_explicit(ue(x, -0.5), -0.5, dt, pb)
        errs.append(float(np.max(np.abs(new - ue(x, -0.5 + dt))) / dt))
    # truncation error is O(dx**2)
    assert errs[0] / errs[1] > 3.4 and errs[1] / errs[2] > 3.4
    assert errs[2] < 0.3


def test_conservation_against_boundary_flux():
    rng = np.random.default_rng(1)
    pb = Problem(P3, 65, rng.uniform(-1, 1, 65))
    u = pb.initial_values()
    dt = stable_dt(u, P3, pb.eps, dx=pb.dx)
    new = step_explicit(u, -1.0, dt, pb)
    I = pb.grid.interior
    gained = (new[I].sum() - u[I].sum()) * pb.dx
    assert gained == pytest.approx(dt * boundary_flux(u, pb), rel=1e-10, abs=1e-15)


@given(st.integers(0, 2**31 - 1))
def test_explicit_maximum_principle(seed):
    rng = np.random.default_rng(seed)
    u0 = rng.uniform(-1, 1, 33)
    pb = Problem(P3, 33, u0, T=0.002)
    out = solve(pb, SchemeOptions(sigma=0.9), cadence=0.001)
    assert out.values.max() <= u0.max() + 1e-12
    assert out.values.min() >= u0.min() - 1e-12


def test_fixed_dt_above_bound_raises():
    pb = Problem(HEAT, 33, lambda x: np.cos(np.pi * x / 2), T=0.01)
    with pytest.raises(NumericalError, match="stability bound"):
        solve(pb, SchemeOptions(dt=pb.dx**2), cadence=0.01)


# implicit scheme --------------------------------------------------------------------------


def test_implicit_matches_tridiagonal_heat_solve():
    rng = np.random.default_rng(2)
    u0 = rng.normal(size=17)
    pb = Problem(HEAT, 17, u0)
    dt = 0.01
    w = step_implicit_variational(u0, -1.0, dt, pb, IMPLICIT)
    ref = oracles.backward_euler_heat(u0, dt, pb.dx)
    np.testing.assert_allclose(w, ref, atol=1e-8)
    for _ in range(5):
        w, ref = step_implicit_variational(w, -1.0, dt, pb, IMPLICIT), oracles.backward_euler_heat(ref, dt, pb.dx)
    np.testing.assert_allclose(w, ref, atol=1e-8)


def test_implicit_heat_with_source():
    u0 = np.zeros(17)
    f = lambda x, t: 1.0 + x
    pb = Problem(HEAT, 17, u0, source=f)
    w = step_implicit_variational(u0, -1.0, 0.05, pb, IMPLICIT)
    x = pb.mesh()[0]
    np.testing.assert_allclose(w, oracles.backward_euler_heat(u0, 0.05, pb.dx, 1.0 + x), atol=1e-8)


def test_implicit_fixed_point():
    pb = Problem(P3, 33, lambda x: 0.4 * x + 0.3)
    u = pb.initial_values()
    rep = []
    w = step_implicit_variational(u, -1.0, 0.1, pb, IMPLICIT, report=rep)
    np.testing.assert_allclose(w, u, atol=1e-12)
    assert rep[0].iterations == 1


def test_implicit_energy_descent():
    rng = np.random.default_rng(3)
    pb = Problem(P3, 33, rng.uniform(-1, 1, 33))
    u = pb.initial_values()
    energies = [discrete_energy(u, pb)]
    for j in range(100):
        u = step_implicit_variational(u, -1.0 + j * 1e-3, 1e-3, pb)
        energies.append(discrete_energy(u, pb))
    diffs = np.diff(energies)
    assert np.all(diffs <= 1e-12 * max(1.0, energies[0]))
    assert energies[-1] < energies[0]


def test_implicit_solve_stats():
    pb = Problem(P3, 33, lambda x: 0.5 * np.cos(np.pi * x / 2), T=0.01)
    stats = {}
    out = solve(pb, SchemeOptions(scheme="implicit-variational", dt=0.001), cadence=0.005, stats=stats)
    assert out.slices == 3 and stats["steps"] == 10 and stats["inner_iterations"] >= 10


# manufactured sources and solve -------------------------------------------------------------


@pytest.mark.parametrize("ue", [lambda x, t: x + 0 * t, lambda x, t: 0 * x + 4.0])
def test_manufactured_source_vanishes_on_affine(ue):
    f = manufactured_source(ue, P3, 0.01, 1e-3)
    x = np.linspace(-1, 1, 11)
    assert np.max(np.abs(f(x, -0.3))) < 1e-8


def test_manufactured_source_heat():
    ue = lambda x, t: np.sin(x) * np.exp(t)
    f = manufactured_source(ue, HEAT, 0.0, 1e-2)
    x = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(f(x, -0.2), 2 * np.sin(x) * np.exp(-0.2), atol=1e-7)


def test_solve_zero_data():
    pb = Problem(P3, 17, lambda x: 0 * x, T=0.01)
    stats = {}
    out = solve(pb, cadence=0.005, stats=stats)
    assert np.all(out.values == 0.0) and out.slices == 3 and stats["steps"] >= 2
    assert out.t_end == 0.0 and out.dt == 0.005


def test_solve_rejects_bad_cadence():
    pb = Problem(P3, 17, lambda x: 0 * x, T=0.01)
    with pytest.raises(ValueError, match="cadence"):
        solve(pb, cadence=0.003)


def test_problem_validation():
    with pytest.raises(ValueError):
        Problem(P3, 2, lambda x: x)
    with pytest.raises(ValueError):
        Problem(P3, 9, lambda x: x, n=3)
    with pytest.raises(ValueError):
        Problem(P3, 9, np.zeros(8)).initial_values()
    with pytest.raises(ValueError):
        SchemeOptions(scheme="crank-nicolson")


def test_two_dimensional_smoke():
    u0 = lambda x, y: np.cos(np.pi * x / 2) * np.cos(np.pi * y / 2) + 0.3 * x * y
    gaps = []
    for N in (17, 33):
        pb = Problem(P3, N, u0, n=2, T=0.02)
        a = solve(pb, cadence=0.01)
        b = solve(pb, SchemeOptions(scheme="implicit-variational", dt=1e-3), cadence=0.01)
        assert a.values.shape == (3, N, N)
        start = a.values[0]
        for out in (a, b):
            assert np.all(np.isfinite(out.values))
            assert out.values.max() <= start.max() + 1e-12 and out.values.min() >= start.min() - 1e-12
            # symmetric under swapping x and y
            np.testing.assert_allclose(out.values[-1], out.values[-1].T, atol=1e-10)
        gaps.append(float(np.max(np.abs(a.values[-1] - b.values[-1]))))
    # in 2-D the energy gradient also carries tangential face terms, so the two
    # schemes differ at O(dx); the gap must shrink under refinement
    assert gaps[0] < 0.03 and gaps[1] < 0.7 * gaps[0]
