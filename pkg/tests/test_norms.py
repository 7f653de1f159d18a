import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orlicz_parabolic.fields import SampledFunction, SpaceTimeField
from orlicz_parabolic.nfunction import make_power, make_power_log, make_power_modular, normalize
from orlicz_parabolic.norms import (
    compatibility_check,
    luxemburg_norm,
    modular,
    modular_norm_bound_check,
    slice_norms,
    space_time_norm,
)

import oracles

F2 = make_power_modular(2)


def _const(c, N=33, R=0.5, n=1):
    return SampledFunction(np.full((N,) * n, float(c)), R)


def _random(seed, N=33, n=1):
    rng = np.random.default_rng(seed)
    return SampledFunction(rng.normal(size=(N,) * n) * rng.uniform(0.1, 10), 1.0)


# Luxemburg norm -------------------------------------------------------------------


@pytest.mark.parametrize("c", [0.3, 1.0, 7.0])
def test_constant_on_unit_measure(c):
    # [-1/2, 1/2] has measure 1
    assert luxemburg_norm(_const(c), F2) == pytest.approx(c, rel=1e-12)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("n", [1, 2])
def test_power_case_equals_lq(q, n):
    F = make_power_modular(q)
    for seed in range(10):
        f = _random(seed, N=17 if n == 2 else 33, n=n)
        ref = oracles.lq_norm(f.values, f.weights(), q)
        assert luxemburg_norm(f, F) == pytest.approx(ref, rel=1e-7)


def test_zero_function():
    assert luxemburg_norm(_const(0.0), F2) == 0.0


def test_nonfinite_rejected():
    from orlicz_parabolic.norms import _luxemburg

    with pytest.raises(ValueError):
        _luxemburg(np.array([1.0, np.inf]), np.ones(2), F2)


def test_norm_is_root_of_modular():
    F = make_power_log(2, 1, math.e)
    f = _random(5)
    k = luxemburg_norm(f, F)
    assert modular(f.values, f.weights(), F, k) == pytest.approx(1.0, rel=1e-10)


def test_ball_restriction():
    x = np.linspace(-1, 1, 65)
    f = SampledFunction(np.where(np.abs(x) <= 0.5, 1.0, 100.0), 1.0)
    # on B_{1/2} the field is 1 on a set of measure 1
    assert luxemburg_norm(f, F2, radius=0.5) == pytest.approx(1.0, rel=1e-12)


@given(seed=st.integers(0, 2**31 - 1), lam=st.sampled_from([0.5, 2.0, 10.0, -3.0]))
def test_homogeneity(seed, lam):
    F = make_power_log(2, 1, math.e)
    f = _random(seed)
    lf = SampledFunction(lam * f.values, f.R)
    assert luxemburg_norm(lf, F) == pytest.approx(abs(lam) * luxemburg_norm(f, F), rel=1e-7)


@given(seed=st.integers(0, 2**31 - 1))
def test_monotone(seed):
    rng = np.random.default_rng(seed)
    F = make_power(3)
    a = rng.normal(size=33)
    b = np.abs(a) * rng.uniform(1.0, 2.0, size=33)
    fa, fb = SampledFunction(a, 1.0), SampledFunction(b, 1.0)
    assert luxemburg_norm(fa, F) <= luxemburg_norm(fb, F) + 1e-9


@pytest.mark.parametrize("q,n", [(2.0, 1), (3.0, 2)])
def test_rescaling_identity_power_case(q, n):
    # for F = t**q: ||f(rho x)||_{B_1} = rho**(-n/q) ||f||_{B_rho}; slack -> 0 under refinement
    F = make_power_modular(q)
    rho = 0.5
    fun = lambda *xs: np.cos(1.3 * sum(xs)) + 0.2 * xs[0] ** 2
    slacks = []
    for N in (33, 65, 129):
        big = SampledFunction.from_callable(fun, N, 1.0, n)
        scaled = SampledFunction.from_callable(lambda *xs: fun(*(rho * x for x in xs)), N, 1.0, n)
        lhs = luxemburg_norm(scaled, F)
        rhs = rho ** (-n / q) * luxemburg_norm(big, F, radius=rho)
        slacks.append(abs(lhs - rhs) / rhs)
        # sub-sampled ball weights carry an O(dx) area error in 2-D, O(dx**2) in 1-D
        assert slacks[-1] < big.dx ** n
    if n == 1:
        assert slacks[0] > slacks[1] > slacks[2]


def test_rescaling_inequality_orlicz():
    F = make_power_log(1.5, 1, math.e)
    f0 = F.g0
    rho = 0.25
    fun = lambda x: 1.0 + np.sin(3 * x)
    big = SampledFunction.from_callable(fun, 257, 1.0)
    scaled = SampledFunction.from_callable(lambda x: fun(rho * x), 257, 1.0)
    assert luxemburg_norm(scaled, F) <= rho ** (-1 / (1 + f0)) * luxemburg_norm(big, F, rho) * (1 + 1e-3)


# space-time norm -----------------------------------------------------------------


@pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
def test_space_time_constant(r):
    u = SpaceTimeField(np.full((11, 33), 2.5), 0.5, 0.1, 0.0)
    assert space_time_norm(u, F2, r) == pytest.approx(2.5, rel=1e-12)
    assert np.allclose(slice_norms(u, F2), 2.5)


def test_space_time_indicator_in_time():
    c = 3.0
    for m in (101, 1001):
        t = np.linspace(-1, 0, m)
        vals = np.where(t[:, None] > -0.5, c, 0.0) * np.ones((m, 33))
        u = SpaceTimeField(vals, 0.5, 1.0 / (m - 1), 0.0)
        err = abs(space_time_norm(u, F2, 2.0) - c * math.sqrt(0.5))
        assert err < 2 * c / (m - 1)
    # exact when the jump slice carries the mean value
    t = np.linspace(-1, 0, 101)
    sq = np.where(t > -0.5 + 1e-12, c * c, 0.0)
    sq[np.isclose(t, -0.5)] = c * c / 2
    u = SpaceTimeField(np.sqrt(sq)[:, None] * np.ones((101, 33)), 0.5, 0.01, 0.0)
    assert space_time_norm(u, F2, 2.0) == pytest.approx(c * math.sqrt(0.5), rel=1e-12)


def test_space_time_zero_and_r_guard():
    u = SpaceTimeField(np.zeros((5, 9)), 1.0, 0.25)
    assert space_time_norm(u, F2, 2.0) == 0.0
    with pytest.raises(ValueError):
        space_time_norm(u, F2, 1.0)


def test_space_time_t_from():
    vals = np.ones((11, 33))
    vals[:6] = 100.0  # t <= -0.5
    u = SpaceTimeField(vals, 0.5, 0.1, 0.0)
    assert space_time_norm(u, F2, 2.0, t_from=-0.4) == pytest.approx(math.sqrt(0.4), rel=1e-12)


@given(seed=st.integers(0, 2**31 - 1))
def test_space_time_monotone(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 17))
    b = np.abs(a) + rng.uniform(0, 1, size=a.shape)
    ua, ub = SpaceTimeField(a, 1.0, 0.2), SpaceTimeField(b, 1.0, 0.2)
    F = make_power(3)
    assert space_time_norm(ua, F, 2.0) <= space_time_norm(ub, F, 2.0) + 1e-9


# modular bound ----------------------------------------------------------------------


def test_modular_bound_unit_field():
    G = normalize(make_power(3), 1.0)
    rep = modular_norm_bound_check(_const(1.0), G)
    assert rep.modular == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert rep.norm == pytest.approx(3 ** (-1.0 / 3.0), rel=1e-10)
    assert rep.ok


def test_modular_bound_zero():
    rep = modular_norm_bound_check(_const(0.0), make_power(3))
    assert (rep.norm, rep.bound) == (0.0, 0.0) and rep.ok


@pytest.mark.parametrize("G", [make_power(3), make_power_log(2, 1, math.e), make_power(2.5)],
                         ids=["p3", "plog", "p2.5"])
def test_modular_bound_random_fields(G):
    bad = [s for s in range(50) if not modular_norm_bound_check(_random(s, N=17), G).ok]
    assert bad == []


# compatibility ---------------------------------------------------------------------


def test_compatibility_admissible():
    c = compatibility_check(2, 1, 1, 2)
    assert c.left == pytest.approx(0.5 + 1 / 6, rel=1e-15)
    assert c.right == pytest.approx(1.5, rel=1e-15)
    assert c.admissible and c.message() == "compatible"


def test_compatibility_boundary():
    c = compatibility_check(2, 1, 3, 2)
    assert c.left == 1.0 and not c.admissible
    assert "not < 1" in c.message()


def test_compatibility_large_n():
    c = compatibility_check(2, 1, 10, 2)
    assert c.left > 1 and not c.admissible
