import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orlicz_parabolic.nfunction import (
    InvalidNFunctionError,
    _bisect_inverse,
    conjugate_G,
    conjugate_g,
    estimate_growth_bounds,
    eval_G,
    from_spec,
    make_piecewise,
    make_power,
    make_power_log,
    make_power_modular,
    make_tabulated,
    normalize,
    verify_lemma_p1,
)

import oracles

CATALOG = {
    "power-2.5": lambda: make_power(2.5),
    "power-3": lambda: make_power(3),
    "power-4": lambda: make_power(4),
    "power-log": lambda: make_power_log(2, 1, math.e),
    "piecewise": lambda: make_piecewise(1, 2, 4, 1),
}


# power -------------------------------------------------------------------------


def test_power_value():
    assert make_power(3).g(2.0) == 4.0


def test_power_bounds():
    nf = make_power(3)
    assert (nf.g0, nf.g1) == (2.0, 2.0)
    assert nf.admissible


def test_power_linear_case_warns_and_flags_oracle():
    with pytest.warns(UserWarning, match="oracle"):
        nf = make_power(2)
    assert nf.oracle and not nf.admissible
    s = np.linspace(0, 5, 11)
    np.testing.assert_array_equal(nf.g(s), s)


def test_power_oracle_flag_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert make_power(1.5, oracle=True).oracle


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0])
def test_power_rejects_small_p(p):
    with pytest.raises(InvalidNFunctionError):
        make_power(p)


def test_power_modular_primitive_is_pure_power():
    F = make_power_modular(2.5)
    t = np.array([0.3, 1.0, 2.0])
    np.testing.assert_allclose(F.G(t), t**2.5, rtol=1e-15)
    assert F.g0 == pytest.approx(1.5)


# power-log ---------------------------------------------------------------------


def test_power_log_value_at_one():
    nf = make_power_log(2, 1, math.e)
    assert nf.g(1.0) == pytest.approx(math.log(1 + math.e), rel=1e-15)
    assert nf.g(1.0) == pytest.approx(1.3133, abs=1e-4)


def test_power_log_certified_bounds():
    nf = make_power_log(2, 1, math.e)
    lo, hi = estimate_growth_bounds(nf)
    assert (nf.g0, nf.g1) == (2.0, 3.0)
    assert 2.0 - 1e-9 <= lo <= hi <= 3.0 + 1e-9


@given(st.floats(0.1, 10.0), st.floats(math.e, 50.0))
def test_power_log_vanishes_at_zero(gamma, eta):
    nf = make_power_log(2, gamma, eta)
    assert nf.g(0.0) == 0.0
    assert nf.g(1e-8) < 1e-14


@pytest.mark.parametrize("eta", [0.5, 1.0, 2.7])
def test_power_log_rejects_small_eta(eta):
    with pytest.raises(InvalidNFunctionError, match="eta"):
        make_power_log(2, 1, eta)


def test_power_log_rejects_bad_beta_gamma():
    with pytest.raises(InvalidNFunctionError):
        make_power_log(1.0, 1, math.e)
    with pytest.raises(InvalidNFunctionError):
        make_power_log(2.0, 0, math.e)


# piecewise ---------------------------------------------------------------------


def test_piecewise_coefficients_match_hand_solution():
    nf = make_piecewise(1, 2, 4, 1)
    # c2 t**4 + c3 with c2 = c3 = 1/2 above t0
    assert nf.g(2.0) == pytest.approx(0.5 * 16 + 0.5, rel=1e-15)
    assert nf.g(1.0) == 1.0
    h = 1e-7
    left = (nf.g(1.0) - nf.g(1.0 - h)) / h
    right = (nf.g(1.0 + h) - nf.g(1.0)) / h
    assert left == pytest.approx(2.0, rel=1e-6)
    assert right == pytest.approx(2.0, rel=1e-6)
    assert nf.dg(1.0) == 2.0


def test_piecewise_bounds_from_exponents():
    nf = make_piecewise(1, 2, 4, 1)
    assert (nf.g0, nf.g1) == (2.0, 4.0)
    nf = make_piecewise(3, 5, 2, 0.5)
    assert (nf.g0, nf.g1) == (2.0, 5.0)


def test_piecewise_lower_branch_exact():
    nf = make_piecewise(1.5, 2.5, 4, 2.0)
    t = np.linspace(0, 2.0, 9)
    np.testing.assert_array_equal(nf.g(t), 1.5 * t**2.5)


def test_piecewise_equal_exponents_is_power():
    nf = make_piecewise(2.0, 3.0, 3.0, 1.0)
    assert nf.kind == "power" and nf.admissible
    t = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(nf.g(t), 2.0 * t**3, rtol=1e-15)


def test_piecewise_rejects_bad_parameters():
    for args in [(0, 2, 4, 1), (1, 1, 4, 1), (1, 2, 4, 0)]:
        with pytest.raises(InvalidNFunctionError):
            make_piecewise(*args)


# primitive -----------------------------------------------------------------------


def test_G_power_closed_form():
    assert eval_G(make_power(3), 2.0) == pytest.approx(8.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_G_at_zero(name):
    assert eval_G(CATALOG[name](), 0.0) == 0.0


@pytest.mark.parametrize("t", [1.0, 0.01, 7.5])
def test_G_power_log_against_extended_precision(t):
    nf = make_power_log(2, 1, math.e)
    ref = oracles.power_log_G(2, 1, math.e, t)
    assert eval_G(nf, t) == pytest.approx(ref, rel=1e-10)


def test_G_vectorized_rule_matches_oracle():
    nf = make_power_log(2.5, 0.7, 4.0)
    t = np.logspace(-3, 3, 13)
    ref = np.array([oracles.power_log_G(2.5, 0.7, 4.0, ti) for ti in t])
    np.testing.assert_allclose(eval_G(nf, t), ref, rtol=1e-10)


def test_G_piecewise_closed_form_matches_quadrature():
    import scipy.integrate as si

    nf = make_piecewise(1, 2, 4, 1)
    for t in [0.5, 1.0, 2.5]:
        ref, _ = si.quad(lambda s: nf.g(s), 0, t, epsrel=1e-13, points=[1.0] if t > 1 else None)
        assert eval_G(nf, t) == pytest.approx(ref, rel=1e-12)


def test_G_rejects_negative():
    with pytest.raises(ValueError):
        eval_G(make_power(3), -1.0)


@pytest.mark.parametrize("name", sorted(CATALOG))
@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3))
def test_G_midpoint_convex(name, a, b):
    nf = CATALOG[name]()
    mid = eval_G(nf, 0.5 * (a + b))
    assert mid <= 0.5 * (eval_G(nf, a) + eval_G(nf, b)) * (1 + 1e-12)


# conjugates ----------------------------------------------------------------------


def test_conjugate_power():
    assert conjugate_g(make_power(3), 4.0) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_conjugate_at_zero(name):
    assert conjugate_g(CATALOG[name](), 0.0) == 0.0


def test_conjugate_power_log_round_trip():
    nf = make_power_log(2, 1, math.e)
    assert conjugate_g(nf, nf.g(1.7)) == pytest.approx(1.7, abs=1e-8)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_conjugate_round_trip_log_spaced(name):
    nf = CATALOG[name]()
    t = np.logspace(-3, 3, 100)
    np.testing.assert_allclose(conjugate_g(nf, nf.g(t)), t, rtol=1e-8)


def test_conjugate_against_brute_force():
    nf = make_piecewise(1, 2, 4, 1)
    for s in [0.3, 1.0, 4.0]:
        ref = oracles.inverse_brute(nf.g, s, 3.0)
        assert conjugate_g(nf, s) == pytest.approx(ref, abs=2e-6)


def test_conjugate_of_flat_law_takes_sup():
    # a law with a plateau: sup of the sublevel set sits at the plateau's right end
    g = lambda t: np.where(t < 1, t, np.where(t < 2, 1.0, t - 1.0))
    out = _bisect_inverse(g, np.array([1.0]))
    assert out[0] == pytest.approx(2.0, abs=1e-12)


def test_conjugate_bounded_law_is_internal_error():
    with pytest.raises(RuntimeError, match="bounded"):
        _bisect_inverse(lambda t: np.minimum(t, 1.0), np.array([5.0]))


def test_G_conj_power_closed_form_vs_quadrature():
    nf = make_power(3)
    for s in [0.5, 1.0, 3.0]:
        ref = oracles.conjugate_G_quad(lambda x: x**0.5, s)
        assert conjugate_G(nf, s) == pytest.approx(ref, rel=1e-12)
    # normalized power p=3 at t=1: G~(g(1)) = G~(1) = 2/3 = g1 G(1)
    assert conjugate_G(nf, nf.g(1.0)) == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert nf.g1 * eval_G(nf, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-14)


def test_G_conj_power_log_vs_quadrature_of_brute_inverse():
    nf = make_power_log(2, 1, math.e)
    s = 2.0
    ref = oracles.conjugate_G_quad(lambda x: conjugate_g(nf, x), s)
    assert conjugate_G(nf, s) == pytest.approx(ref, rel=1e-9)
    assert conjugate_G(nf, np.array([s]))[0] == pytest.approx(ref, rel=1e-9)


# growth bounds ------------------------------------------------------------------


def test_growth_bounds_power():
    lo, hi = estimate_growth_bounds(make_power(3))
    assert lo == pytest.approx(2.0, abs=1e-6) and hi == pytest.approx(2.0, abs=1e-6)


def test_growth_bounds_piecewise():
    lo, hi = estimate_growth_bounds(make_piecewise(1, 2, 4, 1))
    assert lo == pytest.approx(2.0, abs=1e-6) and hi == pytest.approx(4.0, abs=1e-6)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_growth_bounds_contain_declared(name):
    nf = CATALOG[name]()
    assert estimate_growth_bounds(nf).contains(nf.g0, nf.g1)


def test_growth_grid_requirements():
    with pytest.raises(ValueError):
        estimate_growth_bounds(make_power(3), np.logspace(-3, 3, 20000))
    with pytest.raises(ValueError):
        estimate_growth_bounds(make_power(3), np.logspace(-6, 6, 500))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_growth_ratio_nan_is_invalid():
    # t**59 overflows at the top of the grid
    with pytest.raises(InvalidNFunctionError):
        estimate_growth_bounds(make_power(60))


# normalization ------------------------------------------------------------------


def test_normalize_power():
    nf = normalize(make_power(3), 2.0)
    assert nf.lam == 4.0 and nf.g(1.0) == 1.0
    s = np.array([0.5, 3.0])
    np.testing.assert_allclose(nf.g(s), s**2, rtol=1e-15)
    assert (nf.g0, nf.g1) == (2.0, 2.0)


def test_normalize_power_log():
    nf = normalize(make_power_log(2, 1, math.e), 1.0)
    assert nf.lam == pytest.approx(math.log(1 + math.e), rel=1e-15)
    assert nf.g(1.0) == 1.0 and nf.normalized


def test_normalize_idempotent():
    nf = normalize(make_power_log(2, 1, math.e), 1.0)
    assert normalize(nf, 1.0) == nf


def test_normalize_transforms_companions():
    base = make_power_log(2, 1, math.e)
    nf = normalize(base, 1.7)
    lam = base.g(1.7)
    t = 0.9
    assert nf.G(t) == pytest.approx(base.G(1.7 * t) / (1.7 * lam), rel=1e-9)
    assert nf.g_conj(0.8) == pytest.approx(base.g_conj(lam * 0.8) / 1.7, rel=1e-12)


def test_normalize_rejects_bad_anchor():
    with pytest.raises(ValueError):
        normalize(make_power(3), 0.0)


@pytest.mark.parametrize("name", sorted(CATALOG))
@given(s0=st.floats(1e-3, 1e3))
def test_normalize_exact_at_one(name, s0):
    nf = normalize(CATALOG[name](), s0)
    assert nf.g(1.0) == pytest.approx(1.0, abs=4e-16)


# inequality audit ------------------------------------------------------------------


def test_lemma_power_zero_violations():
    rep = verify_lemma_p1(make_power(3), 10_000, seed=0)
    assert rep.ok and rep.total_violations == 0
    # equality on the left of the t g(t) sandwich: G = t g(t) / p
    assert abs(rep.worst_slack["c.lower"]) < 1e-12
    assert rep.worst_slack["c.upper"] > 0.5


def test_lemma_unit_scaling_is_equality():
    nf = make_power_log(2, 1, math.e)
    t = np.logspace(-3, 3, 50)
    for fn in (nf.g, nf.G, nf.g_conj, nf.G_conj):
        np.testing.assert_array_equal(fn(1.0 * t), fn(t))


def test_lemma_detects_wrong_bounds():
    wrong = replace(make_power(3), g0=2.3, g1=2.5)
    rep = verify_lemma_p1(wrong, 2000, seed=1)
    assert rep.total_violations > 0 and not rep.ok


def test_lemma_report_shape():
    rep = verify_lemma_p1(make_piecewise(1, 2, 4, 1), 500, seed=3)
    keys = {f"{c}.{s}" for c in "abcdeg" for s in ("lower", "upper")} | {"f.upper"}
    assert set(rep.worst_slack) == keys
    d = rep.as_dict()
    assert d["samples"] == 500 and d["ok"]


@given(seed=st.integers(0, 2**31 - 1))
def test_lemma_random_seeds(seed):
    rep = verify_lemma_p1(CATALOG["power-log"](), 300, seed=seed)
    assert rep.ok


# tabulated and config-dict constructors ---------------------------------------------------


def test_tabulated_reproduces_power():
    t = np.logspace(-2, 2, 41)
    nf = make_tabulated(t, t**2)
    s = np.array([0.013, 0.5, 7.0, 90.0, 1e3])
    np.testing.assert_allclose(nf.g(s), s**2, rtol=1e-10)
    assert nf.g0 == pytest.approx(2.0, abs=1e-9) and nf.g1 == pytest.approx(2.0, abs=1e-9)
    assert nf.g(0.0) == 0.0


def test_tabulated_rejects_non_monotone():
    with pytest.raises(InvalidNFunctionError):
        make_tabulated([1, 2, 3], [1, 3, 2])


def test_from_spec_kinds():
    assert from_spec("power", p=3) == make_power(3)
    assert from_spec("piecewise", c1=1, beta=2, gamma=4, t0=1) == make_piecewise(1, 2, 4, 1)
    assert from_spec("power-modular", q=2).lam == 0.5
    with pytest.raises(InvalidNFunctionError):
        from_spec("exponential", a=1)


def test_scalar_and_array_agree():
    nf = make_power_log(2, 1, math.e)
    t = np.array([0.2, 1.3, 40.0])
    np.testing.assert_allclose(nf.G(t), [nf.G(float(x)) for x in t], rtol=1e-10)
    assert isinstance(nf.G(1.0), float)


def test_growth_index_power_exact():
    assert make_power(3).growth_index(7.3) == 2.0
    assert normalize(make_power(4), 3.0).growth_index(0.2) == 3.0
    off = replace(normalize(make_power(3), 2.0), lam=2.0)  # g(1) = 2, not normalized
    assert off.growth_index(5.0) == pytest.approx(2.0 + math.log(2.0) / math.log(5.0), rel=1e-12)


@given(st.floats(1e-6, 1e6).filter(lambda t: abs(t - 1) > 1e-3))
def test_growth_index_within_bounds(t):
    for nf in (normalize(make_power_log(2, 1, math.e)), normalize(make_piecewise(1, 2, 4, 1))):
        k = nf.growth_index(t)
        assert k == pytest.approx(math.log(nf.g(t)) / math.log(t), rel=1e-12)
        assert nf.g0 - 1e-9 <= k <= nf.g1 + 1e-9



def test_growth_index_rounding_snap_keeps_real_violations():
    # pure-power segment of a shifted piecewise law: the ratio is exactly g0
    nf = normalize(make_piecewise(1, 2, 4, 3.0))
    for t in (1.0 + 1e-9, 1.0001, 1.01, 2.5):
        assert nf.growth_index(t) == nf.g0
    # a law with a wrongly declared lower bound is not masked
    wrong = replace(make_power_log(2, 1, math.e), g0=2.5)
    assert normalize(wrong).growth_index(2.0) < 2.5 - 1e-3
