import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_el.errors import BadParam, Delta2Violated, NonMonotoneDerivative
from orlicz_el.nfunction import (NFunction, builtin, check_delta2, check_ordering, conjugate,
                                 inverse, mo_indices, parse_nfunction, power_bounds)


def sq():
    return NFunction("t^2", lambda t: np.asarray(t, float) ** 2, lambda t: 2 * np.asarray(t, float))


# ---- builtin families -----------------------------------------------------

def test_power_normalization():
    assert builtin("power", p=2)(3.0) == pytest.approx(4.5)


def test_exp_family_values():
    assert builtin("exp_family", n=2)(1.0) == pytest.approx(math.e - 2, rel=1e-14)
    assert builtin("exp_family", n=3)(0.0) == 0.0


def test_exp_family_small_arguments_keep_relative_accuracy():
    phi = builtin("exp_family", n=3)
    t = 1e-6
    assert phi(t) == pytest.approx(t ** 3 / 6, rel=1e-6)


def test_exp_family_log_eval_beyond_float_range():
    phi = builtin("exp_family", n=2)
    assert phi.log_value(np.array([1e4]))[0] == pytest.approx(1e4, rel=1e-12)


@pytest.mark.parametrize("family,params", [("power", {"p": 1.0}), ("exp_family", {"n": 0}),
                                           ("log_perturbed", {"k": 3}), ("nope", {"p": 2})])
def test_bad_params(family, params):
    with pytest.raises(BadParam):
        builtin(family, **params)


def test_parse_specs():
    assert parse_nfunction("power(3)")(2.0) == pytest.approx(8 / 3)
    assert parse_nfunction("exp_family(n=2)")(1.0) == pytest.approx(math.e - 2)
    c = parse_nfunction("conjugate(power(3))")
    assert c(2.0) == pytest.approx((2 / 3) * 2 ** 1.5)
    with pytest.raises(BadParam):
        parse_nfunction("power[3]")


@pytest.mark.parametrize("spec", ["power(1.5)", "power(3)", "exp_family(2)", "exp_family(4)",
                                  "log_perturbed(1)", "log_perturbed(2)"])
def test_nfunction_invariants(spec):
    phi = parse_nfunction(spec)
    t = np.geomspace(1e-4, 50, 400)
    v = phi.eval(t)
    assert phi.eval(np.array([0.0]))[0] == 0.0
    assert np.all(np.diff(v) >= 0)
    mid = phi.eval(0.5 * (t[:-1] + t[1:]))
    assert np.all(mid <= 0.5 * (v[:-1] + v[1:]) * (1 + 1e-12))
    d = phi.deriv(t)
    assert np.all(np.diff(d) >= -1e-12 * d[1:])
    # the primitive of the derivative is the function
    from scipy.integrate import quad
    for x in (0.5, 3.0, 20.0):
        val, _ = quad(lambda s: float(phi.deriv(np.array([s]))[0]), 0, x, epsrel=1e-10, limit=200)
        assert val == pytest.approx(float(phi(x)), rel=1e-7)
    # N-function limits on the probe grid
    big = np.array([1e6])
    assert phi.log_value(big)[0] - math.log(1e6) > 5
    assert float(phi(1e-6)) / 1e-6 < 1e-3


def test_log_perturbed_principal_part():
    for k in (1, 2):
        phi = builtin("log_perturbed", k=k)
        u = np.array([math.e ** (2 * k) * 1.5, 1e3, 1e6])
        np.testing.assert_allclose(phi.eval(u), u ** 2 / np.log(u) ** k, rtol=1e-12)


# ---- inverse --------------------------------------------------------------

def test_inverse_examples():
    assert inverse(sq(), 4.0) == pytest.approx(2.0, rel=1e-12)
    assert inverse(sq(), 0.0) == 0.0
    phi = builtin("exp_family", n=2)
    x = inverse(phi, 1.0)
    assert 1 < x < 2
    assert math.exp(x) - 1 - x == pytest.approx(1.0, abs=1e-12)


def test_inverse_rejects_negative():
    with pytest.raises(BadParam):
        inverse(sq(), -1.0)


@given(st.floats(1e-8, 1e8))
def test_inverse_roundtrip(y):
    phi = builtin("exp_family", n=3)
    x = inverse(phi, y)
    assert abs(float(phi(x)) - y) <= 1e-12 * max(1.0, y)


# ---- conjugate ------------------------------------------------------------

def test_quadratic_self_conjugate_numerically():
    psi = conjugate(builtin("power", p=2).without_conjugate())
    y = np.linspace(0.01, 10, 200)
    np.testing.assert_allclose(psi.eval(y), y ** 2 / 2, rtol=1e-8)


def test_cubic_conjugate_numerically():
    psi = conjugate(builtin("power", p=3).without_conjugate())
    y = np.linspace(0.01, 10, 200)
    np.testing.assert_allclose(psi.eval(y), (2 / 3) * y ** 1.5, rtol=1e-6)


def test_exp2_conjugate():
    psi = conjugate(builtin("exp_family", n=2))
    s = np.linspace(0.01, 10, 200)
    np.testing.assert_allclose(psi.eval(s), (1 + s) * np.log1p(s) - s, rtol=1e-6)
    np.testing.assert_allclose(psi.deriv(s), np.log1p(s), rtol=1e-8)


def test_closed_conjugate_returned_directly():
    phi = builtin("power", p=3)
    assert conjugate(phi).name == "power(1.5)"
    assert conjugate(phi).known_conjugate().name == "power(3)"


def test_non_monotone_derivative_rejected():
    bad = NFunction("bad", lambda t: np.asarray(t, float) ** 2 / 2 + np.sin(np.asarray(t, float)),
                    lambda t: np.asarray(t, float) + np.cos(np.asarray(t, float)) * 5)
    with pytest.raises(NonMonotoneDerivative):
        conjugate(bad, domain_max=50.0)


@pytest.mark.parametrize("spec,dmax", [("power(1.5)", None), ("power(3)", None),
                                       ("exp_family(2)", None), ("exp_family(3)", None),
                                       ("log_perturbed(2)", None)])
def test_conjugate_involution(spec, dmax):
    phi = parse_nfunction(spec).without_conjugate()
    back = conjugate(conjugate(phi))
    t = np.geomspace(1e-2, 50, 100)
    np.testing.assert_allclose(back.eval(t), phi.eval(t), rtol=1e-5)


@pytest.mark.parametrize("spec", ["power(1.5)", "power(3)", "exp_family(2)", "log_perturbed(1)"])
def test_young_equality_case(spec):
    phi = parse_nfunction(spec)
    psi = conjugate(phi)
    x = np.geomspace(1e-2, 20, 60)
    y = phi.deriv(x)
    np.testing.assert_allclose(phi.eval(x) + psi.eval(y), x * y, rtol=1e-6)


@given(st.sampled_from(["power(1.5)", "power(2.5)", "exp_family(2)", "exp_family(3)", "log_perturbed(2)"]),
       st.floats(1e-4, 30), st.floats(1e-4, 1e3))
def test_young_inequality_property(spec, x, y):
    phi = parse_nfunction(spec)
    psi = conjugate(phi)
    lhs = x * y
    rhs = float(phi(x)) + float(psi(y))
    assert rhs - lhs >= -1e-9 * (1 + lhs)


# ---- indices --------------------------------------------------------------

@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_indices_exact_on_powers(p):
    idx = mo_indices(builtin("power", p=p))
    assert idx.alpha == pytest.approx(p, abs=1e-6)
    assert idx.beta == pytest.approx(p, abs=1e-6)


def test_exp_family_indices():
    idx = mo_indices(builtin("exp_family", n=2))
    assert idx.alpha == pytest.approx(2, abs=0.1)
    assert idx.beta > 100
    cidx = mo_indices(conjugate(builtin("exp_family", n=2)))
    assert cidx.beta == pytest.approx(2, abs=0.1)


@pytest.mark.parametrize("spec", ["power(1.5)", "power(2)", "power(3)", "exp_family(2)"])
def test_index_complementarity(spec):
    phi = parse_nfunction(spec)
    a = mo_indices(phi).alpha
    b = mo_indices(conjugate(phi)).beta
    assert abs(1 / a + 1 / b - 1) <= 0.05
    assert 0 <= a <= mo_indices(phi).beta + 1e-6


# ---- Delta_2 --------------------------------------------------------------

def test_delta2_square():
    for v in ("global", "at_infinity", "at_zero"):
        r = check_delta2(sq(), v)
        assert r.holds
        np.testing.assert_allclose(r.ratios, 4.0, rtol=1e-12)


def test_delta2_exp_fails_at_infinity():
    r = check_delta2(builtin("exp_family", n=2), "at_infinity")
    assert not r.holds
    assert r.probe_range[0] >= 1.0


def test_delta2_exp_conjugate_holds_at_infinity():
    r = check_delta2(conjugate(builtin("exp_family", n=2)), "at_infinity")
    assert r.holds
    assert r.sup_ratio <= 4.1


def test_delta2_bad_variant():
    with pytest.raises(BadParam):
        check_delta2(sq(), "sideways")


# ---- orderings ------------------------------------------------------------

def test_ordering_powers_essentially_stronger():
    r = check_ordering(builtin("power", p=1.5), builtin("power", p=2), "essentially_stronger")
    assert r.holds


def test_ordering_irreflexive():
    r = check_ordering(builtin("power", p=2), builtin("power", p=2), "essentially_stronger")
    assert not r.holds
    assert r.violations


def test_ordering_log_perturbed_pair():
    r = check_ordering(builtin("log_perturbed", k=2), builtin("log_perturbed", k=1), "essentially_stronger")
    assert r.holds


def test_ordering_stronger_and_completely_stronger():
    p2, p3 = builtin("power", p=2), builtin("power", p=3)
    assert check_ordering(p3, p2, "stronger").holds is False
    assert check_ordering(p2, p3, "stronger").holds
    cs = check_ordering(p2, p2, "completely_stronger")
    assert cs.holds and math.isfinite(cs.witness_K)


def test_ordering_witness_is_valid():
    a_fun, b_fun = builtin("power", p=1.5), builtin("power", p=2)
    r = check_ordering(a_fun, b_fun, "essentially_stronger")
    x = np.geomspace(r.witness_x0, r.witness_x0 * 1e6, 50)
    assert np.all(a_fun.eval(x) <= b_fun.eval(r.witness_a * x) * (1 + 1e-12))


# ---- power bounds ---------------------------------------------------------

def test_power_bounds_exact_power():
    assert power_bounds(sq(), 0.1) == pytest.approx(1.0, abs=1e-9)


def test_power_bounds_mixed_power():
    eta = NFunction("t2+t3", lambda t: np.asarray(t, float) ** 2 + np.asarray(t, float) ** 3,
                    lambda t: 2 * np.asarray(t, float) + 3 * np.asarray(t, float) ** 2)
    K = power_bounds(eta, 0.5)
    assert 1 <= K < math.inf
    g = np.geomspace(1e-3, 1e3, 41)
    t, u = np.meshgrid(g, g, indexing="ij")
    ratio = eta.eval(t * u) / eta.eval(u)
    hi = np.maximum(t ** 3.5, t ** 1.5)
    lo = np.minimum(t ** 3.5, t ** 1.5)
    assert np.all(ratio <= K * hi * (1 + 1e-9))
    assert np.all(ratio >= lo / K * (1 - 1e-9))


def test_power_bounds_exp_violates():
    with pytest.raises(Delta2Violated):
        power_bounds(builtin("exp_family", n=2), 0.5)


# ---- inequalities used downstream -----------------------------------------

@given(st.sampled_from([1.2, 1.5, 1.8, 2.5]), st.floats(0, 1e3))
def test_derivative_doubling(p0, x):
    phi0 = builtin("power", p=p0)
    assert x * float(phi0.deriv(np.array([x]))[0]) <= float(phi0(2 * x)) * (1 + 1e-12)


@given(st.sampled_from([1.2, 1.5, 1.8, 2.5]), st.floats(0, 1e3), st.floats(0, 1e3))
def test_derivative_subadditive_under_doubling(p0, a, b):
    d = builtin("power", p=p0).deriv
    lhs = float(d(np.array([a + b]))[0])
    rhs = float(d(np.array([2 * a]))[0] + d(np.array([2 * b]))[0])
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
