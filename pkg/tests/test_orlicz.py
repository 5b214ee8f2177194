import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from orlicz_el.errors import BadParam, DomainOverflow
from orlicz_el.nfunction import NFunction, builtin, inverse
from orlicz_el.orlicz import (GridFunction, amemiya_rows, luxemburg_rows, decompose, derivative, equivalence_constants,
                              from_csv, holder_check, log_modular, luxemburg_norm, modular,
                              modular_coercivity_sweep, one_norm, orlicz_norm, sobolev_check,
                              sobolev_norm, to_csv)

SQ = NFunction("t^2", lambda t: np.asarray(t, float) ** 2, lambda t: 2 * np.asarray(t, float))
P2 = builtin("power", p=2)
E2 = builtin("exp_family", n=2)


def sine(N=256, T=1.0, amp=1.0, offset=0.0):
    return GridFunction.from_function(lambda t: offset + amp * np.sin(2 * np.pi * t / T), T, N)


def const(c, N=64, T=1.0):
    return GridFunction.constant(c, T, N)


values = arrays(np.float64, st.integers(4, 24), elements=st.floats(-50, 50, allow_subnormal=False))


# ---- GridFunction ---------------------------------------------------------

def test_grid_function_validation():
    with pytest.raises(BadParam):
        GridFunction(1.0, [1.0, 2.0, 3.0])
    with pytest.raises(BadParam):
        GridFunction(0.0, np.zeros(8))
    u = sine(16)
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0


def test_csv_roundtrip(tmp_path):
    u = GridFunction(2.0, np.random.default_rng(0).normal(size=(12, 2)))
    text = to_csv(u)
    assert text.splitlines()[0] == "t,x1,x2"
    assert "\r" not in text
    v = from_csv(text)
    assert v.period_T == pytest.approx(2.0)
    np.testing.assert_array_equal(v.values, u.values)


def test_csv_rejects_bad_input():
    with pytest.raises(BadParam):
        from_csv("s,x1\n0,1\n1,1\n2,1\n3,1\n")
    with pytest.raises(BadParam):
        from_csv("t,x1\n0,1\n0.25,1\n0.6,1\n0.75,1\n")


# ---- modular --------------------------------------------------------------

def test_modular_constant():
    assert modular(SQ, const(3.0, T=2.0)) == pytest.approx(2.0 * 9.0)


def test_modular_sine():
    assert modular(SQ, sine()) == pytest.approx(0.5, abs=1e-6)


def test_modular_zero_exp():
    assert modular(E2, const(0.0)) == 0.0


def test_modular_overflow_and_log_modular():
    u = const(1000.0)
    with pytest.raises(DomainOverflow):
        modular(E2, u)
    assert log_modular(E2, u) == pytest.approx(1000.0 - 0.0, rel=1e-9)


@given(values, values, st.floats(0, 1))
def test_modular_convexity(a, b, theta):
    n = min(len(a), len(b))
    u, v = GridFunction(1.0, a[:n]), GridFunction(1.0, b[:n])
    phi = builtin("power", p=1.7)
    mix = u * theta + v * (1 - theta)
    lhs = modular(phi, mix)
    rhs = theta * modular(phi, u) + (1 - theta) * modular(phi, v)
    assert lhs <= rhs + 1e-9 * max(1.0, rhs)


# ---- norms ----------------------------------------------------------------

def test_luxemburg_examples():
    assert luxemburg_norm(SQ, const(0.0)) == 0.0
    assert luxemburg_norm(SQ, const(2.5)) == pytest.approx(2.5, rel=1e-10)
    u = sine(64, offset=0.3)
    assert luxemburg_norm(E2, u * 3) == pytest.approx(3 * luxemburg_norm(E2, u), rel=1e-10)


def test_amemiya_constant_one():
    r = orlicz_norm(P2, const(1.0))
    assert r.amemiya == pytest.approx(math.sqrt(2), rel=1e-10)
    assert r.k_star == pytest.approx(math.sqrt(2), rel=1e-4)


def test_zero_norm_report():
    r = orlicz_norm(E2, const(0.0))
    assert (r.luxemburg, r.amemiya, r.k_star, r.modular_at_unit) == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("phi", [P2, E2, builtin("power", p=1.5), builtin("log_perturbed", k=1)])
def test_unit_ball_modular(phi):
    u = sine(32, amp=2.0, offset=0.5)
    r = orlicz_norm(phi, u)
    assert r.modular_at_unit == pytest.approx(1.0, abs=1e-10)


def test_luxemburg_below_amemiya_random(rng):
    # 10**3 random grid functions per family, evaluated as one batch
    for phi in (P2, E2):
        mags = np.abs(np.exp(rng.uniform(-4, 4, (1000, 1))) * rng.normal(size=(1000, 8)))
        lux = luxemburg_rows(phi, mags, 1 / 8)
        am, _ = amemiya_rows(phi, mags, 1 / 8, lux)
        assert np.all(lux <= am * (1 + 1e-12))
        assert np.all(am <= 2 * lux + 1e-9)
        # the batch agrees with the single-function path
        for j in (0, 500, 999):
            r = orlicz_norm(phi, GridFunction(1.0, mags[j]))
            assert r.amemiya == pytest.approx(am[j], rel=1e-10)


@settings(max_examples=40)
@given(values, st.floats(-3, 3))
def test_amemiya_upper_bound(a, logk):
    u = GridFunction(1.0, a)
    if not np.any(a):
        return
    for phi in (P2, E2):
        am = orlicz_norm(phi, u).amemiya
        k = math.exp(logk) / luxemburg_norm(phi, u)
        with np.errstate(over="ignore"):
            bound = (1 + modular(phi, u * k)) / k if np.isfinite(log_modular(phi, u * k)) else math.inf
        assert am <= bound * (1 + 1e-10)


@settings(max_examples=30)
@given(values, values, st.floats(0.1, 10))
def test_norm_homogeneity_and_triangle(a, b, c):
    n = min(len(a), len(b))
    u, v = GridFunction(1.0, a[:n]), GridFunction(1.0, b[:n])
    for phi in (P2, E2):
        nu, nv = orlicz_norm(phi, u).amemiya, orlicz_norm(phi, v).amemiya
        assert orlicz_norm(phi, u * c).amemiya == pytest.approx(c * nu, rel=1e-8, abs=1e-12)
        assert orlicz_norm(phi, u + v).amemiya <= (nu + nv) * (1 + 1e-8) + 1e-12
        lu, lv = luxemburg_norm(phi, u), luxemburg_norm(phi, v)
        assert luxemburg_norm(phi, u * c) == pytest.approx(c * lu, rel=1e-8, abs=1e-12)
        assert luxemburg_norm(phi, u + v) <= (lu + lv) * (1 + 1e-8) + 1e-12


# ---- decomposition and derivative -------------------------------------------

def test_decompose_examples():
    m, t = decompose(const(2.0))
    assert m[0] == 2.0 and not np.any(t.values)
    m, t = decompose(sine(64))
    assert abs(m[0]) < 1e-15
    np.testing.assert_allclose(t.values, sine(64).values, atol=1e-15)
    m, t = decompose(sine(64, offset=1.0))
    assert m[0] == pytest.approx(1.0)
    np.testing.assert_allclose(t.values, sine(64).values, atol=1e-14)


def test_derivative_examples():
    assert not np.any(derivative(const(1.5)).values)
    hat = GridFunction(1.0, np.r_[np.arange(5), np.arange(3, 0, -1)] / 8.0)
    np.testing.assert_allclose(derivative(hat).values[:, 0], [1, 1, 1, 1, -1, -1, -1, -1])
    errs = []
    for N in (64, 128, 256):
        errs.append(abs(modular(SQ, derivative(sine(N))) - (2 * np.pi) ** 2 / 2))
    assert errs[-1] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


@given(values)
def test_derivative_sums_to_zero(a):
    d = derivative(GridFunction(1.0, a))
    assert abs(np.sum(d.values)) <= 1e-9 * (1 + np.sum(np.abs(d.values)))


# ---- inequalities -----------------------------------------------------------

def test_holder_zero():
    r = holder_check(sine(32), const(0.0, 32), P2)
    assert r.lhs == r.rhs == r.slack == 0 and r.passed


def test_holder_cauchy_schwarz():
    u = sine(128)
    r = holder_check(u, u, P2)
    assert r.lhs == pytest.approx(0.5, rel=1e-12)
    assert r.passed and r.rhs >= r.lhs


def test_holder_random_exp(rng):
    for _ in range(100):
        u = GridFunction(1.0, rng.normal(size=(16, 1)) * 3)
        v = GridFunction(1.0, rng.normal(size=(16, 1)) * 3)
        assert holder_check(u, v, E2).passed


def test_sobolev_zero_and_sine():
    s, w = sobolev_check(const(0.0), SQ)
    assert s.slack == 0 and w.slack == 0 and s.passed and w.passed
    s, w = sobolev_check(sine(256), SQ)
    assert s.slack > 0 and w.slack > 0


def test_sobolev_random_smooth(rng):
    for T in (0.5, 1.0, 2.0):
        for _ in range(30):
            c = rng.normal(size=4)
            u = GridFunction.from_function(
                lambda t: c[0] + c[1] * np.sin(2 * np.pi * t / T) + c[2] * np.cos(4 * np.pi * t / T)
                + c[3] * np.sin(6 * np.pi * t / T), T, 32)
            s, w = sobolev_check(u, E2)
            assert s.passed and w.passed


def test_sobolev_constant_scale_hook():
    u = const(5.0, 32, 0.5) + GridFunction.from_function(lambda t: 1e-6 * np.sin(4 * np.pi * t), 0.5, 32)
    assert sobolev_check(u, E2)[0].passed
    s, _ = sobolev_check(u, E2, constant_scale=0.5)
    assert not s.passed


def test_equivalence_constants(rng):
    for T in (0.5, 1.0, 2.0):
        for phi in (P2, E2):
            c3, c4 = equivalence_constants(phi, T)
            assert one_norm(phi, T) > 0
            assert c4 == pytest.approx(max(1.0, float(inverse(phi, 1 / T))))
            for _ in range(20):
                u = GridFunction(T, rng.normal(size=(16, 1)) * math.exp(rng.uniform(-3, 3)))
                mean, _ = decompose(u)
                side = abs(mean[0]) + orlicz_norm(phi, derivative(u)).amemiya
                w = sobolev_norm(phi, u)
                assert w <= c3 * side * (1 + 1e-9)
                assert side <= c4 * w * (1 + 1e-9)


# ---- modular coercivity -----------------------------------------------------

# The ratio grows like (s A)**(alpha - p0); A only shifts where the growth
# becomes visible, so power-type pairs are probed at a large base amplitude.
@pytest.mark.parametrize("phi,amp", [(E2, 1.0), (P2, 1e16)])
@pytest.mark.parametrize("p0", [1.2, 1.5, 1.8])
@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_modular_coercivity(phi, amp, p0, k):
    u0 = GridFunction.from_function(lambda t: amp * (1 + 0.5 * np.sin(2 * np.pi * t)), 1.0, 64)
    sw = modular_coercivity_sweep(phi, builtin("power", p=p0), u0, k)
    assert sw.eventually_increasing()
    assert sw.top_log_ratio > math.log(1e3)


def test_coercivity_zero_rejected():
    with pytest.raises(BadParam):
        modular_coercivity_sweep(P2, P2, const(0.0), 1.0)
