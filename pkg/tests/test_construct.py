import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from orlicz_el.construct import (build_psi_star, find_violation_sequence, integrate_psi_star,
                                 phi_star_from_indices)
from orlicz_el.errors import BadParam, IndexViolated, MalformedSequence, NoViolationFound
from orlicz_el.nfunction import builtin, check_delta2
from orlicz_el.probes import ProbeConfig


def psi_exp(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


THRESHOLD = 1 / (2 * math.log(2))  # psi(2x) > 2 psi(x) iff x < this


def primitive(x):
    return quad(lambda s: float(psi_exp(s)), 0, x, epsabs=0, epsrel=1e-13, limit=400)[0]


def test_identity_derivative_has_no_violation():
    with pytest.raises(NoViolationFound):
        find_violation_sequence(lambda x: np.asarray(x, float), 5)


def test_depth_zero():
    assert find_violation_sequence(psi_exp, 0) == []
    with pytest.raises(BadParam):
        find_violation_sequence(psi_exp, -1)


@pytest.mark.parametrize("depth", [1, 3, 5])
def test_sequence_properties(depth):
    seq = find_violation_sequence(psi_exp, depth)
    assert len(seq) == depth
    x = np.array(seq)
    assert np.all(x < THRESHOLD) and np.all(x > 0)
    assert np.all(psi_exp(2 * x) > 2 * psi_exp(x))
    assert np.all(2 * x[1:] < x[:-1])


def test_scan_stops_at_floor():
    seq = find_violation_sequence(psi_exp, 10_000)
    assert 0 < len(seq) < 10_000


def test_malformed_sequences():
    seq = find_violation_sequence(psi_exp, 3)
    with pytest.raises(MalformedSequence):
        build_psi_star(psi_exp, [seq[0], seq[0] * 0.6])
    with pytest.raises(MalformedSequence):
        build_psi_star(psi_exp, [0.9])  # no doubling violation above the threshold
    with pytest.raises(MalformedSequence):
        build_psi_star(psi_exp, [-0.1])


def test_empty_sequence_is_identity():
    pw = build_psi_star(psi_exp, [])
    x = np.geomspace(1e-3, 10, 50)
    np.testing.assert_array_equal(pw(x), psi_exp(x))
    Psi = integrate_psi_star(pw)
    for v in (0.3, 2.0):
        assert float(Psi(v)) == pytest.approx(primitive(v), rel=1e-10)


@pytest.fixture(scope="module")
def star5():
    seq = find_violation_sequence(psi_exp, 5)
    pw = build_psi_star(psi_exp, seq)
    return seq, pw, integrate_psi_star(pw)


def test_half_value_property(star5):
    seq, pw, _ = star5
    for xn in seq:
        a, b = pw(np.array([xn, 2 * xn]))
        assert abs(a - 0.5 * b) <= 1e-12 * b


def test_domination_and_monotonicity(star5, rng):
    seq, pw, _ = star5
    bps = list(pw.breakpoints)
    for hi, lo in zip(bps[:-1], bps[1:]):
        x = np.sort(rng.uniform(lo, hi, 1000))
        assert np.all(pw(x) >= psi_exp(x))
        assert np.all(np.diff(pw(x)) >= 0)
    above = np.geomspace(bps[0], 100, 200)
    np.testing.assert_array_equal(pw(above), psi_exp(above))
    grid = np.sort(np.concatenate([np.geomspace(pw.cut * 1e-3, 10, 4000), np.array(bps)]))
    assert np.all(np.diff(pw(grid)) >= 0)


def test_ratio_bound(star5):
    seq, pw, _ = star5
    x = np.geomspace(pw.cut * 1e-3, seq[0], 20_000)
    r = pw(2 * x) / pw(x)
    assert np.max(r) <= 4 + 1e-9


def test_primitive_offset_constant_above(star5):
    seq, pw, Psi = star5
    x = np.geomspace(2 * seq[0], 50, 12)
    diff = np.array([float(Psi(v)) - primitive(v) for v in x])
    assert np.ptp(diff) <= 1e-9 * max(1.0, abs(diff[0]))
    expected = quad(lambda s: float(pw(np.array([s]))[0] - psi_exp(s)), 0, 2 * seq[0],
                    points=list(pw.breakpoints), limit=400, epsabs=1e-15)[0]
    assert diff[0] == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_primitive_dominates_and_is_equivalent(star5):
    seq, pw, Psi = star5
    x = np.geomspace(pw.cut, 30, 40)
    Pstar = Psi.eval(x)
    P = np.array([primitive(v) for v in x])
    assert np.all(Pstar >= P * (1 - 1e-10))
    for a in (1.1, 2.0, 10.0):
        big = np.geomspace(2 * seq[0], 1e4, 60)
        ok = Psi.eval(big) <= a * np.array([primitive(v) for v in big])
        # from some probe on, the inequality holds for the rest of the grid
        assert ok[-1]
        first = np.argmax(ok)
        assert np.all(ok[first:])


def test_psi_star_delta2_scan(star5):
    _, pw, Psi = star5
    # below the cut Psi* is exactly quadratic, so the bottom decade is flat
    probe = ProbeConfig(lo=pw.cut * 1e-3, hi=1e2, points=129)
    for variant in ("at_zero", "global"):
        r = check_delta2(Psi, variant, probe)
        assert r.holds
    assert check_delta2(Psi, "at_zero", probe).sup_ratio <= 4 + 1e-9


@settings(max_examples=10)
@given(st.integers(1, 6), st.floats(0.3, 5.0))
def test_construction_properties_random_depth(depth, x_start):
    seq = find_violation_sequence(psi_exp, depth, x_start=x_start)
    pw = build_psi_star(psi_exp, seq)
    x = np.geomspace(pw.cut, 2 * seq[0], 2000)
    v = pw(x)
    assert np.all(np.diff(v) >= 0)
    assert np.all(v >= psi_exp(x))
    for xn in seq:
        a, b = pw(np.array([xn, 2 * xn]))
        assert abs(a - 0.5 * b) <= 1e-12 * b
    xr = x[x <= seq[0]]
    assert np.max(pw(2 * xr) / pw(xr)) <= 4 + 1e-9


def test_nfunction_input_uses_primitive():
    phi = builtin("exp_family", n=2)
    # exp(t) - 1 satisfies psi(2x) > 2 psi(x) for every x > 0
    seq = find_violation_sequence(phi, 2)
    pw = build_psi_star(phi, seq)
    Psi = integrate_psi_star(pw)
    x = 4 * seq[0]
    off = float(Psi(x)) - float(phi(x))
    off2 = float(Psi(2 * x)) - float(phi(2 * x))
    assert off == pytest.approx(off2, rel=1e-9, abs=1e-12)


# ---- submultiplicative minorant ---------------------------------------------

def test_phi_star_square():
    K, star = phi_star_from_indices(builtin("power", p=2), 1.5)
    assert K == pytest.approx(1.0, rel=1e-9)
    assert K <= 1.0
    assert float(star(2.0)) == pytest.approx(K * 2 ** 1.5)


def test_phi_star_exp3_fresh_probes(rng):
    phi = builtin("exp_family", n=3)
    K, star = phi_star_from_indices(phi, 2.0)
    assert K > 0
    r = np.exp(rng.uniform(0, math.log(1e8), 10_000))
    s = np.exp(rng.uniform(math.log(1e-8), math.log(1e8), 10_000))
    lhs = phi.log_value(r * s)
    rhs = math.log(K) + 2 * np.log(r) + phi.log_value(s)
    assert np.all(lhs >= rhs - 1e-12 * np.abs(rhs))


def test_phi_star_index_violation():
    with pytest.raises(IndexViolated):
        phi_star_from_indices(builtin("exp_family", n=2), 2.5)
    with pytest.raises(BadParam):
        phi_star_from_indices(builtin("exp_family", n=2), 1.0)
