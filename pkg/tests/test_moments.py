import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rflab.core import (
    CoefficientSeq, ProductSet, RandomConstant, evaluate_grid, full_set, interval_set,
    plus_signs, sample_sign_ensemble,
)
from rflab.errors import ArgumentError, InfiniteRatio, PreconditionError
from rflab.moments import (
    bilinear_moment, counterexample_coeffs, counterexample_coeffs_exact, counterexample_report,
    distributional_ratio, khinchin_moment, log_moment, loglog_slope,
)

# int_T |log(sqrt(2)|cos 2 pi theta|)| d theta; scipy.integrate.quad and a
# 30-digit mpmath quadrature agree on every printed digit
LOG_COS_INTEGRAL = 0.5831218080616374

# log int_{E_N} |f_N|^2 and log ratio for C_param = 5/2, from 50-digit mpmath
# after the substitution theta = w u (direct quadrature over the tiny interval
# is unreliable in mpmath)
COUNTEREXAMPLE_ORACLE = {
    1: (-8.2710418734242642, 7.290212620412538),
    4: (-148.9723579201348, 147.34465733176585),
    8: (-615.77479632532655, 613.80832579136199),
    16: (-2508.7309647976158, 2506.4218258121904),
    32: (-10133.972967459802, 10131.319207870064),
}


def unit_grid_poly(seed, degree, S, m):
    gen = np.random.default_rng(seed)
    c = gen.normal(size=degree + 1) + 1j * gen.normal(size=degree + 1)
    coeffs = CoefficientSeq(0, c / np.linalg.norm(c))
    return evaluate_grid(coeffs, sample_sign_ensemble(seed, S, (0, degree)), m)


def test_khinchin_exact_at_two():
    m = khinchin_moment(CoefficientSeq(0, [3.0, 4.0]), 2, 0, 1)
    assert m.value == 5.0 and m.standard_error == 0.0


@pytest.mark.parametrize("p", [2, 3, 7.5])
def test_khinchin_single_sign(p):
    assert khinchin_moment(CoefficientSeq(0, [1.0]), p, 200, 3).value == pytest.approx(1.0, abs=1e-15)


def test_khinchin_needs_samples():
    with pytest.raises(ArgumentError):
        khinchin_moment(CoefficientSeq(0, [1.0, 1.0]), 4, 50, 0)


def test_khinchin_monotone_in_p():
    c = CoefficientSeq(0, np.ones(16) / 4.0)
    vals = [khinchin_moment(c, p, 20000, 5) for p in (2, 4, 6, 8)]
    for a, b in zip(vals, vals[1:]):
        assert b.value >= a.value - 2 * (a.standard_error + b.standard_error)


def test_khinchin_four_matches_closed_form():
    # E|sum xi_k a_k|^4 = 3 (sum a^2)^2 - 2 sum a^4 for real a
    a = np.array([0.5, 0.5, 0.5, 0.5])
    exact = (3 - 2 * np.sum(a ** 4)) ** 0.25
    m = khinchin_moment(CoefficientSeq(0, a), 4, 50000, 11)
    assert abs(m.value - exact) <= 4 * m.standard_error + 1e-3


def test_bilinear_single_entry_and_zero():
    a = np.zeros((3, 3))
    a[1, 2] = 1.0
    assert bilinear_moment(a, 2, 0, 0).value == 1.0
    assert bilinear_moment(a, 4, 1000, 0).value == pytest.approx(1.0, abs=1e-15)
    assert bilinear_moment(np.zeros((4, 4)), 2, 0, 0).value == 0.0


def test_bilinear_rejects_diagonal():
    with pytest.raises(ArgumentError):
        bilinear_moment(np.eye(3), 2, 0, 0)


def test_bilinear_exact_p2_matches_monte_carlo():
    gen = np.random.default_rng(1)
    a = np.triu(gen.normal(size=(6, 6)), 1)
    exact = bilinear_moment(a, 2, 0, 0).value
    xi = np.array(np.meshgrid(*[[-1, 1]] * 6)).reshape(6, -1).T
    brute = math.sqrt(np.mean(np.einsum("ik,kl,il->i", xi, a, xi) ** 2))
    assert exact == pytest.approx(brute, rel=1e-12)


def test_log_moment_unimodular_is_zero():
    f = evaluate_grid(CoefficientSeq(0, [1.0]), sample_sign_ensemble(1, 8, (0, 0)), 6)
    assert log_moment(f, RandomConstant.zero(8), 1).value == 0.0


def test_log_moment_cosine_against_scalar_quadrature():
    G_log2 = 12
    c = CoefficientSeq(-1, np.array([1.0, 0.0, 1.0]) / math.sqrt(2))
    f = evaluate_grid(c, sample_sign_ensemble(4, 8, (-1, 1)), G_log2)
    est = log_moment(f, RandomConstant.zero(8), 1)
    G = 2 ** G_log2
    # a midpoint-type grid rule on a log singularity is accurate to O(log G / G)
    assert abs(est.value - LOG_COS_INTEGRAL) <= 4 * math.log(G) / G
    # exact zeros at theta = 1/4, 3/4 land on the grid and are flagged
    assert est.flagged == 2 * 8


def test_log_moment_two_point_value():
    f = evaluate_grid(CoefficientSeq(0, [1.0]), sample_sign_ensemble(3, 64, (0, 0)), 4)
    b = RandomConstant.constant(64, 1 / 21)
    xi = f.values[:, 0].real
    want = np.mean(np.where(xi > 0, abs(math.log(20 / 21)), math.log(22 / 21)))
    got = log_moment(f, b, 1).value
    assert got == pytest.approx(want, abs=1e-15)
    if 0 < np.sum(xi > 0) < 64:
        assert abs(got - 0.5 * (abs(math.log(20 / 21)) + math.log(22 / 21))) < 0.05


def test_log_moment_preconditions():
    f = unit_grid_poly(0, 8, 4, 6)
    with pytest.raises(PreconditionError):
        log_moment(f, RandomConstant.constant(4, 0.05), 1)
    with pytest.raises(PreconditionError):
        log_moment(f.scaled(2.0), RandomConstant.zero(4), 1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_log_moment_power_mean_monotone(seed):
    f = unit_grid_poly(seed, 12, 8, 8)
    vals = [log_moment(f, RandomConstant.zero(8), p).value ** (1 / p) for p in (1, 2, 3, 5)]
    for a, b in zip(vals, vals[1:]):
        assert b >= a - 1e-6


def test_ratio_full_set_is_one():
    f = unit_grid_poly(1, 10, 8, 7)
    assert distributional_ratio(f, full_set(8, 128), RandomConstant.zero(8)) == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.05, 1.0))
def test_ratio_at_least_one_without_b(seed, density):
    f = unit_grid_poly(seed, 10, 8, 7)
    E = ProductSet(np.random.default_rng(seed).random((8, 128)) < density)
    if E.measure() > 0:
        assert distributional_ratio(f, E, RandomConstant.zero(8)) >= 1.0


def test_ratio_signals_vanishing_denominator():
    f = evaluate_grid(counterexample_coeffs(1), plus_signs(2, (-1, 1)), 6)
    E = interval_set(2, 64, 0.0, 1 / 64)
    with pytest.raises(InfiniteRatio):
        distributional_ratio(f, E, RandomConstant.zero(2))


def test_ratio_rejects_large_b_and_empty_set():
    f = unit_grid_poly(2, 4, 4, 5)
    with pytest.raises(PreconditionError):
        distributional_ratio(f, full_set(4, 32), RandomConstant.constant(4, 0.06))
    with pytest.raises(PreconditionError):
        distributional_ratio(f, ProductSet(np.zeros((4, 32), bool)), RandomConstant.zero(4))


def test_counterexample_coefficients_small():
    assert counterexample_coeffs_exact(0) == [Fraction(1)]
    assert counterexample_coeffs_exact(1) == [Fraction(-1, 4), Fraction(1, 2), Fraction(-1, 4)]
    assert sum(q * q for q in counterexample_coeffs_exact(1)) == Fraction(3, 8)


@pytest.mark.parametrize("N", range(0, 9))
def test_counterexample_square_is_next_power(N):
    # brute-force convolution: coefficients of sin^{2N} squared are those of sin^{4N}
    a = counterexample_coeffs_exact(N)
    sq = [Fraction(0)] * (4 * N + 1)
    for i, x in enumerate(a):
        for j, y in enumerate(a):
            sq[i + j] += x * y
    assert sq == counterexample_coeffs_exact(2 * N)
    assert sum(q * q for q in a) == Fraction(math.comb(4 * N, 2 * N), 16 ** N)


def test_counterexample_float_path_matches_exact_and_lgamma():
    c64 = counterexample_coeffs(64)
    exact = counterexample_coeffs_exact(64)
    assert np.allclose(c64.values.real, [float(q) for q in exact], rtol=1e-15, atol=0)
    c65 = counterexample_coeffs(65)
    assert np.allclose(c65.values.real, [float(q) for q in counterexample_coeffs_exact(65)],
                       rtol=1e-11, atol=0)


@pytest.mark.parametrize("N", [1, 4, 8, 16, 32])
def test_counterexample_report_against_oracle(N):
    r = counterexample_report(N, 2.5)
    log_int, log_ratio = COUNTEREXAMPLE_ORACLE[N]
    assert r.log_int_E == pytest.approx(log_int, abs=1e-9)
    # ratio itself to 1e-6 relative means log ratio to 1e-6 absolute
    assert abs(r.log_ratio - log_ratio) <= 1e-6
    assert r.mu_EN >= 2.0 ** -(2 * N + 1) * math.exp(-2.5 * N) * (1 - 1e-12)
    assert 0 < r.mu_EN < 1
    assert r.ratio >= 1


def test_counterexample_norm_is_order_one_over_sqrt_n():
    for N in (1, 4, 16, 64):
        r = counterexample_report(N, 2.5)
        assert r.norm_sq_Q >= 0.5 / math.sqrt(2 * math.pi * N)
        assert r.norm_sq_Q >= 0.1 / N


def test_counterexample_preconditions():
    with pytest.raises(PreconditionError):
        counterexample_report(4, 1.5)
    with pytest.raises(ArgumentError):
        counterexample_report(0, 2.5)


def test_counterexample_quadratic_growth():
    Ns = [4, 8, 16, 32]
    recs = [counterexample_report(N, 2.5) for N in Ns]
    x = [math.log(2.0) - r.log_mu_EN for r in recs]
    slope = loglog_slope(x, [r.log_ratio for r in recs])
    assert slope >= 1.7
    assert min(r.log_ratio / r.N ** 2 for r in recs) >= 0.1


def test_loglog_slope_exact_power():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert loglog_slope(x, 3 * x ** 2.5) == pytest.approx(2.5)
