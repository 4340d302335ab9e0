import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rflab import rng
from rflab.core import (
    CoefficientSeq, GridFunction, ProductSet, RandomConstant, TAYLOR, delta_profile, delta_t,
    evaluate_direct, evaluate_grid, full_set, interval_set, plus_signs, sample_sign_ensemble,
    shift_function, sigma_and_hat,
)
from rflab.errors import ArgumentError, DegenerateInputError
from rflab.moments import counterexample_coeffs


def test_sign_ensemble_codomain_and_shape():
    s = sample_sign_ensemble(7, 1, (0, 3))
    assert s.rows.shape == (1, 4)
    assert set(np.unique(s.rows)) <= {-1, 1}


def test_sign_ensemble_is_deterministic():
    a = sample_sign_ensemble(11, 20, (-5, 5))
    b = sample_sign_ensemble(11, 20, (-5, 5))
    assert np.array_equal(a.rows, b.rows)


def test_sign_entries_depend_only_on_seed_row_and_index():
    big = sample_sign_ensemble(3, 40, (-10, 10))
    small = sample_sign_ensemble(3, 7, (-2, 4))
    assert np.array_equal(big.columns(-2, 4)[:7], small.rows)


def test_sign_column_means_within_clt_bound():
    rows = 10 ** 5
    s = sample_sign_ensemble(2024, rows, (0, 7))
    assert np.all(np.abs(s.rows.mean(axis=0)) <= 3 / math.sqrt(rows))


def test_empty_window_rejected():
    with pytest.raises(ArgumentError):
        sample_sign_ensemble(1, 4, (3, 2))


def test_single_constant_term_gives_row_sign():
    s = sample_sign_ensemble(5, 16, (0, 0))
    f = evaluate_grid(CoefficientSeq(0, [1.0]), s, 6)
    assert np.allclose(f.values, s.rows[:, :1] * np.ones((1, 64)), atol=1e-15)


def test_sin_squared_coefficients_at_quarter():
    c = counterexample_coeffs(1)
    f = evaluate_grid(c, plus_signs(1, c.window()), 8)
    assert f.values[0, 64] == pytest.approx(1.0, abs=1e-14)


def test_grid_matches_direct_summation():
    gen = np.random.default_rng(0)
    c = CoefficientSeq(-20, gen.normal(size=41) + 1j * gen.normal(size=41))
    s = sample_sign_ensemble(9, 8, c.window())
    f = evaluate_grid(c, s, 7)
    direct = evaluate_direct(c, s, np.arange(128) / 128)
    assert np.max(np.abs(f.values - direct)) <= 1e-10 * np.max(np.abs(direct))


def test_aliasing_rejected():
    c = CoefficientSeq(0, np.ones(33))
    with pytest.raises(ArgumentError):
        evaluate_grid(c, sample_sign_ensemble(1, 2, (0, 32)), 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(-30, 0), st.integers(1, 30))
def test_norm_three_ways(seed, k_min, length):
    gen = np.random.default_rng(seed)
    c = CoefficientSeq(k_min, gen.normal(size=length) + 1j * gen.normal(size=length))
    s = sample_sign_ensemble(seed, 5, c.window())
    f = evaluate_grid(c, s, 7)
    exact = c.norm_sq()
    grid = f.l2_norm_sq()
    per_row = float(np.mean(np.mean(np.abs(f.values) ** 2, axis=1)))
    assert grid == pytest.approx(exact, rel=1e-10)
    assert per_row == pytest.approx(exact, rel=1e-10)


def test_shift_multiplies_coefficient():
    c = CoefficientSeq(3, [2.0 + 1j])
    sh = shift_function(c, 0.137)
    assert sh.values[0] == pytest.approx((2.0 + 1j) * np.exp(2j * np.pi * 3 * 0.137), abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.integers(0, 1000))
def test_shift_roundtrip_and_norm(t, seed):
    gen = np.random.default_rng(seed)
    c = CoefficientSeq(-8, gen.normal(size=17) + 0j)
    g = evaluate_grid(c, sample_sign_ensemble(seed, 4, c.window()), 6)
    there = shift_function(g, t)
    back = shift_function(there, -t)
    assert np.max(np.abs(back.values - g.values)) <= 1e-12 * max(1.0, np.max(np.abs(g.values)))
    assert there.l2_norm_sq() == pytest.approx(g.l2_norm_sq(), rel=1e-12)
    assert np.max(np.abs(shift_function(g, 0.0).values - g.values)) <= 1e-13


def test_shift_matches_pointwise_translation():
    c = CoefficientSeq(-5, np.arange(11) + 1.0)
    s = sample_sign_ensemble(1, 3, c.window())
    g = evaluate_grid(c, s, 6)
    t = 0.3
    want = evaluate_direct(c, s, np.arange(64) / 64 + t)
    assert np.max(np.abs(shift_function(g, t).values - want)) < 1e-11


def test_sigma_geometric_closed_form():
    c = CoefficientSeq(0, np.ones(200), TAYLOR)
    sigma, hat = sigma_and_hat(c, 0.6)
    assert sigma == pytest.approx(1.25, rel=1e-12)
    assert hat.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_sigma_single_term_and_zero_radius():
    assert sigma_and_hat(CoefficientSeq(0, [1.0], TAYLOR), 0.7)[0] == 1.0
    assert sigma_and_hat(CoefficientSeq(0, [3.0, 5.0, 7.0], TAYLOR), 0.0)[0] == 3.0


def test_sigma_all_zero_is_degenerate():
    with pytest.raises(DegenerateInputError):
        sigma_and_hat(CoefficientSeq(0, [0.0, 0.0], TAYLOR), 0.5)


def test_taylor_requires_nonnegative_indices():
    with pytest.raises(ArgumentError):
        CoefficientSeq(-1, [1.0, 1.0], TAYLOR)


def test_delta_half_interval_quarter_shift():
    E = interval_set(8, 64, 0.0, 0.5)
    assert delta_t(E, 0.25) == 0.25
    assert delta_t(E, 0.0) == 0.0


def test_delta_full_sections_vanish():
    rows = np.zeros(10, dtype=bool)
    rows[:3] = True
    E = ProductSet(np.repeat(rows[:, None], 32, axis=1))
    assert np.all(delta_profile(E) == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 63))
def test_delta_symmetric_and_profile_agrees(seed, s):
    gen = np.random.default_rng(seed)
    E = ProductSet(gen.random((6, 64)) < gen.random())
    d_plus = delta_t(E, s / 64)
    d_minus = delta_t(E, -s / 64)
    assert abs(d_plus - d_minus) <= 1 / (6 * 64)
    assert delta_profile(E)[s] == pytest.approx(d_plus, abs=1e-15)
    assert 0.0 <= d_plus <= E.complement().measure()


def test_delta_requires_grid_shift():
    with pytest.raises(ArgumentError):
        delta_t(full_set(2, 16), 0.01)


def test_product_set_algebra():
    E = interval_set(4, 16, 0.0, 0.5, rows=[0, 1])
    F = interval_set(4, 16, 0.25, 0.75)
    assert (E | F).measure() == pytest.approx(E.measure() + F.measure() - (E & F).measure())
    assert (E - F).issubset(E)
    assert E.shift(0.25).measure() == E.measure()
    assert np.array_equal(E.section_measures(), [0.5, 0.5, 0, 0])


def test_random_constant_subtraction():
    g = GridFunction(np.ones((3, 8)))
    b = RandomConstant([1.0, 2.0, 3.0])
    assert np.allclose((g - b).values[:, 0], [0.0, -1.0, -2.0])
    assert b.sup_norm() == 3.0


def test_grid_size_must_be_power_of_two():
    with pytest.raises(ArgumentError):
        GridFunction(np.zeros((2, 12)))


def test_hash_streams_are_independent():
    r, c = rng.grid(np.arange(50), np.arange(50))
    a = rng.signs(1, rng.SIGNS, r, c)
    b = rng.signs(1, rng.UNIFORM, r, c)
    assert np.mean(a == b) < 0.6
    u = rng.uniform(1, rng.UNIFORM, r, c)
    assert np.all((u >= 0) & (u < 1))
