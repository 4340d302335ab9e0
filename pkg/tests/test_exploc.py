import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rflab.core import CoefficientSeq, e, evaluate_grid, sample_sign_ensemble
from rflab.errors import ArgumentError
from rflab.exploc import (
    FrequencyWeight, approximate_spectrum, certificate_nodes, exploc_certificate, gram_kappa,
    parseval_gap, progression_measure_check, progression_set, rho_profile,
    shift_combination_energy, shift_gram, spectral_data, spectrum_residual,
)

# min over unit a in C^2 of int |a_0 g + a_1 g_t|^2 for g = phi_0 + phi_1, t = 0.1,
# by brute force over a 2000 x 2000 grid of the unit sphere followed by a local
# polish; it equals the closed form 2 - |1 + e(t)|
KAPPA_SQ_TWO_TERMS = 0.09788696740969285


def sparse_series(seed, n, width=40, noise=1e-3):
    gen = np.random.default_rng(seed)
    c = np.zeros(width, complex)
    idx = gen.choice(width, n, replace=False)
    c[idx] = gen.normal(size=n) + 1j * gen.normal(size=n)
    c += noise * gen.normal(size=width)
    return CoefficientSeq(-width // 2, c), np.sort(idx - width // 2)


def test_single_exponential_kappa_zero():
    g = CoefficientSeq(5, [1.0])
    t = 0.037
    _, kap, a = gram_kappa(g, t, 1)
    assert kap <= 1e-12
    # the null combination is proportional to (1, -e(-5 t))
    ratio = a[1] / a[0]
    assert ratio == pytest.approx(-e(-5 * t), abs=1e-10)


def test_two_terms_kappa_matches_oracle():
    g = CoefficientSeq(0, [1.0, 1.0])
    _, kap, _ = gram_kappa(g, 0.1, 1)
    assert kap ** 2 == pytest.approx(KAPPA_SQ_TWO_TERMS, rel=1e-12)
    assert kap ** 2 == pytest.approx(2 - abs(1 + e(0.1)), rel=1e-12)


def test_gram_kappa_rejects_zero_and_n0():
    with pytest.raises(ArgumentError):
        gram_kappa(CoefficientSeq(0, [1.0]), 0.1, 0)


def test_certificate_exact_sums_are_zero():
    g = CoefficientSeq(-3, [1.0, 0, 0, 2.0, 0, 0, 0, 1j])
    cert = exploc_certificate(g, 3, 0.2)
    assert cert.kappa <= 1e-10
    assert cert.member(1e-6)


def test_certificate_nodes_nest_when_halved():
    big, _ = certificate_nodes(0.2, 64)
    small, _ = certificate_nodes(0.1, 32)
    assert all(np.min(np.abs(big - s)) < 1e-15 for s in small)


def test_certificate_kappa_monotone_under_nested_halving():
    g, _ = sparse_series(3, 2)
    full = exploc_certificate(g, 2, 0.2, 64)
    half = exploc_certificate(g, 2, 0.1, 32)
    assert half.kappa <= full.kappa + 1e-15


def test_rho_closed_form_single_exponential():
    # a(t) = (1, -e(-lambda t)) / sqrt 2 gives rho^2(m) = 1 - sinc(2 pi tau (m - lambda))
    lam, tau = 3.0, 0.25
    g = CoefficientSeq(3, [1.0])
    prof = rho_profile(g, 1, tau, (-10, 16), t_nodes=256,
                       coeff_fn=lambda t: np.array([1.0, -e(-lam * t)]) / math.sqrt(2))
    x = 2 * math.pi * tau * (prof.m - lam)
    want = 1 - np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    assert np.max(np.abs(prof.rho2 - want)) <= 1e-12
    assert prof.rho2[prof.m == 3][0] == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_weighted_rho_sum_below_max_energy(seed, n):
    g, _ = sparse_series(seed, n, noise=0.05)
    prof = rho_profile(g, n, 0.2, (-30, 30))
    assert prof.identity_ok
    assert prof.weighted_sum == pytest.approx(prof.mean_energy, rel=1e-9, abs=1e-15)


def test_theta_spot_value():
    w = FrequencyWeight([0.0, 10.0], 0.1)
    assert w.theta(np.array([5.0]))[0] == pytest.approx(0.25)
    assert FrequencyWeight([2.0], 0.25).theta(np.array([4.0]))[0] == pytest.approx(0.5)
    assert w.theta(np.array([0.0]))[0] == 0.0


def test_frequency_weight_validation():
    with pytest.raises(ArgumentError):
        FrequencyWeight([1.0, 1.0], 0.1)
    with pytest.raises(ArgumentError):
        FrequencyWeight([1.0], 0.0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("seed", range(4))
def test_spectrum_recovers_sparse_support_and_beats_integer_subsets(n, seed):
    g, idx = sparse_series(seed, n)
    tau = 0.25
    r = approximate_spectrum(g, n, tau)
    assert np.allclose(np.sort(r.lam.lam), idx, atol=1e-3)
    spec = spectral_data(g)
    best = min(spectrum_residual(spec, np.array(L, float), tau)
               for L in itertools.combinations(range(-24, 24), n))
    assert r.residual <= best * (1 + 1e-9)
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_progression_example():
    rec = progression_measure_check([(2, 3)], 1)
    assert rec.m_VG == Fraction(1, 3)
    assert rec.bound == 1 and rec.ok


def test_progression_empty_set():
    rec = progression_measure_check([], Fraction(1, 2))
    assert rec.m_VG == 0 and rec.ok


def test_progression_unbounded_rejected():
    with pytest.raises(ArgumentError):
        progression_measure_check([(1, math.inf)], 1)


def test_progression_random_instances():
    gen = np.random.default_rng(17)
    for _ in range(100):
        tau = Fraction(int(gen.integers(1, 64)), int(gen.integers(1, 16)))
        pieces = []
        for _ in range(int(gen.integers(1, 5))):
            a = Fraction(int(gen.integers(0, 400)), int(gen.integers(1, 20)))
            pieces.append((a, a + Fraction(int(gen.integers(1, 50)), int(gen.integers(1, 20)))))
        rec = progression_measure_check(pieces, tau)
        assert rec.ok
        # every piece of V_G is inside (tau/2, tau)
        assert all(tau / 2 <= a < b <= tau for a, b in progression_set(pieces, tau))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 5), st.floats(0.001, 0.5))
def test_shift_gram_psd_and_rayleigh(seed, n, t):
    gen = np.random.default_rng(seed)
    g = CoefficientSeq(-15, gen.normal(size=31) + 1j * gen.normal(size=31))
    spec = spectral_data(g)
    mat = shift_gram(spec, t, n)
    assert np.allclose(mat, mat.conj().T, atol=1e-12)
    lam_min = np.linalg.eigvalsh(mat)[0]
    assert lam_min >= -1e-10 * spec.norm_sq
    _, kap, _ = gram_kappa(spec, t, n)
    assert abs(kap ** 2 - max(lam_min, 0.0)) <= 1e-9 * spec.norm_sq
    a = gen.normal(size=(1000, n + 1)) + 1j * gen.normal(size=(1000, n + 1))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    energies = np.einsum("ij,jk,ik->i", a.conj(), mat.T, a).real
    assert np.all(energies >= kap ** 2 - 1e-9 * spec.norm_sq)


def test_parseval_gap_small():
    gen = np.random.default_rng(2)
    c = CoefficientSeq(-10, gen.normal(size=21) + 0j)
    g = evaluate_grid(c, sample_sign_ensemble(2, 16, c.window()), 7)
    for _ in range(10):
        a = gen.normal(size=4) + 1j * gen.normal(size=4)
        t = float(gen.uniform(0, 0.2))
        lhs, rhs = parseval_gap(g, a, t)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)
        assert rhs == pytest.approx(shift_combination_energy(spectral_data(g), a, t))
