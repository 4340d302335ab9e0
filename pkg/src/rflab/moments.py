"""Moment estimators, logarithmic moments and the sin^{2N} counterexample."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng
from .core import CoefficientSeq
from .errors import ArgumentError, InfiniteRatio, PreconditionError
from .quadrature import adaptive_gauss_legendre

ZERO_CELL = 1e-300
# cells whose modulus is at round-off level relative to sup |f| are
# numerically zero as well: an FFT cannot resolve them from an exact zero
ROUNDOFF_ZERO = 1e-13
B_LIMIT = 1.0 / 20.0
MIN_SAMPLES = 100
_CHUNK = 8192


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    standard_error: float
    samples: int
    p: float
    flagged: int = 0


@dataclass(frozen=True)
class CounterexampleRecord:
    N: int
    C_param: float
    mu_EN: float
    log_mu_EN: float
    norm_sq_Q: float
    log_int_E: float
    ratio: float
    log_ratio: float
    quad_trace: tuple = ()


def _power_mean(samples_abs, p):
    """(mean x^p)^{1/p} and its delta-method standard error, computed in log space."""
    n = samples_abs.size
    with np.errstate(divide="ignore"):
        logs = p * np.log(samples_abs)
    top = np.max(logs)
    if not np.isfinite(top):
        return 0.0, 0.0
    w = np.exp(logs - top)
    m = np.mean(w)
    value = math.exp((top + math.log(m)) / p)
    se_m = np.std(w, ddof=1) / math.sqrt(n) if n > 1 else 0.0
    # d/dm m^{1/p} = (1/p) m^{1/p - 1}; the common scale cancels in the ratio
    se = value * se_m / (p * m)
    return value, float(se)


def khinchin_moment(coeffs, p, samples, seed):
    """``(E |sum_k xi_k a_k|^p)^{1/p}``; exact at p = 2, Monte Carlo otherwise."""
    if p < 2:
        raise ArgumentError("p must be >= 2")
    if p == 2:
        return MomentEstimate(math.sqrt(coeffs.norm_sq()), 0.0, 0, 2.0)
    if samples < MIN_SAMPLES:
        raise ArgumentError(f"need at least {MIN_SAMPLES} samples for p > 2")
    out = np.empty(samples)
    for lo in range(0, samples, _CHUNK):
        hi = min(samples, lo + _CHUNK)
        xi = _rows(seed, lo, hi, coeffs.window())
        out[lo:hi] = np.abs(xi @ coeffs.values)
    value, se = _power_mean(out, p)
    return MomentEstimate(value, se, samples, float(p))


def _rows(seed, lo, hi, window):
    """Rows lo..hi-1 of the sign ensemble keyed by ``seed`` as floats."""
    r, c = rng.grid(np.arange(lo, hi), np.arange(window[0], window[1] + 1))
    return rng.signs(seed, rng.SIGNS, r, c).astype(np.float64)


def bilinear_moment(matrix, p, samples, seed):
    """``(E |sum_{k != l} a_{kl} xi_k xi_l|^p)^{1/p}`` by Monte Carlo (exact at p = 2)."""
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError("matrix must be square")
    if np.any(np.diag(a) != 0):
        raise ArgumentError("diagonal must be zero")
    if p < 2:
        raise ArgumentError("p must be >= 2")
    if p == 2:
        # E|sum|^2 = sum over unordered pairs |a_kl + a_lk|^2
        s = a + a.T
        return MomentEstimate(math.sqrt(0.5 * float(np.sum(np.abs(s) ** 2))), 0.0, 0, 2.0)
    if samples < MIN_SAMPLES:
        raise ArgumentError(f"need at least {MIN_SAMPLES} samples for p > 2")
    d = a.shape[0]
    out = np.empty(samples)
    for lo in range(0, samples, _CHUNK):
        hi = min(samples, lo + _CHUNK)
        xi = _rows(seed, lo, hi, (0, d - 1))
        out[lo:hi] = np.abs(np.einsum("ik,kl,il->i", xi, a, xi))
    value, se = _power_mean(out, p)
    return MomentEstimate(value, se, samples, float(p))


def log_moment(f, b, p):
    """``int_Q |log|f - b||^p`` over the discretized Q.

    Numerically zero cells (modulus below 1e-300, or below round-off relative
    to sup |f|) are excluded from the average and counted in ``flagged``.
    The standard error is the spread of per-row averages.
    """
    if p < 1:
        raise ArgumentError("p must be >= 1")
    norm = f.l2_norm()
    if abs(norm - 1.0) > 1e-9:
        raise PreconditionError(f"f must have unit L2 norm (got {norm!r})")
    if b.values.size != f.S:
        raise ArgumentError("b must have one value per ensemble row")
    if b.sup_norm() >= B_LIMIT:
        raise PreconditionError(f"sup|b| = {b.sup_norm()!r} is not below 1/20")
    mod = np.abs(f.values - b.values[:, None])
    floor = max(ZERO_CELL, ROUNDOFF_ZERO * float(np.max(np.abs(f.values))))
    good = mod > floor
    flagged = int(mod.size - np.count_nonzero(good))
    vals = np.where(good, np.abs(np.log(np.where(good, mod, 1.0))) ** p, 0.0)
    counts = np.count_nonzero(good, axis=1)
    row_means = vals.sum(axis=1) / np.maximum(counts, 1)
    value = float(vals.sum() / max(np.count_nonzero(good), 1))
    se = float(np.std(row_means, ddof=1) / math.sqrt(f.S)) if f.S > 1 else 0.0
    return MomentEstimate(value, se, f.S * f.G, float(p), flagged)


def distributional_ratio(f, E, b):
    """``int_Q |f|^2 / int_E |f - b|^2`` on the discretized Q."""
    if E.mask.shape != f.values.shape:
        raise ArgumentError("set and function live on different grids")
    if E.measure() == 0.0:
        raise PreconditionError("E has zero measure")
    if b.sup_norm() >= B_LIMIT * f.l2_norm():
        raise PreconditionError("sup|b| must be below ||f||_2 / 20")
    num = f.l2_norm_sq()
    diff = np.abs(f.values - b.values[:, None]) ** 2
    den = float(np.sum(diff[E.mask])) / diff.size
    if den == 0.0:
        raise InfiniteRatio("f - b vanishes identically on E")
    return num / den


def counterexample_coeffs_exact(N):
    """Exact rational coefficients of sin(2 pi theta)^{2N} at harmonics 2n, n = -N..N."""
    if N < 0:
        raise ArgumentError("N must be >= 0")
    den = 4 ** N
    return [Fraction((-1) ** (n % 2) * math.comb(2 * N, N + n), den) for n in range(-N, N + 1)]


def counterexample_coeffs(N):
    """The same coefficients as a :class:`CoefficientSeq` on the even harmonics."""
    if N < 0:
        raise ArgumentError("N must be >= 0")
    if N <= 64:
        vals = [float(q) for q in counterexample_coeffs_exact(N)]
    else:
        n = np.arange(-N, N + 1)
        logc = (math.lgamma(2 * N + 1) - np.array([math.lgamma(N + k + 1) + math.lgamma(N - k + 1) for k in n])
                - N * math.log(4.0))
        vals = np.where(n % 2 == 0, 1.0, -1.0) * np.exp(logc)
    return CoefficientSeq(-N, np.asarray(vals, dtype=np.complex128), step=2)


def _log_central_binom_ratio(N):
    """log(binom(4N, 2N) / 16^N) from exact integers."""
    # math.log is exact-enough for arbitrarily large Python ints
    return math.log(math.comb(4 * N, 2 * N)) - N * math.log(16.0)


def log_sine_power_integral(N, half_width, rtol=1e-8):
    """``log int_{-w}^{w} sin(2 pi theta)^{4N} d theta`` for small w.

    Substituting theta = w u and pulling out (2 pi w)^{4N} keeps the
    integrand of order one, so nothing underflows for large N.
    """
    w = float(half_width)
    scale = 2.0 * math.pi * w

    def f(u):
        return (np.sin(scale * u) / scale) ** (4 * N)

    inner, trace = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=rtol, order=16)
    return math.log(2.0 * w) + 4 * N * math.log(scale) + math.log(inner), trace


def counterexample_report(N, C_param):
    """Exact summary of the product set ``E_N = X_N x T_N`` for ``f_N``.

    ``X_N`` is the event that all 2N+1 signs equal +1 and
    ``T_N = [-exp(-C N), exp(-C N)]``.
    """
    if N < 1:
        raise ArgumentError("N must be >= 1")
    if C_param <= math.log(2.0 * math.pi):
        raise PreconditionError("C_param must exceed log(2 pi)")
    w = math.exp(-C_param * N)
    log_px = -(2 * N + 1) * math.log(2.0)
    log_mu = log_px + math.log(2.0 * w)
    log_t, trace = log_sine_power_integral(N, w)
    log_int_E = log_px + log_t
    log_norm_Q = _log_central_binom_ratio(N)
    log_ratio = log_norm_Q - log_int_E
    ratio = math.exp(log_ratio) if log_ratio < 700 else math.inf
    return CounterexampleRecord(
        N=N, C_param=float(C_param), mu_EN=math.exp(log_mu), log_mu_EN=log_mu,
        norm_sq_Q=math.exp(log_norm_Q), log_int_E=log_int_E, ratio=ratio,
        log_ratio=log_ratio, quad_trace=tuple(trace))


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    return float(np.polyfit(lx, ly, 1)[0])
