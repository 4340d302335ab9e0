"""Discretized product space Omega x T.

Omega is represented by ``S`` equally weighted sample rows (one row per
sign pattern omega) and the circle T by ``G = 2**m`` equispaced points
``theta_j = j / G``.  The product measure is then the uniform measure on the
``S x G`` cells, so every integral over Q is a plain average.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ArgumentError, DegenerateInputError

DEFAULT_ROWS = 512
DEFAULT_GRID_LOG2 = 12

FOURIER = "fourier"
TAYLOR = "taylor"


def e(x):
    """The character e(x) = exp(2 pi i x)."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class CoefficientSeq:
    """Complex coefficients ``a_k`` for ``k = k_min .. k_min + len(values) - 1``.

    Coefficient ``k`` multiplies the character ``e(step * k * theta)``;
    ``step`` other than 1 is used for series supported on a sublattice of
    harmonics (sign ``k`` still attaches to coefficient ``k``).
    """

    k_min: int
    values: np.ndarray
    kind: str = FOURIER
    step: int = 1

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128).ravel()
        if vals.size == 0:
            raise ArgumentError("coefficient window is empty")
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("coefficients must be finite")
        if self.kind not in (FOURIER, TAYLOR):
            raise ArgumentError(f"unknown interpretation {self.kind!r}")
        if self.kind == TAYLOR and self.k_min < 0:
            raise ArgumentError("Taylor coefficients need k_min >= 0")
        if self.step < 1:
            raise ArgumentError("step must be a positive integer")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def k_max(self):
        return self.k_min + self.values.size - 1

    @property
    def indices(self):
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def frequencies(self):
        return self.step * self.indices

    def norm_sq(self):
        return float(np.sum(np.abs(self.values) ** 2))

    def window(self):
        return (self.k_min, self.k_max)


@dataclass(frozen=True)
class SignEnsemble:
    """``S`` rows of Rademacher signs indexed by coefficient index ``k``."""

    rows: np.ndarray
    seed: int
    k_min: int

    @property
    def n_rows(self):
        return self.rows.shape[0]

    @property
    def k_max(self):
        return self.k_min + self.rows.shape[1] - 1

    def columns(self, k_lo, k_hi):
        """Sign columns for indices ``k_lo..k_hi`` (inclusive)."""
        if k_lo < self.k_min or k_hi > self.k_max:
            raise ArgumentError(
                f"window [{k_lo}, {k_hi}] outside ensemble columns [{self.k_min}, {self.k_max}]")
        return self.rows[:, k_lo - self.k_min:k_hi - self.k_min + 1]


@dataclass(frozen=True)
class GridFunction:
    """Values ``f(omega_i, theta_j)`` on the S x G grid."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=np.complex128))
        g = vals.shape[1]
        if g & (g - 1):
            raise ArgumentError("grid size must be a power of two")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def S(self):
        return self.values.shape[0]

    @property
    def G(self):
        return self.values.shape[1]

    @property
    def grid_log2(self):
        return int(self.G).bit_length() - 1

    def l2_norm_sq(self):
        """Average of |f|^2 over the S x G cells."""
        return float(np.mean(np.abs(self.values) ** 2))

    def l2_norm(self):
        return float(np.sqrt(self.l2_norm_sq()))

    def spectrum(self):
        """Signed frequencies and per-row Fourier coefficients (rows x G)."""
        freqs = np.fft.fftfreq(self.G, d=1.0 / self.G).astype(np.int64)
        return freqs, np.fft.fft(self.values, axis=1) / self.G

    def spectral_weights(self):
        """``||g_hat(m)||^2`` in L^2(Omega): row-mean of |g_hat_i(m)|^2."""
        freqs, coef = self.spectrum()
        return freqs, np.mean(np.abs(coef) ** 2, axis=0)

    def __sub__(self, other):
        if isinstance(other, RandomConstant):
            return GridFunction(self.values - other.values[:, None])
        return GridFunction(self.values - np.asarray(other.values))

    def __add__(self, other):
        return GridFunction(self.values + np.asarray(other.values))

    def scaled(self, c):
        return GridFunction(self.values * c)


@dataclass(frozen=True)
class ProductSet:
    """A subset of the discretized Q as an S x G boolean mask."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.mask, dtype=bool))
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def S(self):
        return self.mask.shape[0]

    @property
    def G(self):
        return self.mask.shape[1]

    def measure(self):
        return float(np.count_nonzero(self.mask)) / self.mask.size

    def section(self, i):
        return self.mask[i]

    def section_measures(self):
        return np.count_nonzero(self.mask, axis=1) / self.G

    def shift_cells(self, s):
        """``E + s/G``: cyclic shift of every section by ``s`` cells."""
        return ProductSet(np.roll(self.mask, int(s), axis=1))

    def shift(self, t):
        return self.shift_cells(grid_cells(t, self.G))

    def complement(self):
        return ProductSet(~self.mask)

    def __or__(self, other):
        return ProductSet(self.mask | other.mask)

    def __and__(self, other):
        return ProductSet(self.mask & other.mask)

    def __sub__(self, other):
        return ProductSet(self.mask & ~other.mask)

    def issubset(self, other):
        return bool(np.all(other.mask[self.mask]))


@dataclass(frozen=True)
class RandomConstant:
    """A function of omega alone: one complex value per ensemble row."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @classmethod
    def zero(cls, rows):
        return cls(np.zeros(rows, dtype=np.complex128))

    @classmethod
    def constant(cls, rows, value):
        return cls(np.full(rows, value, dtype=np.complex128))


def grid_cells(t, G):
    """Convert a shift ``t`` (a multiple of 1/G) to an integer cell count."""
    s = t * G
    si = int(round(s))
    if abs(s - si) > 1e-9 * max(1.0, abs(s)):
        raise ArgumentError(f"shift {t} is not a multiple of 1/{G}")
    return si


def sample_sign_ensemble(seed, rows, k_range):
    """Rademacher signs for rows ``0..rows-1`` and indices ``k_range = (k_min, k_max)``.

    Entry ``(i, k)`` depends only on ``(seed, i, k)``.
    """
    k_min, k_max = (int(k_range[0]), int(k_range[1]))
    if rows < 1:
        raise ArgumentError("rows must be >= 1")
    if k_max < k_min:
        raise ArgumentError("empty index window")
    r, c = rng.grid(np.arange(rows), np.arange(k_min, k_max + 1))
    return SignEnsemble(rows=rng.signs(seed, rng.SIGNS, r, c), seed=int(seed), k_min=k_min)


def plus_signs(rows, k_range):
    """A deterministic ensemble with every sign +1."""
    k_min, k_max = k_range
    return SignEnsemble(rows=np.ones((rows, k_max - k_min + 1), dtype=np.int8), seed=0, k_min=k_min)


def evaluate_grid(coeffs, signs, grid_log2=DEFAULT_GRID_LOG2):
    """``f(omega_i, theta_j) = sum_k xi_k(omega_i) a_k e(step k theta_j)`` by inverse FFT."""
    G = 1 << int(grid_log2)
    freqs = coeffs.frequencies
    if 2 * int(np.max(np.abs(freqs))) >= G:
        raise ArgumentError(
            f"grid of {G} points aliases frequencies up to {int(np.max(np.abs(freqs)))}")
    xi = signs.columns(coeffs.k_min, coeffs.k_max).astype(np.float64)
    spec = np.zeros((signs.n_rows, G), dtype=np.complex128)
    spec[:, np.mod(freqs, G)] = xi * coeffs.values[None, :]
    return GridFunction(np.fft.ifft(spec, axis=1) * G)


def evaluate_direct(coeffs, signs, thetas):
    """Direct summation at arbitrary points; the slow oracle for :func:`evaluate_grid`."""
    xi = signs.columns(coeffs.k_min, coeffs.k_max).astype(np.float64)
    phases = e(np.outer(coeffs.frequencies, np.asarray(thetas, dtype=np.float64)))
    return (xi * coeffs.values[None, :]) @ phases


def shift_function(g, t):
    """``g_t(omega, theta) = g(omega, theta + t)`` as a spectral multiplier ``e(m t)``.

    Exact for trigonometric polynomials at any real ``t``; a GridFunction is
    treated as band-limited to ``|m| < G/2``.
    """
    if isinstance(g, CoefficientSeq):
        return CoefficientSeq(g.k_min, g.values * e(g.frequencies * t), g.kind, g.step)
    freqs, coef = g.spectrum()
    shifted = coef * e(freqs * t)[None, :]
    return GridFunction(np.fft.ifft(shifted, axis=1) * g.G)


def sigma_and_hat(coeffs, r):
    """``sigma_F(r)`` and the normalized coefficients ``a_k r^k / sigma``."""
    if not 0.0 <= r < 1.0:
        raise ArgumentError("r must lie in [0, 1)")
    k = coeffs.indices
    if np.any(k < 0):
        raise ArgumentError("sigma is defined for Taylor coefficients (k >= 0)")
    with np.errstate(under="ignore"):
        scaled = coeffs.values * np.power(float(r), k.astype(np.float64))
    if r == 0.0:
        scaled = np.where(k == 0, coeffs.values, 0.0)
    sigma = float(np.sqrt(np.sum(np.abs(scaled) ** 2)))
    if sigma == 0.0:
        raise DegenerateInputError("all scaled coefficients vanish")
    return sigma, CoefficientSeq(coeffs.k_min, scaled / sigma, TAYLOR, coeffs.step)


def delta_t(E, t):
    """``Delta_t(E) = mu((E + t) minus E)`` for a grid shift ``t``."""
    s = grid_cells(t, E.G)
    shifted = np.roll(E.mask, s, axis=1)
    return float(np.count_nonzero(shifted & ~E.mask)) / E.mask.size


def delta_profile(E):
    """``Delta_{s/G}(E)`` for every cell shift ``s = 0..G-1`` via circular autocorrelation."""
    m = E.mask.astype(np.float64)
    f = np.fft.rfft(m, axis=1)
    corr = np.fft.irfft(np.abs(f) ** 2, n=E.G, axis=1)
    overlap = np.rint(corr.sum(axis=0))
    return (np.count_nonzero(E.mask) - overlap) / E.mask.size


def full_set(S, G):
    return ProductSet(np.ones((S, G), dtype=bool))


def empty_set(S, G):
    return ProductSet(np.zeros((S, G), dtype=bool))


def interval_set(S, G, lo, hi, rows=None):
    """``Omega_1 x [lo, hi)`` where ``rows`` (bool mask or indices) selects Omega_1."""
    mask = np.zeros((S, G), dtype=bool)
    j = np.arange(G) / G
    cols = (j >= lo) & (j < hi)
    sel = np.ones(S, dtype=bool) if rows is None else np.zeros(S, dtype=bool)
    if rows is not None:
        sel[rows] = True
    mask[np.ix_(sel, cols)] = True
    return ProductSet(mask)
