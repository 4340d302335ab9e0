"""Discrete Hardy-Littlewood maximal function and the certified local
approximation of a function by exponential polynomials on short intervals."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridFunction, e
from .errors import ArgumentError, NumericError


def maximal_function(f):
    """Uncentered maximal function over grid-aligned intervals inside [0, 1].

    Accepts one row or an S x G array; cell j stands for [j/G, (j+1)/G).
    Exact over all O(G^2) intervals: for every left end a the averages over
    [a, b] are formed from prefix sums and a suffix maximum hands each x >= a
    the best right end b >= x.
    """
    vals = np.abs(np.asarray(f.values if isinstance(f, GridFunction) else f))
    one_row = vals.ndim == 1
    x = np.atleast_2d(vals).astype(np.float64)
    S, G = x.shape
    P = np.zeros((S, G + 1))
    np.cumsum(x, axis=1, out=P[:, 1:])
    out = x.copy()
    lengths = np.arange(1, G + 1, dtype=np.float64)
    for a in range(G):
        avg = (P[:, a + 1:] - P[:, a:a + 1]) / lengths[:G - a]
        best = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
        np.maximum(out[:, a:], best, out=out[:, a:])
    return out[0] if one_row else out


def hl_constant(f):
    """``||Mf||_2 / ||f||_2`` for one row."""
    f = np.abs(np.asarray(f, dtype=np.float64))
    nf = float(np.sqrt(np.mean(f * f)))
    if nf == 0.0:
        return 0.0
    m = maximal_function(f)
    return float(np.sqrt(np.mean(m * m))) / nf


@dataclass(frozen=True)
class LocalApproximation:
    lam: np.ndarray
    coeffs: np.ndarray = field(repr=False)
    approximation: np.ndarray = field(repr=False)
    Phi: GridFunction = field(repr=False)
    phi_norm: float
    max_pointwise_excess: float
    relative_excess: float
    bound_factor: float
    band_orders: tuple
    C_fit: float

    def interval_poly(self, row, j):
        """Frequencies and coefficients of p^J on interval ``j`` of ``row``."""
        return self.lam, self.coeffs[row, j]


def spectral_bands(freqs, lam, tau):
    """Disjoint masks E_0, ..., E_n from the windows |m - lambda_k| < 1/tau."""
    taken = np.zeros(freqs.shape, dtype=bool)
    bands = []
    for lk in lam:
        inside = np.abs(freqs - lk) < 1.0 / tau
        bands.append(inside & ~taken)
        taken |= inside
    return ~taken, bands


def _band_neighbours(lam, k, tau):
    return lam[np.abs(lam - lam[k]) < 2.0 / tau]


def _lambda_terms(nu, h, neigh, a):
    """Integration-constant terms of the repeated-integration solution of D phi = h.

    ``h`` carries coefficients (rows x len(nu)) at integer frequencies ``nu``;
    each factor e(lam x) J_a e(-lam x) maps c e(nu x) to
    c e(nu x)/(2 pi i (nu - lam)) minus the same value at x = a carried by
    e(lam x).  Returns coefficients (rows x intervals x len(neigh)) of the
    terms at the frequencies ``neigh``, one set per left endpoint in ``a``.
    """
    S = h.shape[0]
    C = h.astype(np.complex128)
    L = np.zeros((S, a.size, neigh.size), dtype=np.complex128)
    nu = nu.astype(np.float64)
    for s, lam in enumerate(neigh):
        d = nu - lam
        zero = d == 0
        if np.any(np.abs(C[:, zero]) > 0):
            raise NumericError("resonant term in repeated integration", trace=[float(lam)])
        denom = np.where(zero, 1.0, 2j * np.pi * d)
        C = np.where(zero[None, :], 0.0, C / denom[None, :])
        new = -(C @ e(np.multiply.outer(d, a)))
        if s:
            dl = neigh[:s] - lam
            L[:, :, :s] /= (2j * np.pi * dl)[None, None, :]
            new = new - np.einsum("sjq,qj->sj", L[:, :, :s], e(np.multiply.outer(dl, a)))
        L[:, :, s] = new
    return L


def local_approximation(g, lam, spec, n, tau, kappa=None):
    """Exponential polynomials p^J with spectrum Lambda on each interval J of ``spec``.

    Returns the certified majorant Phi = |g_0| + sum_k M h~_k together with
    the largest value of |g - p^J| - M^n Phi over the grid.
    """
    lam_arr = np.asarray(getattr(lam, "lam", lam), dtype=np.float64)
    if lam_arr.size != n:
        raise ArgumentError(f"expected {n} frequencies, got {lam_arr.size}")
    if not spec.M > 1:
        raise ArgumentError("partition needs M > 1")
    S, G = g.S, g.G
    if G % spec.ell:
        raise ArgumentError(f"{spec.ell} intervals do not align with a grid of {G}")
    cells = G // spec.ell
    freqs, coef = g.spectrum()
    band0, bands = spectral_bands(freqs, lam_arr, tau)
    g0 = np.fft.ifft(np.where(band0[None, :], coef, 0.0), axis=1) * G
    Phi = np.abs(g0)
    a = np.arange(spec.ell) / spec.ell
    x = (np.arange(G) / G).reshape(spec.ell, cells)
    coeffs = np.zeros((S, spec.ell, n), dtype=np.complex128)
    orders = []
    for k, mask in enumerate(bands):
        neigh = _band_neighbours(lam_arr, k, tau)
        nk = neigh.size
        orders.append(nk)
        nu = freqs[mask]
        if nu.size == 0:
            continue
        ck = coef[:, mask]
        mult = np.prod(2j * np.pi * (nu[:, None] - neigh[None, :]), axis=1)
        hk = ck * mult[None, :]
        spec_h = np.zeros_like(coef)
        spec_h[:, mask] = hk * tau ** nk
        h_tilde = np.fft.ifft(spec_h, axis=1) * G
        Phi = Phi + maximal_function(h_tilde)
        L = _lambda_terms(nu, hk, neigh, a)
        idx = np.searchsorted(lam_arr, neigh)
        coeffs[:, :, idx] -= L
        # coefficients of g_k sitting exactly on a frequency of Lambda are kept
        on = np.isin(nu.astype(np.float64), lam_arr)
        if np.any(on):
            pos = np.searchsorted(lam_arr, nu[on].astype(np.float64))
            coeffs[:, :, pos] += ck[:, on][:, None, :]
    phases = e(np.multiply.outer(lam_arr, x))  # n x ell x cells
    approx = np.einsum("sjq,qjc->sjc", coeffs, phases).reshape(S, G)
    factor = spec.M ** n
    excess = float(np.max(np.abs(g.values - approx) - factor * Phi))
    gnorm = g.l2_norm()
    phi_norm = float(np.sqrt(np.mean(Phi ** 2)))
    c_fit = math.nan
    if kappa is not None and kappa > 0 and phi_norm > 0:
        c_fit = (phi_norm / kappa) ** (1.0 / (2 * n)) / n
    return LocalApproximation(lam_arr, coeffs, approx, GridFunction(Phi), phi_norm, excess,
                              excess / gnorm if gnorm > 0 else excess, factor, tuple(orders), c_fit)
