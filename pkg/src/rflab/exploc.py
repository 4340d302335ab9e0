"""Small-shift combinations, approximate spectra and the progression lemma.

A function ``g`` on Q enters only through its spectral weights
``w_m = ||g_hat(m)||^2`` (mean over ensemble rows of |g_hat_i(m)|^2): the
Gram matrix of the shifts ``g, g_t, ..., g_{nt}`` is the Toeplitz matrix
``G_{jk} = sum_m w_m e((k - j) t m)``, and for coefficients ``a``

    || sum_k a_k g_{kt} ||^2 = sum_m w_m |q_t(e(t m))|^2,   q_t(z) = sum_k a_k z^k.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import CoefficientSeq, GridFunction, e, shift_function
from .errors import ArgumentError, NumericError, ThresholdViolation
from .linalg import jacobi_svd
from .quadrature import panel_nodes
from .turan import TURAN_CONSTANT, poly_roots

# weights below this fraction of the largest are FFT round-off, not spectrum
SPECTRAL_FLOOR = 1e-26
NODE_ORDER = 4


@dataclass(frozen=True)
class SpectralData:
    freqs: np.ndarray
    weights: np.ndarray

    @property
    def norm_sq(self):
        return float(np.sum(self.weights))

    @property
    def support(self):
        return int(self.freqs.min()), int(self.freqs.max())


def spectral_data(g):
    """Spectral weights of a GridFunction, a CoefficientSeq (Rademacher signs) or SpectralData."""
    if isinstance(g, SpectralData):
        return g
    if isinstance(g, CoefficientSeq):
        w = np.abs(g.values) ** 2
        keep = w > 0
        return SpectralData(g.frequencies[keep].astype(np.int64), w[keep])
    if isinstance(g, GridFunction):
        freqs, w = g.spectral_weights()
        keep = w > SPECTRAL_FLOOR * float(np.max(w)) if np.max(w) > 0 else w > 0
        order = np.argsort(freqs[keep])
        return SpectralData(freqs[keep][order], w[keep][order])
    raise ArgumentError(f"no spectral form for {type(g).__name__}")


@dataclass(frozen=True)
class ShiftGram:
    t: float
    n: int
    matrix: np.ndarray


@dataclass(frozen=True)
class KappaRecord:
    t: float
    kappa: float
    coeffs: np.ndarray
    eigenvalue: float


@dataclass(frozen=True)
class FrequencyWeight:
    """A set of n approximate frequencies and the damping weight they induce."""

    lam: np.ndarray
    tau: float

    def __post_init__(self):
        lam = np.sort(np.asarray(self.lam, dtype=np.float64).ravel())
        if np.any(np.diff(lam) == 0):
            raise ArgumentError("frequencies must be distinct")
        if not self.tau > 0:
            raise ArgumentError("tau must be positive")
        object.__setattr__(self, "lam", lam)

    @property
    def n(self):
        return self.lam.size

    def theta(self, m):
        """``prod_lambda min(1, tau |m - lambda|)``."""
        m = np.asarray(m, dtype=np.float64)
        out = np.ones(m.shape)
        for lam in self.lam:
            out = out * np.minimum(1.0, self.tau * np.abs(m - lam))
        return out


def theta_weight(m, lam, tau):
    return FrequencyWeight(lam, tau).theta(m)


def shift_combination_energy(spec, a, t):
    """``sum_m w_m |q_t(e(t m))|^2`` for coefficient vector ``a``."""
    z = e(np.multiply.outer(np.arange(len(a)), t * spec.freqs.astype(np.float64)))
    q = np.asarray(a) @ z
    return float(np.sum(spec.weights * np.abs(q) ** 2))


def shift_gram(spec, t, n):
    """Toeplitz Gram matrix of the shifts g_{kt}, k = 0..n."""
    d = np.arange(-n, n + 1)
    c = e(np.multiply.outer(d, t * spec.freqs.astype(np.float64))) @ spec.weights
    idx = np.arange(n + 1)
    # G[j, k] = c_{k - j}
    return c[(idx[None, :] - idx[:, None]) + n]


def shift_factor(spec, t, n):
    """Square-root factor ``B`` with ``B^H B`` equal to the shift Gram matrix."""
    k = np.arange(n + 1)
    return np.sqrt(spec.weights)[:, None] * e(np.multiply.outer(t * spec.freqs.astype(np.float64), k))


def gram_kappa(g, t, n):
    """Smallest-energy unit combination of the shifts ``g, g_t, ..., g_{nt}``.

    Returns ``(ShiftGram, kappa, a)``.  The minimizing vector comes from
    Jacobi rotations applied one-sided to the square-root factor of the Gram
    matrix; ``kappa`` is the square root of the directly evaluated energy of
    ``a``, which stays accurate when the smallest eigenvalue is at round-off
    level.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    spec = spectral_data(g)
    if spec.norm_sq == 0.0:
        raise ArgumentError("g is zero")
    mat = shift_gram(spec, t, n)
    sv, v = jacobi_svd(shift_factor(spec, t, n))
    a = v[:, 0]
    a = a / np.linalg.norm(a)
    energy = shift_combination_energy(spec, a, t)
    trace = float(np.real(np.trace(mat)))
    if abs(energy - sv[0] ** 2) > 1e-8 * trace:
        raise NumericError("shift energy disagrees with the Gram eigenvalue",
                           trace=[(t, energy, float(sv[0] ** 2), trace)])
    return ShiftGram(float(t), n, mat), math.sqrt(max(energy, 0.0)), a


def certificate_nodes(tau, t_nodes):
    """Composite Gauss-Legendre nodes on (0, tau): t_nodes // 4 equal panels of 4 nodes.

    Panel edges are multiples of tau / panels, so halving tau together with
    t_nodes gives a subset of the nodes.
    """
    if t_nodes < 16:
        raise ArgumentError("t_nodes must be >= 16")
    panels = t_nodes // NODE_ORDER
    return panel_nodes(0.0, tau, panels, NODE_ORDER)


@dataclass(frozen=True)
class ExpLocCertificate:
    n: int
    tau: float
    kappa: float
    nodes: np.ndarray
    weights: np.ndarray
    records: tuple = field(repr=False)

    def member(self, kappa_prime):
        """Membership in Exp_loc(n, tau, kappa') at the sampled resolution."""
        return kappa_prime > self.kappa


def exploc_certificate(g, n, tau, t_nodes=64):
    spec = spectral_data(g)
    nodes, weights = certificate_nodes(tau, t_nodes)
    recs = []
    for t in nodes:
        gram, kap, a = gram_kappa(spec, t, n)
        recs.append(KappaRecord(float(t), kap, a, kap * kap))
    kappa = max(r.kappa for r in recs)
    return ExpLocCertificate(n, float(tau), kappa, nodes, weights, tuple(recs))


def _nonvanishing(a, jitter=1e-12):
    """Apply a tiny jitter when the end coefficients of q_t vanish."""
    a = np.array(a, dtype=np.complex128)
    if abs(a[0]) < jitter or abs(a[-1]) < jitter:
        if abs(a[0]) < jitter:
            a[0] += jitter
        if abs(a[-1]) < jitter:
            a[-1] += jitter
        a = a / np.linalg.norm(a)
    return a


@dataclass(frozen=True)
class RhoProfile:
    m: np.ndarray
    rho2: np.ndarray
    weighted_sum: float
    mean_energy: float
    max_energy: float
    identity_ok: bool


def rho_profile(g, n, tau, m_range, t_nodes=64, certificate=None, coeff_fn=None):
    """``rho^2(m) = (1/tau) int_0^tau |q_t(e(t m))|^2 dt`` on ``m_range = (lo, hi)``.

    The t-integral uses the certificate's composite Gauss-Legendre nodes with
    the eigenvector coefficients a(t) fixed per node; ``coeff_fn(t)`` can
    supply a(t) explicitly instead.  Integrating the Parseval identity over
    the same nodes gives ``sum_m w_m rho^2(m) = mean energy``, which is
    checked against the largest node energy.
    """
    spec = spectral_data(g)
    lo, hi = int(m_range[0]), int(m_range[1])
    m = np.arange(lo, hi + 1)
    if coeff_fn is None:
        cert = certificate if certificate is not None else exploc_certificate(spec, n, tau, t_nodes)
        nodes, weights = cert.nodes, cert.weights
        coeffs = np.array([r.coeffs for r in cert.records])
    else:
        nodes, weights = certificate_nodes(tau, t_nodes)
        coeffs = np.array([coeff_fn(t) for t in nodes])
    k = np.arange(coeffs.shape[1])
    rho2 = np.zeros(m.size)
    energies = np.empty(nodes.size)
    fm = spec.freqs.astype(np.float64)
    for i, (t, a) in enumerate(zip(nodes, coeffs)):
        q = a @ e(np.multiply.outer(k, t * m))
        rho2 += weights[i] * np.abs(q) ** 2
        qs = a @ e(np.multiply.outer(k, t * fm))
        energies[i] = float(np.sum(spec.weights * np.abs(qs) ** 2))
    rho2 /= tau
    mean_energy = float(np.dot(weights, energies) / tau)
    inside = (spec.freqs >= lo) & (spec.freqs <= hi)
    wsum = float(np.sum(spec.weights[inside] * rho2[spec.freqs[inside] - lo]))
    max_energy = float(np.max(energies))
    return RhoProfile(m, rho2, wsum, mean_energy, max_energy, bool(wsum <= max_energy + 1e-8))


def parseval_gap(g, a, t):
    """Physical-space ``int ||sum a_k g_{kt}||^2`` minus its spectral form, for a GridFunction."""
    acc = np.zeros_like(g.values)
    for k, ak in enumerate(a):
        acc = acc + ak * shift_function(g, k * t).values
    lhs = float(np.mean(np.abs(acc) ** 2))
    rhs = shift_combination_energy(spectral_data(g), a, t)
    return lhs, rhs


def spectrum_residual(spec, lam, tau):
    """``sum_m w_m Theta^2_{tau, Lambda}(m)``."""
    return float(np.sum(spec.weights * FrequencyWeight(lam, tau).theta(spec.freqs) ** 2))


def critical_threshold(n, A=TURAN_CONSTANT):
    delta = 1.0 / (8.0 * n * (n + 1))
    return (delta / A) ** (2 * n) / (4.0 * (n + 1))


def greedy_cover(points, length):
    """Cover sorted points by intervals [x, x + length], leftmost point first."""
    out = []
    for x in np.sort(points):
        if not out or x > out[-1][1]:
            out.append((float(x), float(x) + length))
    return out


def _bad_t(t, diffs):
    """True when some k/t with k >= 1 falls inside a (positive) difference interval."""
    for lo, hi in diffs:
        if hi <= 0:
            continue
        lo = max(lo, 0.0)
        # integer k in (t lo, t hi)
        k = math.floor(t * lo) + 1
        if k < t * hi:
            return True
    return False


def find_good_t(tau, centers, half_width, samples=1024):
    """First node t in (tau/2, tau) such that no progression with step 1/t has two points in S~."""
    diffs = [(ci - cj - 2 * half_width, ci - cj + 2 * half_width)
             for ci in centers for cj in centers]
    ts = tau / 2 + tau / 2 * (np.arange(1, samples + 1) - 0.5) / samples
    for t in ts:
        if not _bad_t(t, diffs):
            return float(t)
    return None


@dataclass(frozen=True)
class SpectrumResult:
    lam: FrequencyWeight
    residual: float
    initial_residual: float
    threshold: float
    critical: np.ndarray
    intervals: tuple
    t0: float
    kappa: float
    history: tuple


def _choose_element(base, step, lo, hi, wide, rho2_lookup):
    """Pick one element of the progression base + k step inside [lo, hi]."""
    k0 = math.ceil((lo - base) / step)
    k1 = math.floor((hi - base) / step)
    cand = base + step * np.arange(k0, k1 + 1)
    if cand.size == 0:
        return float(base + step * round((0.5 * (lo + hi) - base) / step))
    inside = [c for c in cand if any(a <= c <= b for a, b in wide)]
    if inside:
        return float(inside[0])
    scores = np.array([rho2_lookup(round(c)) for c in cand])
    return float(cand[int(np.argmin(scores))])


def refine_frequencies(spec, lam, tau, lo, hi, sweeps=20):
    """Coordinate descent on a grid of step 1/ceil(8/tau) containing the integers.

    A move is accepted only if it lowers the residual, so the history is
    nonincreasing.
    """
    steps = math.ceil(8.0 / tau)
    grid = np.arange(math.floor(lo * steps), math.ceil(hi * steps) + 1) / steps
    lam = np.array(lam, dtype=np.float64)
    fm = spec.freqs.astype(np.float64)
    cur = spectrum_residual(spec, lam, tau)
    history = [cur]
    for _ in range(sweeps):
        moved = False
        for j in range(lam.size):
            others = np.ones(fm.size)
            for i, l in enumerate(lam):
                if i != j:
                    others *= np.minimum(1.0, tau * np.abs(fm - l)) ** 2
            base = spec.weights * others
            vals = (np.minimum(1.0, tau * np.abs(fm[None, :] - grid[:, None])) ** 2) @ base
            # never collide with another frequency
            for i, l in enumerate(lam):
                if i != j:
                    vals[np.isclose(grid, l, rtol=0, atol=0.5 / steps)] = np.inf
            best = int(np.argmin(vals))
            if vals[best] < cur * (1 - 1e-12) and grid[best] != lam[j]:
                lam[j] = grid[best]
                cur = spectrum_residual(spec, lam, tau)
                moved = True
        history.append(cur)
        if not moved or cur == 0.0:
            break
    return lam, cur, history


def approximate_spectrum(g, n, tau, t_nodes=64, A=TURAN_CONSTANT, certificate=None,
                         t_samples=1024):
    """n approximate frequencies for g following the critical-interval construction.

    Raises :class:`ThresholdViolation` when the critical set needs more than
    n intervals, and :class:`NumericError` when no good node t0 is found.
    """
    spec = spectral_data(g)
    cert = certificate if certificate is not None else exploc_certificate(spec, n, tau, t_nodes)
    kmin, kmax = spec.support
    pad = math.ceil(1.0 / tau)
    lo, hi = kmin - pad, kmax + pad
    prof = rho_profile(spec, n, tau, (lo, hi), certificate=cert)
    delta = 1.0 / (8.0 * n * (n + 1))
    thr = critical_threshold(n, A)
    crit = prof.m[prof.rho2 < thr]
    length = 2.0 * delta / tau
    cover = greedy_cover(crit, length)
    if len(cover) > n:
        raise ThresholdViolation(
            f"critical set needs {len(cover)} intervals of length {length:.3g} (> {n})",
            trace=[tuple(c) for c in cover])
    centers = [0.5 * (a + b) for a, b in cover]
    wide = [(c - 2 * delta / tau, c + 2 * delta / tau) for c in centers]
    t0 = find_good_t(tau, centers, 2 * delta / tau, t_samples)
    if t0 is None:
        raise NumericError("no good t0 at the sampled resolution", trace=centers)
    _, _, a = gram_kappa(spec, t0, n)
    a = _nonvanishing(a)
    roots = poly_roots(a)
    args = np.mod(np.angle(roots) / (2 * np.pi), 1.0)
    rho2_of = lambda m: prof.rho2[m - lo] if lo <= m <= hi else np.inf
    lam0 = [_choose_element(s / t0, 1.0 / t0, lo, hi, wide, rho2_of) for s in args]
    lam0 = np.array(lam0)
    # identical picks would collapse Lambda; separate them minimally
    for i in range(1, lam0.size):
        while np.any(np.isclose(lam0[:i], lam0[i], rtol=0, atol=1e-12)):
            lam0[i] += 1.0 / t0
    initial = spectrum_residual(spec, lam0, tau)
    lam, res, history = refine_frequencies(spec, lam0, tau, lo, hi)
    return SpectrumResult(FrequencyWeight(lam, tau), res, initial, thr, crit,
                          tuple(cover), t0, cert.kappa, tuple(history))


# exact arithmetic-progression lemma -------------------------------------------------

def _fr(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def merge_exact(intervals):
    iv = sorted((_fr(a), _fr(b)) for a, b in intervals if _fr(b) > _fr(a))
    out = []
    for a, b in iv:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def exact_measure(intervals):
    return sum((b - a for a, b in merge_exact(intervals)), Fraction(0))


@dataclass(frozen=True)
class ProgressionRecord:
    m_VG: Fraction
    bound: Fraction
    ok: bool
    pieces: tuple


def progression_set(G_set, tau):
    """``{t in (tau/2, tau): k/t in G for some k >= 1}`` as exact intervals."""
    tau = _fr(tau)
    out = []
    for g1, g2 in merge_exact(G_set):
        if g2 <= 0:
            continue
        kmax = math.floor(tau * g2)
        for k in range(1, kmax + 1):
            lo = Fraction(k) / g2
            hi = Fraction(k) / g1 if g1 > 0 else tau
            lo, hi = max(lo, tau / 2), min(hi, tau)
            if hi > lo:
                out.append((lo, hi))
    return merge_exact(out)


def progression_measure_check(G_set, tau):
    """Exact ``m(V_G)`` against ``tau^2 m(G)`` for a finite union of intervals in R_+."""
    G_set = list(G_set)
    for a, b in G_set:
        if not (math.isfinite(float(a)) and math.isfinite(float(b))):
            raise ArgumentError("G must be bounded")
    tau = _fr(tau)
    pos = [(max(_fr(a), Fraction(0)), _fr(b)) for a, b in G_set]
    V = progression_set(pos, tau)
    m_v = exact_measure(V)
    bound = tau * tau * exact_measure(pos)
    # an empty G gives 0 = 0, which counts as satisfied
    return ProgressionRecord(m_v, bound, bool(m_v < bound or m_v == bound == 0), tuple(V))
