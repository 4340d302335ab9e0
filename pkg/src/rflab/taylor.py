"""Random Taylor series in the disk: truncation, zero counting by the argument
principle, the integrated counting function, Jensen's formula, Blaschke sums
and the radius schedule driven by sigma_F(r)."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ArgumentError, NumericError, PreconditionError
from .turan import poly_eval, poly_roots

RADEMACHER = "rademacher"
STEINHAUS = "steinhaus"
GAUSSIAN = "gaussian"
DETERMINISTIC = "deterministic"
LAWS = (RADEMACHER, STEINHAUS, GAUSSIAN, DETERMINISTIC)

MAX_DEGREE = 1 << 22
MAX_NODES = 1 << 24
ROOT_DEGREE_LIMIT = 256
BOUNDARY_FLOOR = 1e-9
NUDGE = 1e-6
NUDGE_STEPS = (1, -1, 2, -2, 3, -3, 4, -4)
INTEGER_TOL = 1e-6
AVERAGE_TOL = 1e-8
SCHEDULE_TOL = 1e-12
# zeros of a long random series crowd the circle and slow the trapezoidal
# rule down; the range statistic is read on a scale of units
RANGE_TOL = 1e-4
_GOLDEN_TURN = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class TaylorSample:
    """Truncated series ``F(z) = sum_{k <= K} zeta_k z^k``."""

    zeta: np.ndarray = field(repr=False)
    law: str
    seed: int
    tail_bound: float
    r_max: float

    @property
    def K(self):
        return self.zeta.size - 1

    def __call__(self, z):
        return poly_eval(self.zeta, z)


def _is_finite_input(coeffs):
    return not callable(coeffs)


def _law_factors(law, seed, k):
    if law == DETERMINISTIC:
        return np.ones(k.size)
    r, c = rng.grid([0], k)
    if law == RADEMACHER:
        return rng.signs(seed, rng.SIGNS, r, c)[0].astype(np.float64)
    if law == STEINHAUS:
        return np.exp(2j * np.pi * rng.uniform(seed, rng.PHASE, r, c)[0])
    if law == GAUSSIAN:
        a = rng.normal(seed, rng.GAUSS_A, r, c)[0]
        b = rng.normal(seed, rng.GAUSS_B, r, c)[0]
        return (a + 1j * b) / math.sqrt(2.0)
    raise ArgumentError(f"unknown law {law!r}")


def _gaussian_envelope(k):
    # |gamma_k| <= 3 sqrt(log(k + 2)) except with small probability; an
    # estimate, not a certificate, for the unbounded law
    return 3.0 * np.sqrt(np.log(k + 2.0))


def truncation_degree(coeffs, r_max, eps, law=RADEMACHER):
    """Smallest K with ``sup_{k >= K} |a_k| r^K / (1 - r) <= eps``.

    ``|a_k|`` must be nonincreasing on the scanned range (geometric domination).
    """
    if not 0 < r_max < 1:
        raise ArgumentError("r_max must lie in (0, 1)")
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    log_r = math.log(r_max)
    size = 1024
    while True:
        k = np.arange(size)
        mag = np.abs(np.asarray(coeffs(k), dtype=np.complex128))
        if law == GAUSSIAN:
            mag = mag * _gaussian_envelope(k)
        if not np.all(np.isfinite(mag)):
            raise ArgumentError("coefficients are not finite")
        # running sup from the right bounds every later coefficient on the window
        sup = np.maximum.accumulate(mag[::-1])[::-1]
        if np.any(np.diff(mag[size // 2:]) > 1e-12 * mag[size // 2:-1]) and law != GAUSSIAN:
            raise ArgumentError("tail is not dominated by a nonincreasing sequence")
        with np.errstate(divide="ignore"):
            logb = np.log(sup) + k * log_r - math.log1p(-r_max)
        ok = np.nonzero(logb <= math.log(eps))[0]
        if ok.size and ok[0] < size // 2:
            K = int(ok[0])
            return K, float(math.exp(logb[K]))
        if size >= MAX_DEGREE:
            raise ArgumentError(f"tail at r_max = {r_max} needs more than {MAX_DEGREE} terms")
        size *= 2


def truncate(law, coeffs, r_max, eps, seed=0):
    """Sample ``zeta_k = X_k a_k`` and cut the series where the sup tail on |z| <= r_max is below eps.

    A finite array of coefficients is a polynomial and is kept whole with tail 0.
    """
    if law not in LAWS:
        raise ArgumentError(f"unknown law {law!r}")
    if _is_finite_input(coeffs):
        a = np.asarray(coeffs, dtype=np.complex128).ravel()
        if a.size < 2:
            raise ArgumentError("need degree >= 1")
        k = np.arange(a.size)
        return TaylorSample(a * _law_factors(law, seed, k), law, int(seed), 0.0, float(r_max))
    K, tail = truncation_degree(coeffs, r_max, eps, law)
    K = max(K, 1)
    k = np.arange(K + 1)
    a = np.asarray(coeffs(k), dtype=np.complex128)
    return TaylorSample(a * _law_factors(law, seed, k), law, int(seed), tail, float(r_max))


def _as_sample(F):
    if isinstance(F, TaylorSample):
        return F
    return truncate(DETERMINISTIC, F, 0.5, 1.0)


def circle_values(F, r, nodes, derivative=False):
    """``F(r e(j/N))`` (and ``z F'(z)``) at N equispaced nodes by folding coefficients mod N."""
    z = F.zeta
    k = np.arange(z.size)
    with np.errstate(under="ignore"):
        c = z * np.exp(k * math.log(r)) if r > 0 else np.where(k == 0, z, 0)
    fold = np.zeros(nodes, dtype=np.complex128)
    np.add.at(fold, k % nodes, c)
    vals = np.fft.ifft(fold) * nodes
    if not derivative:
        return vals
    dfold = np.zeros(nodes, dtype=np.complex128)
    np.add.at(dfold, k % nodes, k * c)
    return vals, np.fft.ifft(dfold) * nodes


def _start_nodes(F, t_nodes=None):
    n = t_nodes or 64
    n = max(n, 2 * (F.K + 1))
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True)
class ZeroCount:
    r: float
    b: complex
    n: int
    residual: float
    nodes: int = 0


def _min_modulus_ok(vals, b):
    mod = np.abs(vals - b)
    return float(np.min(mod)) >= BOUNDARY_FLOOR * max(float(np.max(mod)), 1e-300)


CHUNK_NODES = 1 << 20


def _log_derivative_mean(F, r, b, nodes):
    """Mean of ``z F'(z) / (F(z) - b)`` over N equispaced nodes on |z| = r.

    Above CHUNK_NODES the nodes are taken in residue classes j = p (mod P):
    each class is a Q-point DFT of the coefficients twisted by e(p k / N),
    so memory stays O(Q + K) for any N.
    """
    if nodes <= CHUNK_NODES:
        f, zf = circle_values(F, r, nodes, derivative=True)
        return complex(np.mean(zf / (f - b)))
    Q = CHUNK_NODES
    P = nodes // Q
    k = np.arange(F.zeta.size)
    with np.errstate(under="ignore"):
        c = F.zeta * np.exp(k * math.log(r))
    total = 0j
    for p in range(P):
        tw = c * np.exp(2j * np.pi * ((p * k) % nodes) / nodes)
        fold = np.zeros(Q, dtype=np.complex128)
        dfold = np.zeros(Q, dtype=np.complex128)
        np.add.at(fold, k % Q, tw)
        np.add.at(dfold, k % Q, k * tw)
        f = np.fft.ifft(fold) * Q
        zf = np.fft.ifft(dfold) * Q
        total += complex(np.sum(zf / (f - b)))
    return total / nodes


def _contour_count(F, r, b, nodes):
    prev = None
    while nodes <= MAX_NODES:
        v = _log_derivative_mean(F, r, b, nodes)
        n = int(round(v.real))
        res = abs(v - n)
        # stable: the rounded count repeats and the current value is near that integer
        if res <= INTEGER_TOL and prev == n:
            return n, res, nodes
        prev = n
        nodes *= 2
    raise NumericError("argument-principle count did not settle on an integer",
                       trace=[r, complex(b), nodes])


def count_zeros(F, r, b=0.0, t_nodes=None):
    """Zeros of F - b in |z| < r with multiplicity, by the argument principle.

    When F - b nearly vanishes on the contour, r is moved by one part in 1e6
    along a fixed sequence of up to eight nudges.
    """
    F = _as_sample(F)
    if not 0 < r:
        raise ArgumentError("r must be positive")
    nodes = _start_nodes(F, t_nodes)
    for s in (0,) + NUDGE_STEPS:
        rr = r * (1.0 + s * NUDGE)
        if _min_modulus_ok(circle_values(F, rr, nodes), b):
            n, res, used = _contour_count(F, rr, b, nodes)
            return ZeroCount(rr, complex(b), n, res, used)
    raise NumericError("F - b vanishes on every nudged contour", trace=[r, complex(b)])


def _roots(F, b):
    c = np.array(F.zeta, dtype=np.complex128)
    c[0] -= b
    while c.size > 1 and c[-1] == 0:
        c = c[:-1]
    return poly_roots(c)


def root_count(F, r, b=0.0):
    """Roots of the truncation inside |z| < r from the polynomial root finder."""
    return int(np.count_nonzero(np.abs(_roots(_as_sample(F), b)) < r))


def circle_log_average(F, r, b=0.0, tol=AVERAGE_TOL, t_nodes=None, name="|z| = r"):
    """Mean of ``log|F(r e(theta)) - b|`` by the trapezoidal rule with node doubling."""
    F = _as_sample(F)
    nodes = _start_nodes(F, t_nodes)
    vals = circle_values(F, r, nodes)
    if not _min_modulus_ok(vals, b):
        raise PreconditionError(f"F - b nearly vanishes on the circle {name}")
    prev = float(np.mean(np.log(np.abs(vals - b))))
    while nodes < MAX_NODES:
        nodes *= 2
        vals = circle_values(F, r, nodes)
        cur = float(np.mean(np.log(np.abs(vals - b))))
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise NumericError(f"log average on {name} did not converge", trace=[r, complex(b)])


def circle_log_averages(F, r, bs, tol=AVERAGE_TOL, t_nodes=None, name="|z| = r"):
    """:func:`circle_log_average` for many targets b sharing one set of circle values."""
    F = _as_sample(F)
    bs = np.asarray(bs, dtype=np.complex128).ravel()
    nodes = _start_nodes(F, t_nodes)
    prev = None
    chunk = max(1, (1 << 22) // nodes)
    while nodes <= MAX_NODES:
        vals = circle_values(F, r, nodes)
        cur = np.empty(bs.size)
        for lo in range(0, bs.size, chunk):
            mod = np.abs(vals[None, :] - bs[lo:lo + chunk, None])
            if prev is None:
                floor = BOUNDARY_FLOOR * np.maximum(np.max(mod, axis=1), 1e-300)
                if np.any(np.min(mod, axis=1) < floor):
                    raise PreconditionError(f"F - b nearly vanishes on the circle {name}")
            cur[lo:lo + chunk] = np.mean(np.log(mod), axis=1)
        if prev is not None and np.all(np.abs(cur - prev) <= tol):
            return cur
        prev = cur
        nodes *= 2
        chunk = max(1, chunk // 2)
    raise NumericError(f"log average on {name} did not converge", trace=[r])


def big_N(F, r, b=0.0, t_nodes=None):
    """``N_F(r, b) = int_{1/2}^r n_F(t, b) dt / t``.

    Up to degree 256 the step function n_F is read off the root moduli and
    integrated exactly; beyond that the equal Jensen form
    (difference of circle averages of log|F - b|) is used.
    """
    F = _as_sample(F)
    if r <= 0.5:
        return 0.0
    if F.K <= ROOT_DEGREE_LIMIT:
        rho = np.abs(_roots(F, b))
        inside = rho[rho <= r]
        return float(np.sum(np.log(r / np.maximum(inside, 0.5))))
    return (circle_log_average(F, r, b, t_nodes=t_nodes)
            - circle_log_average(F, 0.5, b, t_nodes=t_nodes, name="|z| = 1/2"))


def big_N_grid(F, r, bs, t_nodes=None, tol=AVERAGE_TOL):
    """``N_F(r, b)`` for every b in ``bs``."""
    F = _as_sample(F)
    bs = np.asarray(bs, dtype=np.complex128).ravel()
    if r <= 0.5:
        return np.zeros(bs.size)
    if F.K <= ROOT_DEGREE_LIMIT:
        return np.array([big_N(F, r, b) for b in bs])
    return (circle_log_averages(F, r, bs, tol, t_nodes)
            - circle_log_averages(F, 0.5, bs, tol, t_nodes, name="|z| = 1/2"))


@dataclass(frozen=True)
class JensenRecord:
    lhs: float
    rhs: float
    diff: float


def jensen_check(F, r, b=0.0, t_nodes=None):
    """Root-side ``N_F(r, b)`` against the difference of circle averages."""
    F = _as_sample(F)
    outer = circle_log_average(F, r, b, t_nodes=t_nodes, name=f"|z| = {r}")
    inner = circle_log_average(F, 0.5, b, t_nodes=t_nodes, name="|z| = 1/2")
    rho = np.abs(_roots(F, b))
    inside = rho[rho <= r]
    lhs = float(np.sum(np.log(r / np.maximum(inside, 0.5)))) if r > 0.5 else 0.0
    rhs = outer - inner
    return JensenRecord(lhs, rhs, abs(lhs - rhs))


def blaschke_sum(F, b, r):
    """``sum (1 - |w|)`` over the b-points w of the truncation with |w| <= r."""
    F = _as_sample(F)
    if F.tail_bound > 0 and r > F.r_max:
        raise ArgumentError(f"truncation is only valid up to r = {F.r_max}")
    rho = np.abs(_roots(F, b))
    return float(np.sum(1.0 - rho[rho <= r]))


def _terms_needed(r):
    # terms below 1e-18 of the running sum, with a geometric tail, are dropped
    return int(math.ceil((42.0 + max(0.0, -math.log1p(-r * r))) / (-2.0 * math.log(r)))) + 16


def log_sigma(coeffs, r, max_terms=MAX_DEGREE):
    """``log sigma_F(r) = (1/2) log sum |a_k|^2 r^{2k}`` for a finite array or a callable."""
    if not 0 <= r < 1:
        raise ArgumentError("r must lie in [0, 1)")
    if _is_finite_input(coeffs):
        a2 = np.abs(np.asarray(coeffs, dtype=np.complex128)) ** 2
        k = np.arange(a2.size)
    else:
        if r == 0:
            return 0.5 * math.log(abs(complex(coeffs(np.arange(1))[0])) ** 2)
        need = _terms_needed(r)
        if need > max_terms:
            raise ArgumentError(f"sigma at r = {r!r} needs more than {max_terms} terms")
        k = np.arange(need)
        a2 = np.abs(np.asarray(coeffs(k), dtype=np.complex128)) ** 2
    with np.errstate(under="ignore", divide="ignore"):
        terms = a2 * np.exp(2.0 * k * math.log(r)) if r > 0 else np.where(k == 0, a2, 0.0)
    s = math.fsum(terms)
    if s == 0:
        raise ArgumentError("sigma vanishes")
    return 0.5 * math.log(s)


def _largest_radius(coeffs, max_terms=MAX_DEGREE):
    """Largest r for which sigma is computable within the term budget."""
    if _is_finite_input(coeffs):
        return 1.0 - 2.0 ** -52
    # the term count depends on r alone and grows with it
    lo, hi = 0.5, 1.0 - 2.0 ** -52
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _terms_needed(mid) <= max_terms:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    return lo


def r_schedule(coeffs, targets, tol=SCHEDULE_TOL):
    """Radii with ``log sigma_F(r_m) = target_m`` by bisection."""
    targets = np.asarray(targets, dtype=np.float64).ravel()
    r_top = _largest_radius(coeffs)
    top = log_sigma(coeffs, r_top)
    base = log_sigma(coeffs, 0.0)
    bad = [float(t) for t in targets if t > top]
    if bad:
        raise ArgumentError(
            f"target unreachable at truncation: log sigma reaches only {top:.6g} "
            f"at r = {r_top!r}; unreachable targets {bad}")
    out = []
    for t in targets:
        if t <= base:
            if t < base - 1e-15:
                raise ArgumentError(f"target {t} is below log sigma(0) = {base}")
            out.append(0.0)
            continue
        lo, hi = 0.0, r_top
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if log_sigma(coeffs, mid) < t:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def b_grid(M, points):
    """Golden-angle (sunflower) points filling the closed disk |b| <= M; just 0 when M = 0."""
    if M == 0:
        return np.zeros(1, dtype=np.complex128)
    if points < 1:
        raise ArgumentError("need at least one grid point")
    j = np.arange(points)
    rad = M * np.sqrt((j + 0.5) / points)
    return rad * np.exp(2j * np.pi * j * _GOLDEN_TURN)


@dataclass(frozen=True)
class RangeResult:
    rows: list
    cells: np.ndarray = field(repr=False)
    radii: np.ndarray
    log_sigma: np.ndarray
    b_points: np.ndarray = field(repr=False)
    fraction_within: float


def range_experiment(law, coeffs, M, targets, b_points, seeds, eps=1e-10, band=10.0,
                     tol=RANGE_TOL):
    """``N_F(r_m, b)`` over a b-grid of the disk |b| <= M at scheduled radii.

    Rows carry the minimum over the grid and its difference from log sigma;
    ``cells`` holds every (seed, m, b) value.  Circle averages stop once a
    node doubling moves them by less than ``tol``.
    """
    radii = r_schedule(coeffs, targets)
    ls = np.array([log_sigma(coeffs, r) for r in radii])
    low = [m for m, v in enumerate(ls) if math.exp(v) < 20.0 * M]
    if low:
        raise ArgumentError(f"sigma_F(r_m) < 20 M for m in {low}")
    bs = b_grid(M, b_points)
    seeds = list(seeds)
    cells = np.empty((len(seeds), radii.size, bs.size))
    rows = []
    r_max = float(np.max(radii))
    for si, seed in enumerate(seeds):
        F = truncate(law, coeffs, min(r_max * (1 + 1e-9), 1 - 1e-16) if r_max > 0 else 0.5,
                     eps, seed)
        for m, r in enumerate(radii):
            cells[si, m] = big_N_grid(F, r, bs, tol=tol)
            lo = float(np.min(cells[si, m]))
            rows.append({"seed": seed, "m": m, "r_m": float(r), "min_N": lo,
                         "log_sigma": float(ls[m]), "centered": lo - float(ls[m])})
    frac = float(np.mean(np.abs(cells - ls[None, :, None]) <= band))
    return RangeResult(rows, cells, radii, ls, bs, frac)
