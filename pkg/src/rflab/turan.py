"""Exponential polynomials, Turan-type ratio checks and polynomial roots."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError, NumericError, PreconditionError
from .quadrature import adaptive_gauss_legendre

TURAN_CONSTANT = 300.0
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ExpPoly:
    """``p(t) = sum_k a_k exp(i lambda_k t)``.

    ``coefficients`` has shape (n+1,) or (rows, n+1) for row-dependent
    coefficients.
    """

    frequencies: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.frequencies, dtype=np.float64).ravel()
        a = np.asarray(self.coefficients, dtype=np.complex128)
        if lam.size == 0:
            raise ArgumentError("need at least one frequency")
        if np.any(np.diff(lam) <= 0):
            raise ArgumentError("frequencies must be strictly increasing")
        if a.shape[-1] != lam.size:
            raise ArgumentError("one coefficient per frequency")
        object.__setattr__(self, "frequencies", lam)
        object.__setattr__(self, "coefficients", a)

    @property
    def order(self):
        return self.frequencies.size - 1

    @classmethod
    def from_characters(cls, freqs, coeffs):
        """Build ``sum a_k e(f_k t)`` with e(x) = exp(2 pi i x)."""
        return cls(2.0 * np.pi * np.asarray(freqs, dtype=np.float64), coeffs)

    def scaled(self, c):
        return ExpPoly(self.frequencies, self.coefficients * c)

    def translated(self, s):
        """``t -> p(t + s)``."""
        return ExpPoly(self.frequencies, self.coefficients * np.exp(1j * self.frequencies * s))


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted disjoint closed intervals, stored as an (k, 2) array."""

    intervals: np.ndarray

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=np.float64).reshape(-1, 2)
        if np.any(iv[:, 1] < iv[:, 0]):
            raise ArgumentError("interval endpoints out of order")
        iv = iv[np.argsort(iv[:, 0], kind="stable")]
        merged = []
        for lo, hi in iv:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        object.__setattr__(self, "intervals", np.array(merged, dtype=np.float64).reshape(-1, 2))

    @property
    def measure(self):
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def within(self, lo, hi):
        return bool(np.all(self.intervals[:, 0] >= lo) and np.all(self.intervals[:, 1] <= hi))

    def shifted(self, s):
        return IntervalUnion(self.intervals + s)

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out


def eval_exp_poly(p, points):
    """Values of ``p`` at ``points``; row-dependent coefficients give (rows, len(points))."""
    t = np.asarray(points, dtype=np.float64)
    basis = np.exp(1j * np.multiply.outer(t, p.frequencies))
    return basis @ p.coefficients.T if p.coefficients.ndim == 1 else (basis @ p.coefficients.T).T


def _golden_max(f, a, b, tol=1e-13, max_iter=200):
    """Maximize a unimodal scalar function on [a, b] by golden-section search."""
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _sampling_count(p, length, per_interval):
    # enough points to resolve the fastest relative oscillation several times over
    band = p.frequencies[-1] - p.frequencies[0]
    return max(per_interval, int(math.ceil(8.0 * band * length / (2.0 * math.pi))) + 1)


def sup_on_interval(p, lo, hi, per_interval=64):
    """``max_{[lo, hi]} |p|`` by dense sampling and golden-section refinement."""
    if hi == lo:
        return float(abs(eval_exp_poly(p, [lo])[0]))
    n = _sampling_count(p, hi - lo, per_interval)
    t = np.linspace(lo, hi, n)
    v = np.abs(eval_exp_poly(p, t))
    best = float(np.max(v))
    mod = lambda x: float(abs(eval_exp_poly(p, [x])[0]))
    # refine every interior local maximum; ties keep the first sample
    for i in range(n):
        left = v[i - 1] if i > 0 else -np.inf
        right = v[i + 1] if i < n - 1 else -np.inf
        if v[i] >= left and v[i] >= right and (v[i] > left or i == 0):
            a = t[max(i - 1, 0)]
            b = t[min(i + 1, n - 1)]
            _, fx = _golden_max(mod, a, b)
            best = max(best, fx)
    return best


def sup_on_union(p, E, per_interval=64):
    return max(sup_on_interval(p, lo, hi, per_interval) for lo, hi in E.intervals)


@dataclass(frozen=True)
class TuranSupRecord:
    max_J: float
    sup_E: float
    ratio: float
    empirical_constant: float
    bound: float
    bound_ok: bool
    margin: float


def _check_sets(J, E):
    lo, hi = J
    if not hi > lo:
        raise ArgumentError("J must have positive length")
    if E.measure <= 0:
        raise ArgumentError("E must have positive measure")
    if not E.within(lo, hi):
        raise ArgumentError("E must lie inside J")
    return lo, hi


def turan_sup_check(p, J, E, samples_per_interval=64, C_A=TURAN_CONSTANT):
    """Compare ``max_J |p|`` with ``(C_A m(J)/m(E))^n sup_E |p|``."""
    lo, hi = _check_sets(J, E)
    if p.coefficients.ndim != 1:
        raise ArgumentError("sup check needs a single coefficient vector")
    max_J = sup_on_interval(p, lo, hi, samples_per_interval)
    sup_E = sup_on_union(p, E, samples_per_interval)
    if sup_E <= 1e-300 or sup_E <= 1e-14 * max_J:
        raise DegenerateInputError("p vanishes on E to working precision")
    max_J = max(max_J, sup_E)
    n = p.order
    mJ, mE = hi - lo, E.measure
    ratio = max_J / sup_E
    emp = ratio ** (1.0 / n) * mE / mJ if n >= 1 else 1.0
    bound = (C_A * mJ / mE) ** n * sup_E
    return TuranSupRecord(max_J, sup_E, ratio, emp, bound,
                          bool(max_J <= bound * (1 + 1e-12)), bound / max_J)


@dataclass(frozen=True)
class TuranL2Record:
    l2_J: float
    l2_E: float
    ratio: float
    empirical_constant: float
    bound_ok: bool
    margin: float


def l2_on_interval(p, lo, hi, rtol=1e-12):
    if hi == lo:
        return 0.0
    f = lambda t: np.abs(eval_exp_poly(p, t)) ** 2
    # start from panels that already resolve the oscillation
    n = _sampling_count(p, hi - lo, 1)
    val, _ = adaptive_gauss_legendre(f, lo, hi, rtol=rtol, order=max(16, min(n, 64)),
                                     atol=1e-300)
    return float(val)


def turan_l2_check(p, J, E, rtol=1e-12, C_A=TURAN_CONSTANT):
    """Compare ``||p||_{L2(J)}`` with ``(C_A m(J)/m(E))^{n+1/2} ||p||_{L2(E)}``."""
    lo, hi = _check_sets(J, E)
    l2_J = math.sqrt(l2_on_interval(p, lo, hi, rtol))
    l2_E = math.sqrt(sum(l2_on_interval(p, a, b, rtol) for a, b in E.intervals))
    if l2_E <= 1e-300 or l2_E <= 1e-14 * l2_J:
        raise DegenerateInputError("p vanishes on E to working precision")
    l2_J = max(l2_J, l2_E)
    n = p.order
    mJ, mE = hi - lo, E.measure
    ratio = l2_J / l2_E
    emp = ratio ** (1.0 / (n + 0.5)) * mE / mJ
    bound = (C_A * mJ / mE) ** (n + 0.5) * l2_E
    return TuranL2Record(l2_J, l2_E, ratio, emp, bool(l2_J <= bound * (1 + 1e-12)), bound / l2_J)


def random_instance(gen, n, J=(0.0, 1.0), min_fraction=0.25, freq_scale=2.0 * np.pi * 8):
    """A random order-n exponential polynomial and a random subset E of J."""
    lo, hi = J
    lam = np.sort(gen.uniform(-freq_scale, freq_scale, n + 1))
    while np.any(np.diff(lam) <= 1e-9):
        lam = np.sort(gen.uniform(-freq_scale, freq_scale, n + 1))
    a = gen.normal(size=n + 1) + 1j * gen.normal(size=n + 1)
    k = int(gen.integers(1, 4))
    length = (hi - lo) * gen.uniform(min_fraction, 1.0)
    # split the total length into k pieces placed in disjoint slots of J
    pieces = gen.dirichlet(np.ones(k)) * length
    slack = (hi - lo) - length
    gaps = gen.dirichlet(np.ones(k + 1)) * slack
    starts = lo + np.cumsum(np.concatenate(([gaps[0]], pieces[:-1] + gaps[1:-1])))
    E = IntervalUnion(np.column_stack([starts, np.minimum(starts + pieces, hi)]))
    return ExpPoly(lam, a), E


def survey(seed, trials=200, max_order=8, C_A=TURAN_CONSTANT, samples_per_interval=64):
    """Run both checks on random instances; returns per-trial records."""
    from .rng import generator
    gen = generator(seed)
    out = []
    for _ in range(trials):
        n = int(gen.integers(0, max_order + 1))
        p, E = random_instance(gen, n)
        s = turan_sup_check(p, (0.0, 1.0), E, samples_per_interval, C_A)
        l2 = turan_l2_check(p, (0.0, 1.0), E, C_A=C_A)
        out.append((n, E.measure, s, l2))
    return out


def poly_eval(coeffs, z):
    """Horner evaluation; ``coeffs`` in ascending order of degree."""
    c = np.asarray(coeffs, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    acc = np.zeros_like(z) + c[-1]
    for a in c[-2::-1]:
        acc = acc * z + a
    return acc


def _residual_scale(c, z):
    deg = c.size - 1
    return np.linalg.norm(c) * np.maximum(1.0, np.abs(z)) ** deg


def root_residuals(coeffs, roots):
    """``|p(r)| / (||p|| max(1, |r|)^deg)`` for each root."""
    c = np.asarray(coeffs, dtype=np.complex128)
    r = np.asarray(roots, dtype=np.complex128)
    return np.abs(poly_eval(c, r)) / _residual_scale(c, r)


def _aberth(c, max_iter=500, tol=1e-15):
    deg = c.size - 1
    dc = c[1:] * np.arange(1, deg + 1)
    # start on a circle at the geometric mean of the root moduli, rotated off the axes
    rad = float(abs(c[0] / c[-1])) ** (1.0 / deg) if c[0] != 0 else 1.0
    rad = min(max(rad, 1e-3), 1e3)
    ang = 2 * np.pi * np.arange(deg) / deg + 0.4
    z = rad * np.exp(1j * ang)
    for it in range(max_iter):
        pz = poly_eval(c, z)
        dpz = poly_eval(dc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            step = ratio / (1.0 - ratio * inv.sum(axis=1))
        step = np.where(pz == 0, 0.0, step)
        if not np.all(np.isfinite(step)):
            return None, it
        z = z - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(z))):
            return z, it
    return z, max_iter


def poly_roots(coeffs, tol=1e-8, max_iter=500):
    """All roots of ``sum_k c_k z^k`` (ascending coefficients).

    Aberth-Ehrlich simultaneous iteration; falls back to companion-matrix
    eigenvalues when the iteration stalls or a residual is too large.
    """
    c = np.asarray(coeffs, dtype=np.complex128).ravel()
    if c.size == 0 or c[-1] == 0:
        raise ArgumentError("leading coefficient must be nonzero")
    if c.size == 1:
        return np.zeros(0, dtype=np.complex128)
    z, it = _aberth(c, max_iter)
    if z is not None and np.all(root_residuals(c, z) <= tol):
        return np.sort_complex(z)
    z = np.roots(c[::-1]).astype(np.complex128)
    res = root_residuals(c, z)
    if not np.all(res <= tol):
        raise NumericError("root residual above tolerance", trace=list(res))
    return np.sort_complex(z)


def poly_from_roots(roots, lead=1.0):
    """Ascending coefficients of ``lead * prod (z - r)``."""
    c = np.array([1.0 + 0j])
    for r in roots:
        c = np.concatenate(([0j], c)) - r * np.concatenate((c, [0j]))
    return lead * c


@dataclass(frozen=True)
class RadialProjection:
    h: np.ndarray
    roots: np.ndarray
    max_violation: float


def radial_zero_projection(g_coeffs, grid=4096):
    """Move every root of g radially to the unit circle and compare ``|h|`` with ``2^n |g|``."""
    c = np.asarray(g_coeffs, dtype=np.complex128).ravel()
    roots = poly_roots(c)
    n = roots.size
    if n and np.min(np.abs(roots)) <= 1e-12 * max(1.0, float(np.max(np.abs(roots)))):
        raise PreconditionError("g has a root at the origin")
    z = np.exp(2j * np.pi * np.arange(grid) / grid)
    gz = np.abs(poly_eval(c, z))
    if np.max(gz) < 1.0:
        raise PreconditionError("sup of |g| on the unit circle is below 1")
    h = poly_from_roots(roots / np.abs(roots))
    hz = np.abs(poly_eval(h, z))
    return RadialProjection(h, roots, float(np.max(hz - 2.0 ** n * gz)))
