"""Set operator A_E, subspace V_{E,b}, shift conditions, white/black partitions,
the spreading step and the difference-inequality solver."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ProductSet, delta_profile, delta_t, grid_cells
from .errors import ArgumentError, DegenerateInputError, NumericError
from .linalg import jacobi_eigh

C_PRIME = 5.0
C_DOUBLE_PRIME = 10.0
C_SMALL = 0.05
C_LARGE = 10.0
LARGE_MEASURE = 0.9
MAX_STEPS = 10 ** 9


def empirical_slack(S, G):
    """Additive slack for inequalities checked on the discretized Q."""
    return max(1.0 / (S * G), 2.0 / math.sqrt(S))


def n_of(p, mu, C=C_DOUBLE_PRIME):
    """``floor(C p^2 mu^{-1/p})``."""
    return int(math.floor(C * p * p * mu ** (-1.0 / p)))


@dataclass(frozen=True)
class BilinearOperator:
    k_min: int
    matrix: np.ndarray
    measure: float

    @property
    def k_max(self):
        return self.k_min + self.matrix.shape[0] - 1

    def hs_norm(self):
        return float(np.linalg.norm(self.matrix))

    def form(self, a):
        """``<A a, a>``: the off-diagonal part of int_E |sum a_k phi_k|^2."""
        a = np.asarray(a, dtype=np.complex128)
        return complex(np.vdot(a, self.matrix @ a))


def _sign_block(signs, window):
    return signs.columns(window[0], window[1]).astype(np.float64)


def build_A_E(E, signs, window):
    """``A(k, l) = int_E conj(phi_k) phi_l`` for k != l, zero on the diagonal.

    With this orientation ``<A a, a> + mu(E) ||a||^2 = int_E |sum a_k phi_k|^2``.
    """
    k_min, k_max = int(window[0]), int(window[1])
    if signs.n_rows != E.S:
        raise ArgumentError("ensemble and set have different row counts")
    xi = _sign_block(signs, (k_min, k_max))
    G = E.G
    if 2 * max(abs(k_min), abs(k_max)) >= G:
        raise ArgumentError("window aliases on the grid")
    # F_i(d) = (1/G) sum_{j in E_i} e(d theta_j); A(k, l) needs d = l - k
    F = np.fft.ifft(E.mask.astype(np.float64), axis=1)
    k = np.arange(k_min, k_max + 1)
    d = np.mod(k[None, :] - k[:, None], G)
    A = np.einsum("ik,il,ikl->kl", xi, xi, F[:, d], optimize=True) / E.S
    np.fill_diagonal(A, 0.0)
    A = 0.5 * (A + A.conj().T)
    np.fill_diagonal(A, 0.0)
    return BilinearOperator(k_min, A, E.measure())


@dataclass(frozen=True)
class OperatorBounds:
    hs_norm: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    hs_vs_p_ratio: float
    trace_gap: float


def operator_bounds(A, p=2.0):
    """Eigen-decomposition sorted by |sigma| and the ratio ``||A||_HS / mu^{1 - 1/(2p)}``."""
    w, v = jacobi_eigh(A.matrix)
    order = np.argsort(-np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    hs = A.hs_norm()
    ratio = hs / A.measure ** (1.0 - 1.0 / (2.0 * p)) if A.measure > 0 else 0.0
    return OperatorBounds(hs, w, v, ratio, abs(hs * hs - float(np.sum(w * w))))


def _gram_schmidt(vectors, tol=1e-12):
    basis = []
    for v in vectors:
        u = np.array(v, dtype=np.complex128)
        for q in basis:
            u = u - np.vdot(q, u) * q
        for q in basis:
            u = u - np.vdot(q, u) * q
        nrm = np.linalg.norm(u)
        if nrm > tol * max(1.0, np.linalg.norm(v)):
            basis.append(u / nrm)
    return basis


@dataclass(frozen=True)
class VSubspace:
    basis: np.ndarray
    dim_tilde: int
    u_dim: int
    dim_bound: int
    projection_zero: bool


def projection_1E_b(E, b, signs, window):
    """Coefficients ``<1_E b, phi_k>`` of the projection onto span{phi_k}."""
    xi = _sign_block(signs, window)
    k = np.arange(window[0], window[1] + 1)
    # (1/(S G)) sum_{(i, j) in E} b_i xi_ik e(-k theta_j)
    F = np.fft.fft(E.mask.astype(np.float64), axis=1) / E.G
    Fk = F[:, np.mod(k, E.G)]
    return np.einsum("i,ik,ik->k", b.values, xi, Fk) / E.S


def v_subspace(E, b, p, signs, window, C_prime=C_PRIME, A=None):
    """Orthonormal basis (rows) of ``V_{E,b}`` inside span{phi_k : k in window}."""
    mu = E.measure()
    if mu <= 0:
        raise DegenerateInputError("E has zero measure")
    A = A if A is not None else build_A_E(E, signs, window)
    size = A.matrix.shape[0]
    bound = int(math.floor(C_prime * p * p / mu ** (1.0 / p)))
    m = max(min(bound - 1, size), 0)
    vecs = []
    if m > 0 and A.hs_norm() > 0:
        ob = operator_bounds(A, p)
        vecs = [ob.eigenvectors[:, j] for j in range(m)]
    u = projection_1E_b(E, b, signs, window)
    zero = bool(np.linalg.norm(u) <= 1e-14 * max(1.0, b.sup_norm()))
    if not zero:
        vecs.append(u)
    basis = _gram_schmidt(vecs)
    arr = np.array(basis).reshape(len(basis), size)
    return VSubspace(arr, m, 0 if zero else 1, bound, zero)


def project_out(coeffs, V):
    """Remove the components of a coefficient vector along ``V``."""
    c = np.asarray(coeffs, dtype=np.complex128)
    for q in V.basis:
        c = c - np.vdot(q, c) * q
    for q in V.basis:
        c = c - np.vdot(q, c) * q
    return c


@dataclass(frozen=True)
class Conditions:
    c_tau_ok: bool
    c_tau_worst: float
    c_e_ok: bool
    max_delta: float
    argmax_t: float
    tau_choice: float
    threshold: float


def intersection_measure(E, n, s):
    """``mu(bigcap_{k=0..n} (E - k s / G))``."""
    acc = E.mask.copy()
    for k in range(1, n + 1):
        acc &= np.roll(E.mask, -k * s, axis=1)
    return float(np.count_nonzero(acc)) / acc.size


def verify_conditions(E, n, tau):
    """Check the small-shift intersection condition on (0, tau] and the shift-gain condition."""
    G = E.G
    mu = E.measure()
    steps = int(math.floor(tau * G + 1e-9))
    worst = mu
    for s in range(1, steps + 1):
        worst = min(worst, intersection_measure(E, n, s))
    c_tau = worst >= 0.5 * mu
    prof = delta_profile(E)
    thr = mu / (2.0 * n)
    s_max = int(np.argmax(prof))
    c_e = bool(prof[s_max] >= thr and mu > 0)
    tau_choice = math.nan
    if c_e:
        s_first = int(np.argmax(prof >= thr))
        tau_choice = s_first / (n * G)
    return Conditions(bool(c_tau), worst, c_e, float(prof[s_max]), s_max / G, tau_choice, thr)


@dataclass(frozen=True)
class LongSections:
    P_Omega1: float
    lower_ok: bool
    upper_ok: bool
    asserted: bool
    rows: np.ndarray = field(repr=False)


def long_sections(E, n):
    """Rows whose section has measure above 1 - 1/n, and the two probability bounds."""
    mu = E.measure()
    if mu == 0:
        raise DegenerateInputError("E has zero measure")
    if n < 1:
        raise ArgumentError("n must be >= 1")
    prof = delta_profile(E)
    asserted = bool(np.max(prof) < mu / (2.0 * n))
    rows = E.section_measures() > 1.0 - 1.0 / n
    P = float(np.mean(rows))
    slack = 1.0 / E.S
    return LongSections(P, bool(P > 0.5 * mu - slack), bool(P <= 2.0 * mu + slack), asserted, rows)


@dataclass(frozen=True)
class PartitionSpec:
    """Partition of T into ``ell`` intervals of length ``M tau = 1/ell``."""

    ell: int
    tau: float
    gamma: float

    def __post_init__(self):
        if self.ell < 1:
            raise ArgumentError("ell must be a positive integer")
        if not 0 < self.gamma < 1:
            raise ArgumentError("gamma must lie in (0, 1)")

    @property
    def M(self):
        return 1.0 / (self.ell * self.tau)

    @property
    def length(self):
        return 1.0 / self.ell

    def intervals(self):
        k = np.arange(self.ell)
        return np.column_stack([k / self.ell, (k + 1) / self.ell])

    @classmethod
    def from_M(cls, M, tau, gamma):
        ell = 1.0 / (M * tau)
        if abs(ell - round(ell)) > 1e-9 * ell:
            raise ArgumentError("1/(M tau) must be an integer")
        return cls(int(round(ell)), tau, gamma)


def _cells_per_interval(spec, G):
    if G % spec.ell:
        raise ArgumentError(f"{spec.ell} intervals do not align with a grid of {G}")
    return G // spec.ell


@dataclass(frozen=True)
class WhitePartition:
    W: ProductSet
    B: ProductSet
    white: np.ndarray


def white_partition(E, spec):
    """Per row, an interval J is white when ``m(J cap E_omega) >= gamma m(J)``."""
    c = _cells_per_interval(spec, E.G)
    counts = E.mask.reshape(E.S, spec.ell, c).sum(axis=2)
    white = counts >= spec.gamma * c
    W = np.repeat(white, c, axis=1)
    return WhitePartition(ProductSet(W), ProductSet(~W), white)


@dataclass(frozen=True)
class SpreadResult:
    E_tilde: ProductSet
    spread: bool
    delta: float
    gain: float
    gain_bound: float
    gain_ok: bool
    white_new: float
    white_bound: float
    white_ok: bool
    n: int
    tau: float
    M: float
    gamma: float
    case: int
    white_intervals: int
    black_intervals: int
    int_E: float
    int_E_tilde: float
    kappa: float
    spreading_constant: float


def _case_one_ell(M1, tau, G):
    """Power of two ell in [1/(2 M1 tau), 1/(M1 tau)] dividing G."""
    hi = 1.0 / (M1 * tau)
    ell = 1 << int(math.floor(math.log2(hi) + 1e-12))
    if ell < hi / 2 - 1e-12 or ell > G:
        return None
    return ell


def spread_set(g, E, n, tau, kappa, b):
    """Absorb white intervals into E; returns both sides of the measure and L2 estimates."""
    S, G = E.S, E.G
    s = grid_cells(n * tau, G)
    delta = delta_t(E, s / G)
    mu = E.measure()
    diff = np.abs(g.values - b.values[:, None]) ** 2
    int_E = float(np.sum(diff[E.mask])) / diff.size
    if delta == 0.0:
        return SpreadResult(E, False, 0.0, 0.0, 0.0, True, 0.0, 0.0, True, n, tau, math.nan,
                            math.nan, 0, 0, 0, int_E, int_E, kappa, math.nan)
    M1 = 8.0 * n / delta
    if M1 * tau <= 1.0:
        ell = _case_one_ell(M1, tau, G)
        if ell is None:
            raise ArgumentError(
                f"no power-of-two partition with M in [{M1:.4g}, {2 * M1:.4g}] on a grid of {G}")
        spec = PartitionSpec(ell, tau, delta / 8.0)
        case = 1
    else:
        spec = PartitionSpec(1, tau, delta / 2.0)
        case = 2
    part = white_partition(E, spec)
    Et = E | part.W
    gain = Et.measure() - mu
    white_new = (part.W - E).measure()
    white_bound = delta - (spec.gamma + n / spec.M)
    int_Et = float(np.sum(diff[Et.mask])) / diff.size
    base = int_E + kappa * kappa
    # implied constant C in (C n^3 / delta^2)^{2n+1}
    const = (int_Et / base) ** (1.0 / (2 * n + 1)) * delta ** 2 / n ** 3 if base > 0 else math.nan
    cell = 1.0 / (S * G)
    return SpreadResult(
        Et, True, delta, gain, 0.5 * delta, bool(gain >= 0.5 * delta - cell), white_new,
        white_bound, bool(white_new >= white_bound - cell), n, tau, spec.M, spec.gamma, case,
        int(part.white.sum()), int((~part.white).sum()), int_E, int_Et, kappa, const)


@dataclass(frozen=True)
class DifferenceBound:
    log_D_bound: float
    steps: int
    terminal_mu: float


def solve_difference_inequality(mu, p, c=C_SMALL, C=C_LARGE):
    """Iterate ``mu_{k+1} = mu_k + (c/p^2) mu_k^{1+1/p}`` up to 9/10, summing log-bound increments."""
    if not c < 0.1:
        raise ArgumentError("c must be below 1/10")
    if not 0 < mu < 1:
        raise ArgumentError("mu must lie in (0, 1)")
    if p < 1:
        raise ArgumentError("p must be >= 1")
    total = 0.0
    steps = 0
    k = c / (p * p)
    inv = 1.0 / p
    Cp2 = C * p * p
    m = float(mu)
    while m < LARGE_MEASURE:
        if steps >= MAX_STEPS:
            raise NumericError("difference recursion did not terminate", trace=[m, steps])
        total += Cp2 * m ** (-inv) * math.log(p / m)
        m += k * m ** (1.0 + inv)
        steps += 1
    return DifferenceBound(total + math.log(2.0), steps, m)


from .localapprox import LocalApproximation, local_approximation, maximal_function  # noqa: E402,F401
