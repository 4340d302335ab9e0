"""Cyclic Jacobi eigensolver for small dense Hermitian matrices.

Used for shift Gram matrices and the bilinear operators built from product
sets; both are at most ~65 x 65 here, where Jacobi's accuracy on small
eigenvalues matters more than its O(n^3) per sweep cost.
"""

import numpy as np

from .errors import NumericError


def _offdiag_norm(a):
    off = a - np.diag(np.diag(a))
    return np.linalg.norm(off)


def jacobi_eigh(matrix, tol=1e-12, max_sweeps=60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ascending and eigenvectors in the
    columns of ``v``, like :func:`numpy.linalg.eigh`.  Iteration stops when
    the off-diagonal Frobenius norm falls to ``tol`` times the Frobenius norm
    of the input.
    """
    a = np.array(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v

    target = tol * scale
    history = []
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        history.append(off)
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag < 1e-18 * target:
                    continue
                phase = apq / mag
                zeta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # U = diag(.., e^{-i phi} at q, ..) @ plane rotation;
                # A <- U^H A U touches only rows and columns p, q
                cph = phase.conjugate()
                u10 = -s * cph
                u11 = c * cph
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p + u10 * col_q
                a[:, q] = s * col_p + u11 * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p + u10.conjugate() * row_q
                a[q, :] = s * row_p + u11.conjugate() * row_q
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp + u10 * vq
                v[:, q] = s * vp + u11 * vq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    else:
        if _offdiag_norm(a) > target:
            raise NumericError("Jacobi iteration did not converge", trace=history)

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def jacobi_svd(matrix, tol=1e-15, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD of a tall matrix ``B``.

    Applies the same plane rotations that two-sided Jacobi would apply to
    ``B^H B``, but to the columns of ``B`` directly, so small singular values
    keep their absolute accuracy ``eps * ||B||`` instead of ``sqrt(eps)``.
    Returns ``(s, v)`` with singular values ascending and right singular
    vectors in the columns of ``v``.
    """
    b = np.array(matrix, dtype=np.complex128)
    if b.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if b.shape[0] > b.shape[1]:
        # rotations act on columns only, so a Householder R carries all the information
        b = np.linalg.qr(b, mode="r")
    n = b.shape[1]
    v = np.eye(n, dtype=np.complex128)
    # columns this small are round-off; their orthogonality is meaningless
    negligible = (np.finfo(np.float64).eps * np.linalg.norm(b)) ** 2
    history = []
    for _ in range(max_sweeps):
        worst = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                bp = b[:, p].copy()
                bq = b[:, q]
                alpha = float(np.real(np.vdot(bp, bp)))
                beta = float(np.real(np.vdot(bq, bq)))
                gamma = np.vdot(bp, bq)
                mag = abs(gamma)
                if min(alpha, beta) <= negligible or mag <= tol * np.sqrt(alpha * beta):
                    continue
                worst = max(worst, mag / np.sqrt(alpha * beta))
                phase = gamma / mag
                zeta = (beta - alpha) / (2.0 * mag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cph = phase.conjugate()
                u10 = -s * cph
                u11 = c * cph
                b[:, p] = c * bp + u10 * bq
                b[:, q] = s * bp + u11 * bq
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp + u10 * vq
                v[:, q] = s * vp + u11 * vq
        history.append(worst)
        if worst <= tol:
            break
    else:
        raise NumericError("one-sided Jacobi did not converge", trace=history)
    s = np.linalg.norm(b, axis=0)
    order = np.argsort(s, kind="stable")
    return s[order], v[:, order]
