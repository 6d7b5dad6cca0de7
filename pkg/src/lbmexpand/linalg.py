"""Small dense complex linear algebra: matrix exponential and QR eigenvalues.

Both routines are written out here so that the symbol oracle does not depend
on the same LAPACK paths used elsewhere; tests cross-check them against
``scipy.linalg.expm`` and ``numpy.linalg.eigvals``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["expm", "hessenberg", "eigvals", "EigenvalueError"]


class EigenvalueError(RuntimeError):
    """Shifted QR iteration did not converge."""


def expm(A, tol: float | None = None, max_terms: int = 80, dtype=complex) -> np.ndarray:
    """exp(A) by scaling and squaring with a truncated Taylor series.

    The matrix is scaled by 2^-s so that its 1-norm is at most 1/2, the
    series is summed until a term falls below ``tol`` times the partial sum,
    and the result is squared s times.  ``tol`` defaults to the machine
    epsilon of ``dtype``; pass ``np.clongdouble`` for extended precision.
    """
    A = np.asarray(A, dtype=dtype)
    if tol is None:
        tol = float(np.finfo(A.real.dtype).eps) / 4
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("expm needs a square matrix")
    norm = np.abs(A).sum(axis=0).max() if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = A / (2.0**s)
    out = np.eye(n, dtype=A.dtype)
    term = np.eye(n, dtype=A.dtype)
    for j in range(1, max_terms):
        term = term @ X / j
        out = out + term
        if np.abs(term).max() <= tol * np.abs(out).max():
            break
    for _ in range(s):
        out = out @ out
    return out


def hessenberg(A, dtype=complex) -> np.ndarray:
    """Upper Hessenberg form by Householder reflections (similarity transform)."""
    H = np.array(A, dtype=dtype)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, :])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
        H[k + 2 :, k] = 0.0
    return H


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0:
        return 1, 0
    return a / r, b / r


def eigvals(A, max_iter: int = 100, dtype=None) -> np.ndarray:
    """All eigenvalues of a square matrix by Hessenberg reduction and shifted QR.

    Wilkinson shifts with deflation on negligible subdiagonal entries.
    ``max_iter`` bounds the iterations spent on each eigenvalue.  The
    working precision follows ``dtype`` (default: complex128, or the input's
    own complex type if it is wider).
    """
    A = np.asarray(A)
    if dtype is None:
        dtype = np.result_type(A.dtype, np.complex128)
    H = hessenberg(A, dtype=dtype)
    n = H.shape[0]
    eps = np.finfo(H.real.dtype).eps
    out = np.zeros(n, dtype=H.dtype)
    hi = n - 1
    it = 0
    while hi >= 0:
        if hi == 0:
            out[0] = H[0, 0]
            break
        # find the active unreduced block [lo, hi]
        lo = hi
        while lo > 0:
            scale = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if abs(H[lo, lo - 1]) <= eps * (scale if scale else 1.0):
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out[hi] = H[hi, hi]
            hi -= 1
            it = 0
            continue
        it += 1
        if it > max_iter:
            raise EigenvalueError(f"QR iteration did not converge for eigenvalue {hi} after {max_iter} steps")
        a, b = H[hi - 1, hi - 1], H[hi - 1, hi]
        c, d = H[hi, hi - 1], H[hi, hi]
        tr, det = a + d, a * d - b * c
        disc = np.sqrt(tr * tr / 4 - det)
        mu1, mu2 = tr / 2 + disc, tr / 2 - disc
        mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        if it % 11 == 0:
            mu = mu + abs(H[hi, hi - 1])  # exceptional shift
        m = hi - lo + 1
        blk = H[lo : hi + 1, lo : hi + 1] - mu * np.eye(m, dtype=H.dtype)
        rots = []
        for k in range(m - 1):
            cs, sn = _givens(blk[k, k], blk[k + 1, k])
            G = np.array([[np.conj(cs), np.conj(sn)], [-sn, cs]], dtype=H.dtype)
            blk[k : k + 2, k:] = G @ blk[k : k + 2, k:]
            rots.append(G)
        for k, G in enumerate(rots):
            blk[: min(k + 3, m), k : k + 2] = blk[: min(k + 3, m), k : k + 2] @ G.conj().T
        H[lo : hi + 1, lo : hi + 1] = blk + mu * np.eye(m, dtype=H.dtype)
    return out
