"""Dense complex linear algebra used throughout the package.

All matrices are plain ``numpy`` arrays.  Vectorization is column-major
(``order="F"``) so that ``vec(G)^H (I kron M) vec(G) == Tr(G^H M G)``.
"""
from __future__ import annotations

from functools import lru_cache

import math

import numpy as np

DEFAULT_RANK_TOL = 1e-7
HERMITIAN_RTOL = 1e-12


class NotHermitianError(ValueError):
    pass


def kron(a, b):
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def vectorize(a):
    """Stack the columns of ``a`` left to right into a column vector."""
    a = np.atleast_2d(np.asarray(a))
    return a.reshape(-1, 1, order="F")


def unvectorize(v, rows, cols):
    return np.asarray(v).reshape(rows, cols, order="F")


def is_hermitian(m, rtol=HERMITIAN_RTOL):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= rtol * scale)


def hermitian_part(m):
    m = np.asarray(m)
    return 0.5 * (m + m.conj().T)


def eig_hermitian(m, check=True):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray, real, ascending
    eigenvectors : ndarray, unitary, columns are eigenvectors
    """
    m = np.asarray(m)
    if check and not is_hermitian(m):
        raise NotHermitianError("matrix is not Hermitian")
    return np.linalg.eigh(hermitian_part(m))


def psd_part(m):
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    lam, vec = eig_hermitian(m, check=False)
    return (vec * np.clip(lam, 0.0, None)) @ vec.conj().T


def numerical_rank(w, tol=DEFAULT_RANK_TOL, floor=0.0):
    """Number of eigenvalues above ``max(tol * lambda_max, floor)``.

    ``floor`` is an absolute threshold; it lets callers treat a matrix that
    is negligible relative to some external scale (e.g. total transmit
    power) as rank zero instead of measuring its noise against itself.
    """
    lam = np.linalg.eigvalsh(hermitian_part(w))
    lam_max = lam[-1] if lam.size else 0.0
    if lam_max <= floor or lam_max <= 0.0:
        return 0
    return int(np.sum(lam > max(tol * lam_max, floor)))


def null_space_basis(m, tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the numerical null space of a Hermitian matrix.

    Eigenvectors whose eigenvalue magnitude is at most ``tol * (1 + |lambda|_max)``
    are kept.  A full-rank input yields an ``(n, 0)`` array.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam, vec = eig_hermitian(m, check=False)
    scale = 1.0 + (np.max(np.abs(lam)) if lam.size else 0.0)
    keep = np.abs(lam) <= tol * scale
    return vec[:, keep]


def trust_region_quadratic_max(m, g_hat, eps):
    """Exact ``max_{||d|| <= eps} (g + d)^H M (g + d)`` for PSD ``M``.

    A convex quadratic over a ball peaks on the boundary, where
    ``(lam I - M) d = M g`` with ``lam >= lambda_max(M)``.  The multiplier is
    found from the secular equation ``||d(lam)|| = eps`` by safeguarded
    Newton iterations on ``1/||d|| - 1/eps``; the hard case (``g`` has no
    component on the top eigenspace) is handled explicitly.
    """
    m = np.asarray(m)
    g = np.asarray(g_hat).reshape(-1)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    lam, q = eig_hermitian(m)
    if lam.size and lam[0] < -1e-10 * max(1.0, abs(lam[-1])):
        raise ValueError("matrix must be positive semidefinite")
    lam = np.clip(lam, 0.0, None)
    c = q.conj().T @ g
    base = float(np.sum(lam * np.abs(c) ** 2))
    if eps == 0 or lam[-1] <= 0:
        return base

    mu_max = lam[-1]
    gaps = mu_max - lam
    a = lam**2 * np.abs(c) ** 2
    top = gaps <= 1e-12 * mu_max
    cnorm2 = float(np.sum(np.abs(c) ** 2))
    a_top = float(np.sum(a[top]))

    def value(t):
        # objective at multiplier mu_max + t, in eigen-coordinates
        lmb = mu_max + t
        return float(np.sum(lam * np.abs(c) ** 2 * lmb**2 / (t + gaps) ** 2))

    rest = ~top
    d_rest0 = float(np.sum(a[rest] / gaps[rest] ** 2)) if np.any(rest) else 0.0
    if a_top <= 1e-28 * max(cnorm2, 1e-300) * mu_max**2 and d_rest0 <= eps**2:
        # hard case: fill the remaining radius along the top eigenvector
        x = c.copy()
        x[rest] = c[rest] * mu_max / gaps[rest]
        x_top_extra = np.sqrt(max(eps**2 - d_rest0, 0.0))
        return float(np.sum(lam[rest] * np.abs(x[rest]) ** 2) + mu_max * x_top_extra**2)

    def dnorm2(t):
        return float(np.sum(a / (t + gaps) ** 2))

    lo = 0.0
    hi = np.sqrt(float(np.sum(a))) / eps
    t = hi
    for _ in range(200):
        n2 = dnorm2(t)
        n = np.sqrt(n2)
        phi = 1.0 / n - 1.0 / eps
        if phi > 0:
            hi = t
        else:
            lo = t
        if abs(phi) * eps <= 1e-15:
            break
        dphi = float(np.sum(a / (t + gaps) ** 3)) / n**3
        t_new = t - phi / dphi
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-16 * max(t, mu_max):
            t = t_new
            break
        t = t_new
    return value(t)


def det_trace_gap(a):
    """``det(I + A) - (1 + Tr A)``; nonnegative for PSD ``A``, zero iff rank <= 1."""
    lam = np.linalg.eigvalsh(hermitian_part(np.asarray(a)))
    return float(np.prod(1.0 + lam)) - (1.0 + math.fsum(lam))


# -- real parametrization of Hermitian matrices -------------------------------

def svec_dim(n):
    return n * n


@lru_cache(maxsize=64)
def _triu(n):
    iu, ju = np.triu_indices(n, 1)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def svec(m):
    """Isometric real coordinates of a Hermitian matrix (length ``n**2``).

    Layout: the ``n`` diagonal entries, then ``sqrt(2) Re m[i, j]`` and
    ``sqrt(2) Im m[i, j]`` for ``i < j``.  ``svec(a) @ svec(b) == Re Tr(a b)``.
    Works on stacks of shape ``(..., n, n)``.
    """
    m = np.asarray(m)
    n = m.shape[-1]
    iu, ju = _triu(n)
    diag = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    off = m[..., iu, ju]
    r2 = np.sqrt(2.0)
    return np.concatenate([diag, r2 * off.real, r2 * off.imag], axis=-1)


def smat(v, n):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    iu, ju = _triu(n)
    k = len(iu)
    lead = v.shape[:-1]
    out = np.zeros(lead + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    off = (v[..., n:n + k] + 1j * v[..., n + k:n + 2 * k]) / np.sqrt(2.0)
    out[..., iu, ju] = off
    out[..., ju, iu] = off.conj()
    return out


def hermitian_basis(n):
    """Stack of ``n**2`` Hermitian matrices forming the basis dual to :func:`svec`."""
    return smat(np.eye(n * n), n)
