"""Small dense-matrix kernel: determinant, adjugate, characteristic
polynomial and extreme eigenvalues of symmetric matrices.

Matrices are plain ``numpy.ndarray`` objects; most functions also accept a
stack of shape ``(..., n, n)`` and then operate matrix-by-matrix.  Every
function here is pure.

The adjugate must stay valid for singular inputs (the extended regressor
starts at exactly zero) and must keep relative accuracy on symmetric PSD
matrices with condition numbers near 1e12.  Sizes up to 3 use the cofactor
definition directly.  Larger matrices go through an orthogonal factorization,
``M = U diag(s) V^T`` (SVD, or ``V diag(lam) V^T`` when symmetric), giving

    adj(M) = det(U) det(V) * V diag(prod_{j != i} s_j) U^T,
    det(M) = det(U) det(V) * prod_i s_i.

Neither formula subtracts, so nothing cancels even when ``det(M)`` is 40
orders of magnitude below ``||M||^n``.  The Faddeev-LeVerrier recursion is
kept for characteristic polynomials of small, well-scaled matrices only.
"""

import functools
import math

import numpy as np

from .errors import ContractError, DimensionError

__all__ = [
    "adjugate_det",
    "charpoly",
    "det",
    "faddeev_leverrier",
    "is_hurwitz",
    "sym_eigen_extremes",
    "sym_eigenvalues",
]

SYMMETRY_RTOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 50


def _square(m, stack=False):
    a = np.asarray(m, dtype=float)
    ok = a.ndim == 2 or (stack and a.ndim > 2)
    if not ok or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[-1] == 0:
        raise DimensionError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix has non-finite entries")
    return a


def _adj3_scalar(a):
    (a00, a01, a02), (a10, a11, a12), (a20, a21, a22) = a.tolist()
    c00 = a11 * a22 - a12 * a21
    c01 = a12 * a20 - a10 * a22
    c02 = a10 * a21 - a11 * a20
    adj = np.array(
        [
            [c00, a02 * a21 - a01 * a22, a01 * a12 - a02 * a11],
            [c01, a00 * a22 - a02 * a20, a02 * a10 - a00 * a12],
            [c02, a01 * a20 - a00 * a21, a00 * a11 - a01 * a10],
        ]
    )
    return adj, a00 * c00 + a01 * c01 + a02 * c02


def _adjugate_small(a):
    n = a.shape[-1]
    if a.ndim == 2 and n == 3:
        return _adj3_scalar(a)
    if n == 1:
        adj = np.ones_like(a)
        d = a[..., 0, 0]
    elif n == 2:
        adj = np.empty_like(a)
        adj[..., 0, 0] = a[..., 1, 1]
        adj[..., 0, 1] = -a[..., 0, 1]
        adj[..., 1, 0] = -a[..., 1, 0]
        adj[..., 1, 1] = a[..., 0, 0]
        d = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    else:
        adj = np.empty_like(a)
        for i in range(3):
            for j in range(3):
                # adj[i, j] is the (j, i) cofactor
                r = [k for k in range(3) if k != j]
                c = [k for k in range(3) if k != i]
                adj[..., i, j] = (-1) ** (i + j) * (
                    a[..., r[0], c[0]] * a[..., r[1], c[1]] - a[..., r[0], c[1]] * a[..., r[1], c[0]]
                )
        d = np.einsum("...j,...j->...", a[..., 0, :], adj[..., :, 0])
    if np.ndim(d) == 0:
        d = float(d)
    return adj, d


def _leave_one_out_products(s):
    pre = np.ones_like(s)
    suf = np.ones_like(s)
    pre[..., 1:] = np.cumprod(s[..., :-1], axis=-1)
    suf[..., :-1] = np.flip(np.cumprod(np.flip(s[..., 1:], axis=-1), axis=-1), axis=-1)
    return pre * suf


def adjugate_det(m, symmetric=False):
    """Return ``(adj(m), det(m))`` computed together.

    Valid for singular ``m``: ``adj(m) @ m == det(m) * I`` holds to rounding
    error in all cases.  ``symmetric=True`` promises ``m == m.T`` and selects
    the cheaper eigendecomposition route for ``n > 3``.
    """
    a = _square(m, stack=True)
    if a.shape[-1] <= 3:
        return _adjugate_small(a)
    if symmetric:
        lam, v = np.linalg.eigh(a)
        adj = (v * _leave_one_out_products(lam)[..., None, :]) @ np.swapaxes(v, -1, -2)
        d = np.prod(lam, axis=-1)
    else:
        u, s, vt = np.linalg.svd(a)
        # det of an orthogonal factor is +-1; round away LU noise
        sign = np.sign(np.linalg.det(u)) * np.sign(np.linalg.det(vt))
        p = _leave_one_out_products(s)
        adj = sign[..., None, None] * (np.swapaxes(vt, -1, -2) * p[..., None, :]) @ np.swapaxes(u, -1, -2)
        d = sign * np.prod(s, axis=-1)
    if np.ndim(d) == 0:
        d = float(d)
    return adj, d


def det(m):
    """Determinant with its sign preserved."""
    return adjugate_det(m)[1]


def faddeev_leverrier(m):
    """Faddeev-LeVerrier recursion.

    Returns ``(coeffs, adj, det)`` with ``coeffs = [1, c1, ..., cn]`` the
    coefficients of ``det(sI - m)``.  Exact in rational arithmetic, but the
    trace recursion cancels catastrophically once ``|det(m)|`` is small
    against ``||m||^n``.
    """
    a = _square(m)
    n = a.shape[0]
    eye = np.eye(n)
    coeffs = [1.0]
    mk = np.zeros_like(a)
    c = 1.0
    prev = eye
    for k in range(1, n + 1):
        prev = mk + c * eye
        mk = a @ prev
        c = -np.trace(mk) / k
        coeffs.append(c)
    sign = -1.0 if n % 2 else 1.0
    return np.array(coeffs), -sign * prev, sign * c


def charpoly(m):
    """Coefficients ``[1, c1, ..., cn]`` of ``det(sI - m)``, highest first."""
    return faddeev_leverrier(m)[0]


def is_hurwitz(coeffs):
    """Routh test: every root strictly in the open left half-plane."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size == 0:
        raise ContractError("zero polynomial")
    c = c / c[0]
    if c.size == 1:
        return True
    if np.any(c <= 0):
        return False
    prev = c[0::2].copy()
    cur = c[1::2].copy()
    for _ in range(c.size - 2):
        if cur[0] <= 0:
            return False
        width = max(prev.size, cur.size)
        p = np.pad(prev, (0, width + 1 - prev.size))
        q = np.pad(cur, (0, width + 1 - cur.size))
        nxt = (q[0] * p[1:] - p[0] * q[1:]) / q[0]
        prev, cur = cur, nxt[: max(width - 1, 1)]
    return bool(cur[0] > 0)


def _check_symmetric(a):
    asym = np.max(np.abs(a - np.swapaxes(a, -1, -2)), axis=(-2, -1))
    scale = np.max(np.abs(a), axis=(-2, -1))
    if np.any(asym > SYMMETRY_RTOL * scale):
        raise ContractError("matrix is not symmetric within tolerance")


def _jacobi_single(a, tol, max_sweeps):
    # list-based: numpy call overhead dominates for one small matrix
    n = len(a)
    fro2 = sum([v * v for row in a for v in row])
    thresh = tol * tol * fro2
    pairs = _pairs(n)
    for _ in range(max_sweeps):
        off = 2.0 * sum([a[p][q] * a[p][q] for p, q in pairs])
        if off <= thresh:
            break
        for p, q in pairs:
            apq = a[p][q]
            if apq == 0.0:
                continue
            theta = (a[q][q] - a[p][p]) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = t * c
            for row in a:
                akp, akq = row[p], row[q]
                row[p] = c * akp - s * akq
                row[q] = s * akp + c * akq
            rp, rq = a[p], a[q]
            a[p] = [c * x - s * y for x, y in zip(rp, rq)]
            a[q] = [s * x + c * y for x, y in zip(rp, rq)]
            a[p][q] = a[q][p] = 0.0
    return [a[i][i] for i in range(n)]


def _jacobi_stack(a, tol, max_sweeps):
    n = a.shape[-1]
    fro = np.sqrt(np.sum(a * a, axis=(-2, -1)))
    for _ in range(max_sweeps):
        diag = np.diagonal(a, axis1=-2, axis2=-1)
        off = np.sqrt(np.maximum(np.sum(a * a, axis=(-2, -1)) - np.sum(diag * diag, axis=-1), 0.0))
        if np.all(off <= tol * fro):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                active = apq != 0.0
                if not np.any(active):
                    continue
                # a huge theta gives t = 0: the pair is already decoupled
                with np.errstate(all="ignore"):
                    theta = np.where(active, (a[..., q, q] - a[..., p, p]) / (2.0 * apq), 0.0)
                    t = np.copysign(1.0, theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = (1.0 / np.sqrt(1.0 + t * t))[..., None]
                s = t[..., None] * c
                col_p = a[..., :, p].copy()
                col_q = a[..., :, q].copy()
                a[..., :, p] = c * col_p - s * col_q
                a[..., :, q] = s * col_p + c * col_q
                row_p = a[..., p, :].copy()
                row_q = a[..., q, :].copy()
                a[..., p, :] = c * row_p - s * row_q
                a[..., q, :] = s * row_p + c * row_q
                a[..., p, q] = 0.0
                a[..., q, p] = 0.0
    return np.diagonal(a, axis1=-2, axis2=-1).copy()


@functools.lru_cache(maxsize=None)
def _pairs(n):
    return tuple((p, q) for p in range(n - 1) for q in range(p + 1, n))


def _symmetrized_rows(a):
    n = a.shape[0]
    flat = a.ravel().tolist()
    if not all(map(math.isfinite, flat)):
        raise ContractError("matrix has non-finite entries")
    limit = SYMMETRY_RTOL * max(map(abs, flat))
    rows = [flat[i * n : (i + 1) * n] for i in range(n)]
    for p, q in _pairs(n):
        x, y = rows[p][q], rows[q][p]
        if abs(x - y) > limit:
            raise ContractError("matrix is not symmetric within tolerance")
        rows[p][q] = rows[q][p] = 0.5 * (x + y)
    return rows


def sym_eigenvalues(s, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit (p, q) in row-major order and stop once the off-diagonal
    Frobenius norm falls below ``tol * ||s||_F``.  A stack ``(..., n, n)`` is
    rotated in lockstep.  The input is checked for symmetry (relative 1e-12)
    and then symmetrized.  Results are unsorted.
    """
    a = np.asarray(s, dtype=float)
    if a.ndim == 2 and a.shape[0] == a.shape[1] and a.shape[0] > 0:
        return np.array(_jacobi_single(_symmetrized_rows(a), tol, max_sweeps))
    a = _square(a, stack=True)
    _check_symmetric(a)
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    return _jacobi_stack(a, tol, max_sweeps)


def sym_eigen_extremes(s):
    """``(lambda_min, lambda_max)`` of a symmetric matrix or of each in a stack."""
    a = np.asarray(s, dtype=float)
    if a.ndim == 2 and a.shape[0] == a.shape[1] and a.shape[0] > 0:
        ev = _jacobi_single(_symmetrized_rows(a), JACOBI_TOL, JACOBI_MAX_SWEEPS)
        return min(ev), max(ev)
    ev = sym_eigenvalues(a)
    return ev.min(axis=-1), ev.max(axis=-1)
