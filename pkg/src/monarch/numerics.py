"""Field-generic dense linear algebra built on numpy arrays.

Matrices are plain 2-D ndarrays over float64 (real field) or complex128
(complex field). The solvers here are written out explicitly rather than
delegated to LAPACK so that every downstream module rests on a single,
inspectable floating-point path:

  * matmul        - fixed k-ascending accumulation order (reproducible)
  * lu_invert     - partial-pivot LU with an explicit singularity threshold
  * svd           - one-sided Jacobi rotations, unconditionally convergent
                    in this size regime
  * eig           - Hessenberg reduction + shifted QR in complex arithmetic

All functions are pure; none mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import add_multiplies
from .errors import (
    DefectiveMatrix,
    DimensionMismatch,
    NoConvergence,
    SingularMatrix,
)

REAL = "real"
COMPLEX = "complex"

#: machine epsilon for float64
EPS = float(np.finfo(np.float64).eps)

#: pivot magnitude below this multiple of max|entry| counts as singular
SINGULAR_PIVOT_RTOL = 1e-12

#: eigenvector matrices with condition estimates above this are defective
DEFECTIVE_CONDITION = 1e10

_SVD_MAX_SWEEPS = 60
_SVD_ORTH_TOL = 1e-14


def dtype_for(field: str):
    if field == REAL:
        return np.float64
    if field == COMPLEX:
        return np.complex128
    raise ValueError(f"unknown field {field!r}")


def field_of(a) -> str:
    return COMPLEX if np.iscomplexobj(a) else REAL


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def matmul(a, b) -> np.ndarray:
    """Dense product with k-ascending accumulation.

    Every output entry is accumulated in the same order as the textbook
    triple loop with innermost index k, so results are bit-reproducible.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch("matmul operands must be 2-D")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape} x {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.result_type(a.dtype, b.dtype))
    for k in range(a.shape[1]):
        out += np.multiply.outer(a[:, k], b[k, :])
    add_multiplies(a.shape[0] * a.shape[1] * b.shape[1])
    return out


# ---------------------------------------------------------------------------
# LU


def _lu_factor(a: np.ndarray):
    """In-place Doolittle LU with partial pivoting. Returns (lu, perm)."""
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    threshold = SINGULAR_PIVOT_RTOL * scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= threshold:
            raise SingularMatrix(
                f"pivot {abs(lu[p, k]):.3e} at column {k} below {threshold:.3e}"
            )
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.multiply.outer(lu[k + 1 :, k], lu[k, k + 1 :])
        add_multiplies((n - k - 1) * (n - k))
    return lu, perm


def lu_invert(a) -> np.ndarray:
    """Inverse via partial-pivot LU; raises SingularMatrix on tiny pivots."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("lu_invert needs a square matrix")
    n = a.shape[0]
    if n == 0:
        return a.copy()
    lu, perm = _lu_factor(a)
    # Solve A X = I: forward substitution on the permuted identity, then back.
    y = np.eye(n, dtype=lu.dtype)[perm]
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    add_multiplies(n * n * (n - 1) // 2)
    x = y
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            x[i] -= lu[i, i + 1 :] @ x[i + 1 :]
        x[i] /= lu[i, i]
    add_multiplies(n * n * (n + 1) // 2)
    return x


# ---------------------------------------------------------------------------
# SVD


@dataclass
class SvdResult:
    u: np.ndarray  # columns orthonormal
    s: np.ndarray  # nonnegative, descending
    v: np.ndarray  # columns orthonormal; a = u @ diag(s) @ v.conj().T


def svd(a, max_sweeps: int = _SVD_MAX_SWEEPS) -> SvdResult:
    """Thin SVD by one-sided Jacobi rotations on the columns.

    Raises NoConvergence if column pairs are still far from orthogonal after
    the sweep budget.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionMismatch("svd operand must be 2-D")
    rows, cols = a.shape
    if rows < cols:
        flipped = svd(a.conj().T, max_sweeps=max_sweeps)
        return SvdResult(u=flipped.v, s=flipped.s, v=flipped.u)
    dtype = dtype_for(field_of(a))
    w = a.astype(dtype).copy()
    v = np.eye(cols, dtype=dtype)
    # columns whose norm falls below machine noise relative to |a|_F are
    # numerically zero: rotating them never converges, so freeze them
    zero_col_sq = (4.0 * EPS * float(np.linalg.norm(a))) ** 2
    if cols > 1:
        converged = False
        for _ in range(max_sweeps):
            worst = 0.0
            for p in range(cols - 1):
                for q in range(p + 1, cols):
                    app = float(np.vdot(w[:, p], w[:, p]).real)
                    aqq = float(np.vdot(w[:, q], w[:, q]).real)
                    apq = complex(np.vdot(w[:, p], w[:, q]))
                    add_multiplies(3 * rows)
                    if app <= zero_col_sq or aqq <= zero_col_sq:
                        continue
                    scale = math.sqrt(app) * math.sqrt(aqq)
                    rel = abs(apq) / scale
                    worst = max(worst, rel)
                    if rel <= _SVD_ORTH_TOL:
                        continue
                    mag = abs(apq)
                    phase = apq / mag
                    zeta = (aqq - app) / (2.0 * mag)
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                    cs = 1.0 / math.sqrt(1.0 + t * t)
                    sn = cs * t
                    if dtype == np.float64:
                        phase = phase.real
                    wp = w[:, p].copy()
                    w[:, p] = cs * wp - sn * np.conj(phase) * w[:, q]
                    w[:, q] = sn * phase * wp + cs * w[:, q]
                    vp = v[:, p].copy()
                    v[:, p] = cs * vp - sn * np.conj(phase) * v[:, q]
                    v[:, q] = sn * phase * vp + cs * v[:, q]
                    add_multiplies(4 * rows + 4 * cols)
            if worst <= _SVD_ORTH_TOL:
                converged = True
                break
        if not converged:
            raise NoConvergence(f"jacobi svd: not orthogonal after {max_sweeps} sweeps")
    norms = np.sqrt(np.sum(np.abs(w) ** 2, axis=0))
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    w = w[:, order]
    v = v[:, order]
    # frozen numerically-zero columns hold rounding junk: their directions
    # are completed orthonormally instead of normalized
    significant = norms > math.sqrt(zero_col_sq)
    u = np.zeros((rows, cols), dtype=dtype)
    filled = []
    for j in range(cols):
        if significant[j]:
            u[:, j] = w[:, j] / norms[j]
            filled.append(j)
    for j in range(cols):
        if significant[j]:
            continue
        u[:, j] = _orthonormal_completion(u, filled, rows, dtype)
        filled.append(j)
    return SvdResult(u=u, s=norms, v=v)


def _orthonormal_completion(u, filled, rows, dtype):
    """A unit vector orthogonal to the already-filled columns of u."""
    for cand in range(rows):
        vec = np.zeros(rows, dtype=dtype)
        vec[cand] = 1.0
        for j in filled:
            vec -= np.vdot(u[:, j], vec) * u[:, j]
        nrm = float(np.linalg.norm(vec))
        if nrm > 0.5 / math.sqrt(rows):
            return vec / nrm
    raise NoConvergence("orthonormal completion failed")  # unreachable for rows >= cols


def rank1_approx(a):
    """Best rank-1 approximation a ~ outer(u, conj(v)) (Eckart-Young).

    Returns (u, v) with u = s_1 * U[:, 0] and v = V[:, 0]; both zero vectors
    for a zero matrix.
    """
    a = np.asarray(a)
    res = svd(a)
    if res.s[0] == 0.0:
        return np.zeros(a.shape[0], dtype=res.u.dtype), np.zeros(a.shape[1], dtype=res.v.dtype)
    return res.s[0] * res.u[:, 0], res.v[:, 0].copy()


def cond_estimate(a) -> float:
    """sigma_max / sigma_min; inf when the smallest singular value is zero."""
    s = svd(a).s
    smallest = s[-1] if len(s) else 0.0
    if smallest == 0.0:
        return math.inf
    return float(s[0] / smallest)


# ---------------------------------------------------------------------------
# Eigendecomposition


@dataclass
class EigResult:
    q: np.ndarray  # eigenvector columns, unit norm
    lam: np.ndarray  # eigenvalues, order matching q's columns (unsorted)


def _hessenberg(a: np.ndarray):
    """Householder reduction to upper Hessenberg form: a = q @ h @ q*."""
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n, dtype=a.dtype)
    for k in range(n - 2):
        x = h[k + 1 :, k]
        norm_x = float(np.linalg.norm(x))
        if norm_x == 0.0:
            continue
        v = x.copy()
        pivot = v[0]
        sign = pivot / abs(pivot) if pivot != 0 else 1.0
        v[0] += sign * norm_x
        vnorm = float(np.linalg.norm(v))
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1 :, k:] -= 2.0 * np.multiply.outer(v, v.conj() @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.multiply.outer(h[:, k + 1 :] @ v, v.conj())
        q[:, k + 1 :] -= 2.0 * np.multiply.outer(q[:, k + 1 :] @ v, v.conj())
        add_multiplies(4 * n * (n - k))
    return h, q


def _wilkinson_shift(t, hi):
    a = t[hi - 1, hi - 1]
    b = t[hi - 1, hi]
    c = t[hi, hi - 1]
    d = t[hi, hi]
    tr = a + d
    disc = np.sqrt((a - d) * (a - d) + 4.0 * b * c + 0j)
    mu1 = (tr + disc) / 2.0
    mu2 = (tr - disc) / 2.0
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _schur(h: np.ndarray, budget_per_eigenvalue: int = 60):
    """Shifted QR iteration on a Hessenberg matrix: h = z @ t @ z*."""
    n = h.shape[0]
    t = h.astype(np.complex128).copy()
    z = np.eye(n, dtype=np.complex128)
    scale = max(float(np.linalg.norm(t)), 1.0)
    budget = budget_per_eigenvalue * max(n, 1)
    steps = 0
    hi = n - 1
    stagnation = 0
    while hi > 0:
        # deflate converged subdiagonals
        for k in range(hi, 0, -1):
            tol = EPS * (abs(t[k - 1, k - 1]) + abs(t[k, k])) + 1e-300
            if abs(t[k, k - 1]) <= max(tol, EPS * scale * 1e-4):
                t[k, k - 1] = 0.0
        if t[hi, hi - 1] == 0.0:
            hi -= 1
            stagnation = 0
            continue
        lo = hi
        while lo > 0 and t[lo, lo - 1] != 0.0:
            lo -= 1
        steps += 1
        stagnation += 1
        if steps > budget:
            raise NoConvergence(f"qr eigensolver: {budget} steps exhausted")
        if stagnation % 12 == 0:
            mu = t[hi, hi] + 0.75 * abs(t[hi, hi - 1])  # exceptional shift
        else:
            mu = _wilkinson_shift(t, hi)
        size = hi - lo + 1
        block = t[lo : hi + 1, lo : hi + 1] - mu * np.eye(size, dtype=np.complex128)
        rot = np.eye(size, dtype=np.complex128)
        for k in range(size - 1):
            f = block[k, k]
            g = block[k + 1, k]
            denom = math.hypot(abs(f), abs(g))
            if denom == 0.0:
                continue
            if f == 0.0:
                cs, sn = 0.0, 1.0 + 0j
            else:
                cs = abs(f) / denom
                sn = (f / abs(f)) * np.conj(g) / denom
            gmat = np.eye(size, dtype=np.complex128)
            gmat[k, k] = cs
            gmat[k, k + 1] = sn
            gmat[k + 1, k] = -np.conj(sn)
            gmat[k + 1, k + 1] = cs
            block = gmat @ block
            rot = gmat @ rot
        add_multiplies(6 * size * size)
        # similarity transform by rot*: t <- (rot t rot*) on the window
        t[lo : hi + 1, :] = rot @ t[lo : hi + 1, :]
        t[:, lo : hi + 1] = t[:, lo : hi + 1] @ rot.conj().T
        z[:, lo : hi + 1] = z[:, lo : hi + 1] @ rot.conj().T
        add_multiplies(4 * size * size * n)
    return t, z


def _triangular_eigenvectors(t: np.ndarray):
    """Eigenvectors of an upper-triangular matrix by back-substitution."""
    n = t.shape[0]
    y = np.zeros((n, n), dtype=np.complex128)
    scale = max(float(np.max(np.abs(t))), 1.0)
    for j in range(n):
        y[j, j] = 1.0
        for i in range(j - 1, -1, -1):
            rhs = -(t[i, i + 1 : j + 1] @ y[i + 1 : j + 1, j])
            denom = t[i, i] - t[j, j]
            if abs(denom) < EPS * scale:
                denom = EPS * scale
            y[i, j] = rhs / denom
        nrm = float(np.linalg.norm(y[: j + 1, j]))
        if nrm > 0.0:
            y[: j + 1, j] /= nrm
    add_multiplies(n * n * n // 3)
    return y


def eig(a) -> EigResult:
    """Eigendecomposition a @ q = q @ diag(lam), computed in complex arithmetic.

    Real inputs are promoted; raises DefectiveMatrix when the eigenvector
    matrix condition estimate exceeds DEFECTIVE_CONDITION, NoConvergence when
    the QR iteration stalls. Eigenvalues are returned unsorted.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("eig needs a square matrix")
    n = a.shape[0]
    ac = a.astype(np.complex128)
    if n == 0:
        return EigResult(q=ac.copy(), lam=np.zeros(0, dtype=np.complex128))
    if n == 1:
        return EigResult(q=np.ones((1, 1), dtype=np.complex128), lam=ac[0].copy())
    h, q0 = _hessenberg(ac)
    t, z = _schur(h)
    basis = (q0 @ z) @ _triangular_eigenvectors(t)
    norms = np.linalg.norm(basis, axis=0)
    norms[norms == 0.0] = 1.0
    basis = basis / norms
    lam = np.diag(t).copy()
    try:
        inv_basis = lu_invert(basis)
    except SingularMatrix as exc:
        raise DefectiveMatrix("eigenvector matrix is singular") from exc
    cond = frobenius(basis) * frobenius(inv_basis)
    if cond > DEFECTIVE_CONDITION:
        raise DefectiveMatrix(f"eigenvector condition estimate {cond:.3e}")
    return EigResult(q=basis, lam=lam)
