"""Optimal Frobenius projection of an arbitrary square matrix onto M(b, n).

Reshape A into the 4-D tensor At[l, j, k, i] = A[l*b + j, k*b + i]. A member
of M(b, n) has every (j, k) slice At[:, j, k, :] equal to an outer product,
so the squared-distance objective splits into b * (n/b) independent rank-1
approximation problems, each solved optimally by SVD truncation
(Eckart-Young). Reassembling the per-slice vectors gives the factors:
Ltilde_j[l, k] = u_jk[l] and R_k[j, i] = conj(v_jk)[i].

The per-slice phase is gauged by making the largest-magnitude entry of each
v_jk real and positive, which makes projections bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MonarchMatrix
from .errors import BadBlocking, IndexOutOfRange
from .numerics import frobenius, rank1_approx, svd
from .parallel import parallel_map
from .structured import BlockDiagMatrix


@dataclass
class ProjectionReport:
    input_norm: float
    residual: float
    per_slice_residuals: np.ndarray  # (b, n/b), indexed [j, k]
    block_size: int

    @property
    def relative_residual(self) -> float:
        return self.residual / self.input_norm if self.input_norm > 0 else 0.0


def _check_square_blocking(a: np.ndarray, b: int | None) -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise BadBlocking(f"projection needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if b is None:
        root = math.isqrt(n)
        if root * root != n:
            raise BadBlocking(f"n={n} is not a perfect square; pass b explicitly")
        b = root
    if n % b != 0 or not 1 < b < n:
        raise BadBlocking(f"need b | n and 1 < b < n, got b={b}, n={n}")
    return b


def slice_view(a, b: int, j: int, k: int) -> np.ndarray:
    """The (n/b) x b slice with entry (l, i) = a[l*b + j, k*b + i]."""
    a = np.asarray(a)
    b = _check_square_blocking(a, b)
    q = a.shape[0] // b
    if not (0 <= j < b and 0 <= k < q):
        raise IndexOutOfRange(f"slice index (j={j}, k={k}) outside ({b}, {q})")
    return a.reshape(q, b, q, b)[:, j, k, :].copy()


def project(a, b: int | None = None, threads: int = 1):
    """Closest Monarch matrix in Frobenius norm, with a residual report.

    Returns (MonarchMatrix, ProjectionReport). Slices are independent, so
    the per-slice work may run on a thread pool without changing results.
    """
    a = np.asarray(a)
    b = _check_square_blocking(a, b)
    n = a.shape[0]
    q = n // b
    four_d = a.reshape(q, b, q, b)
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64

    def solve_slice(jk):
        j, k = jk
        piece = np.ascontiguousarray(four_d[:, j, k, :])
        u, v = rank1_approx(piece)
        if np.any(v != 0):
            top = int(np.argmax(np.abs(v)))
            phase = np.conj(v[top] / abs(v[top]))
            v = v * phase
            u = u * phase
        resid = frobenius(piece - np.multiply.outer(u, np.conj(v)))
        return u, v, resid

    results = parallel_map(solve_slice, [(j, k) for j in range(b) for k in range(q)], threads)

    ltilde = np.zeros((b, q, q), dtype=dtype)
    rblocks = np.zeros((q, b, b), dtype=dtype)
    per_slice = np.zeros((b, q))
    for (j, k), (u, v, resid) in zip([(j, k) for j in range(b) for k in range(q)], results):
        ltilde[j, :, k] = u
        rblocks[k, j, :] = np.conj(v)
        per_slice[j, k] = resid
    m = MonarchMatrix(ltilde=BlockDiagMatrix(ltilde), r=BlockDiagMatrix(rblocks))
    residual = float(np.sqrt(np.sum(per_slice**2)))
    report = ProjectionReport(
        input_norm=frobenius(a),
        residual=residual,
        per_slice_residuals=per_slice,
        block_size=b,
    )
    return m, report


def slice_singular_ratios(a, b: int) -> np.ndarray:
    """sigma_2 / sigma_1 per slice (0 where sigma_1 = 0): the rank-1 test."""
    a = np.asarray(a)
    b = _check_square_blocking(a, b)
    q = a.shape[0] // b
    ratios = np.zeros((b, q))
    for j in range(b):
        for k in range(q):
            s = svd(slice_view(a, b, j, k)).s
            if len(s) > 1 and s[0] > 0:
                ratios[j, k] = s[1] / s[0]
    return ratios
