"""Scaled-and-squared Taylor matrix exponential."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .ops import SparseOperator

_MAX_TERMS = 60


def taylor_expm(a, tol: float = 1e-14) -> np.ndarray:
    """``exp(a)`` for a dense (or sparse / SparseOperator) square matrix.

    The matrix is scaled by ``2^-s`` so its 1-norm is at most 1/2, the Taylor
    series is summed until the next term falls below ``tol`` relative to the
    partial sum, and the result is squared ``s`` times.
    """
    if isinstance(a, SparseOperator):
        a = a.to_dense()
    elif sp.issparse(a):
        a = a.toarray()
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    a = a / (2.0 ** s)
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, _MAX_TERMS):
        term = term @ a / k
        out += term
        if np.abs(term).max() <= tol * max(1.0, np.abs(out).max()):
            break
    for _ in range(s):
        out = out @ out
    return out


def taylor_expm_apply(op, v: np.ndarray, t: complex = 1.0, tol: float = 1e-14) -> np.ndarray:
    """``exp(t * op) @ v`` without forming the exponential.

    The interval is split into substeps with ``|t| * ||op||_1 / steps <= 1/2``
    and each substep is a truncated Taylor series acting on the vector.
    """
    m = op.matrix if isinstance(op, SparseOperator) else sp.csr_matrix(op)
    norm = float(np.abs(m).sum(axis=0).max()) if m.nnz else 0.0
    steps = max(1, int(math.ceil(2 * abs(t) * norm)))
    h = t / steps
    w = np.asarray(v, dtype=complex).copy()
    for _ in range(steps):
        term = w.copy()
        acc = w.copy()
        for k in range(1, _MAX_TERMS):
            term = (m @ term) * (h / k)
            acc += term
            if np.abs(term).max(initial=0.0) <= tol * max(1.0, np.abs(acc).max(initial=0.0)):
                break
        w = acc
    return w
