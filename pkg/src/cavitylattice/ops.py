"""Sparse complex operators on a Fock basis and second-quantised builders.

Every builder applies its operator string to each basis state with the usual
bosonic factors, working right to left in the capped single-site spaces.
Transitions that would push any site above the cap, or that land outside the
basis (sector or predicate), are dropped. This is plain truncation: products
of truncated operators are *not* the truncation of the exact product near the
cap, and no normal ordering is ever applied implicitly.
"""

from __future__ import annotations

from numbers import Number
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, OperatorMismatchError
from .fock import FockBasis

__all__ = [
    "SparseOperator", "add", "scale", "multiply", "adjoint", "commutator",
    "fock_string", "hop", "number", "create", "annihilate", "pair_create",
    "pair_annihilate", "onsite_pair", "identity", "zero", "total_number",
    "coupling_operator",
]


class SparseOperator:
    """Immutable complex sparse matrix tagged with the basis it acts on."""

    __slots__ = ("_m", "basis_tag")

    def __init__(self, matrix, basis_tag: str):
        m = sp.csr_matrix(matrix, dtype=np.complex128)
        if m.shape[0] != m.shape[1]:
            raise OperatorMismatchError(f"operator must be square, got {m.shape}")
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self._m = m
        self.basis_tag = basis_tag

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, int, complex]], basis_tag: str):
        entries = list(entries)
        if not entries:
            return cls(sp.csr_matrix((dim, dim)), basis_tag)
        r, c, v = zip(*entries)
        r, c = np.asarray(r), np.asarray(c)
        if r.min() < 0 or c.min() < 0 or r.max() >= dim or c.max() >= dim:
            raise OperatorMismatchError(f"entry index out of range for dim {dim}")
        return cls(sp.coo_matrix((np.asarray(v, complex), (r, c)), shape=(dim, dim)), basis_tag)

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def shape(self):
        return self._m.shape

    @property
    def nnz(self) -> int:
        return self._m.nnz

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self._m.tocoo()
        return [(int(r), int(c), complex(v)) for r, c, v in zip(coo.row, coo.col, coo.data)]

    def _check(self, other: "SparseOperator"):
        if not isinstance(other, SparseOperator):
            raise TypeError(f"expected SparseOperator, got {type(other).__name__}")
        if other.dim != self.dim:
            raise OperatorMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if other.basis_tag != self.basis_tag:
            raise OperatorMismatchError(f"basis mismatch: {self.basis_tag} vs {other.basis_tag}")

    def __add__(self, other):
        self._check(other)
        return SparseOperator(self._m + other._m, self.basis_tag)

    def __sub__(self, other):
        self._check(other)
        return SparseOperator(self._m - other._m, self.basis_tag)

    def __neg__(self):
        return SparseOperator(-self._m, self.basis_tag)

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return SparseOperator(self._m * complex(c), self.basis_tag)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self._m @ other._m, self.basis_tag)
        return self._m @ np.asarray(other)

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self._m.conj().T, self.basis_tag)

    @property
    def H(self) -> "SparseOperator":
        return self.adjoint()

    def to_dense(self) -> np.ndarray:
        return self._m.toarray()

    def diagonal(self) -> np.ndarray:
        return self._m.diagonal()

    def max_abs(self) -> float:
        return float(np.abs(self._m.data).max()) if self._m.nnz else 0.0

    def is_zero(self, atol: float = 0.0) -> bool:
        return self.max_abs() <= atol

    def hermiticity_error(self) -> float:
        """Largest entry of ``|A - A^dagger|``."""
        d = self._m - self._m.conj().T
        return float(np.abs(d.data).max()) if d.nnz else 0.0

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= atol * max(1.0, self.max_abs())

    def hermitian_part(self) -> "SparseOperator":
        return SparseOperator(0.5 * (self._m + self._m.conj().T), self.basis_tag)

    def restrict(self, indices: Sequence[int], basis_tag: str) -> "SparseOperator":
        """Sub-block on rows and columns ``indices``, re-indexed in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        return SparseOperator(self._m[idx][:, idx], basis_tag)

    def approx_equal(self, other: "SparseOperator", atol: float = 1e-12) -> bool:
        self._check(other)
        return (self - other).max_abs() <= atol

    def __repr__(self):
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz}, basis={self.basis_tag!r})"


def add(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a + b


def scale(a: SparseOperator, c: complex) -> SparseOperator:
    return a * c


def multiply(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b


def adjoint(a: SparseOperator) -> SparseOperator:
    return a.adjoint()


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b - b @ a


def _check_site(basis: FockBasis, *sites: int):
    for s in sites:
        if not (isinstance(s, (int, np.integer)) and 0 <= s < basis.num_sites):
            raise IndexError(f"site {s!r} out of range for {basis.num_sites} sites")


def fock_string(basis: FockBasis, factors: Sequence[tuple[int, bool]]) -> SparseOperator:
    """Matrix of a product of ladder operators.

    ``factors`` lists ``(site, is_creation)`` left to right as written in the
    operator product; the rightmost factor acts first.
    """
    _check_site(basis, *(s for s, _ in factors))
    occ = basis.occupations.copy()
    amp = np.ones(len(basis))
    ok = np.ones(len(basis), dtype=bool)
    cap = basis.max_per_site
    for site, dagger in reversed(factors):
        n = occ[:, site]
        if dagger:
            amp *= np.sqrt(np.maximum(n + 1, 0).astype(float))
            n += 1
            ok &= n <= cap
        else:
            ok &= n > 0
            amp *= np.sqrt(np.maximum(n, 0).astype(float))
            n -= 1
    cols = np.flatnonzero(ok)
    rows = basis.lookup(occ[cols])
    keep = rows >= 0
    m = sp.coo_matrix((amp[cols][keep].astype(complex), (rows[keep], cols[keep])),
                      shape=(len(basis), len(basis)))
    return SparseOperator(m, basis.tag)


def hop(basis: FockBasis, i: int, j: int) -> SparseOperator:
    """``b_i^dagger b_j``; ``hop(i, i)`` is the number operator ``n_i``."""
    if i == j:
        return number(basis, i)
    return fock_string(basis, [(i, True), (j, False)])


def number(basis: FockBasis, i: int) -> SparseOperator:
    _check_site(basis, i)
    n = len(basis)
    return SparseOperator(sp.diags(basis.occupations[:, i].astype(complex), format="csr", shape=(n, n)), basis.tag)


def total_number(basis: FockBasis) -> SparseOperator:
    n = len(basis)
    return SparseOperator(sp.diags(basis.particle_numbers.astype(complex), format="csr", shape=(n, n)), basis.tag)


def _require_no_sector(basis: FockBasis, what: str):
    if basis.total_number is not None:
        raise ContractError(f"{what} changes particle number; use a basis without total_number")


def create(basis: FockBasis, i: int) -> SparseOperator:
    _require_no_sector(basis, "create")
    return fock_string(basis, [(i, True)])


def annihilate(basis: FockBasis, i: int) -> SparseOperator:
    _require_no_sector(basis, "annihilate")
    return fock_string(basis, [(i, False)])


def pair_create(basis: FockBasis, i: int, j: int) -> SparseOperator:
    """``b_i^dagger b_j^dagger``."""
    _require_no_sector(basis, "pair_create")
    return fock_string(basis, [(i, True), (j, True)])


def pair_annihilate(basis: FockBasis, i: int, j: int) -> SparseOperator:
    """``b_j b_i``, the adjoint of :func:`pair_create`."""
    _require_no_sector(basis, "pair_annihilate")
    return fock_string(basis, [(j, False), (i, False)])


def onsite_pair(basis: FockBasis, i: int) -> SparseOperator:
    """``b_i^dagger b_i^dagger b_i b_i = n_i (n_i - 1)``."""
    _check_site(basis, i)
    n = basis.occupations[:, i].astype(float)
    d = len(basis)
    return SparseOperator(sp.diags((n * (n - 1)).astype(complex), format="csr", shape=(d, d)), basis.tag)


def identity(basis: FockBasis) -> SparseOperator:
    return SparseOperator(sp.identity(len(basis), dtype=complex, format="csr"), basis.tag)


def zero(basis: FockBasis) -> SparseOperator:
    return SparseOperator(sp.csr_matrix((len(basis), len(basis)), dtype=complex), basis.tag)


def coupling_operator(basis: FockBasis, tensor) -> SparseOperator:
    """Light-matter coupling operator ``sum_ij J_ij b_i^dagger b_j`` for one mode pair."""
    if tensor.num_sites != basis.num_sites:
        raise OperatorMismatchError(
            f"tensor covers {tensor.num_sites} sites, basis has {basis.num_sites}"
        )
    out = zero(basis)
    for (i, j), value in sorted(tensor.entries.items()):
        if value != 0:
            out = out + complex(value) * hop(basis, i, j)
    return out
