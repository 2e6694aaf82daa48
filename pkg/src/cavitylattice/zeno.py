"""Measurement operators, Zeno sectors and projected Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, OperatorMismatchError
from .expm import taylor_expm
from .fock import FockBasis
from .ops import SparseOperator

GROUP_TOL = 1e-9

__all__ = [
    "MeasurementSpec", "ZenoSector", "diffraction_minimum", "diffraction_maximum",
    "gradient_measurement", "sectors", "zeno_hamiltonian", "embed",
    "surviving_terms_report", "zeno_product_error", "sector_report",
]


@dataclass(frozen=True)
class MeasurementSpec:
    """Diagonal measurement ``a = C sum_j c_j n_j`` of a cavity with decay ``kappa``."""

    coefficients: tuple[complex, ...]
    prefactor: complex = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))
        if not any(c != 0 for c in self.coefficients):
            raise ValueError("measurement needs at least one nonzero coefficient")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")

    @property
    def num_sites(self) -> int:
        return len(self.coefficients)

    def _check(self, basis: FockBasis):
        if basis.num_sites != self.num_sites:
            raise OperatorMismatchError(
                f"measurement has {self.num_sites} coefficients, basis has {basis.num_sites} sites")

    def values(self, basis: FockBasis) -> np.ndarray:
        """``<n| D |n>`` for every basis state."""
        self._check(basis)
        return basis.occupations @ np.asarray(self.coefficients)

    def amplitudes(self, basis: FockBasis) -> np.ndarray:
        """Cavity amplitude ``alpha_n = C <n|D|n>`` per basis state."""
        return complex(self.prefactor) * self.values(basis)

    def operator(self, basis: FockBasis) -> SparseOperator:
        import scipy.sparse as sp
        return SparseOperator(sp.diags(self.values(basis)).tocsr(), basis.tag)


def diffraction_minimum(num_sites: int, **kw) -> MeasurementSpec:
    """Alternating coefficients ``+1, -1, +1, ...``."""
    return MeasurementSpec(tuple((-1) ** j for j in range(num_sites)), **kw)


def diffraction_maximum(num_sites: int, **kw) -> MeasurementSpec:
    return MeasurementSpec((1,) * num_sites, **kw)


def gradient_measurement(num_lattice_sites: int, upsilon: float = 1.0, *, link: bool = True,
                         **kw) -> MeasurementSpec:
    """Site-weighted coefficients ``j * upsilon`` along a chain.

    With ``link`` two extra sites ``L, R`` follow the chain with
    coefficients ``upsilon`` and ``0``, so moving a link atom from ``R`` to
    ``L`` raises the measured value by one step.
    """
    coeffs = [j * upsilon for j in range(num_lattice_sites)]
    if link:
        coeffs += [upsilon, 0.0]
    return MeasurementSpec(tuple(coeffs), **kw)


@dataclass(frozen=True)
class ZenoSector:
    """Basis states sharing one measurement outcome."""

    value: complex          # <n|D|n>
    eigenvalue: complex     # C <n|D|n>
    members: np.ndarray
    projector: SparseOperator

    @property
    def dim(self) -> int:
        return len(self.members)

    def __post_init__(self):
        self.members.setflags(write=False)


def _integer_scale(coefficients) -> float | None:
    parts = np.array([[c.real, c.imag] for c in coefficients]).ravel()
    nz = np.abs(parts[parts != 0])
    if nz.size == 0:
        return None
    scale = nz.min()
    ratios = parts / scale
    return scale if np.allclose(ratios, np.round(ratios), rtol=0, atol=1e-12) else None


def _projector(basis: FockBasis, members: np.ndarray) -> SparseOperator:
    import scipy.sparse as sp
    d = np.zeros(basis.dim)
    d[members] = 1.0
    return SparseOperator(sp.diags(d).tocsr(), basis.tag)


def sectors(basis: FockBasis, measurement: MeasurementSpec, tol: float = GROUP_TOL) -> list[ZenoSector]:
    """Partition the basis by measurement outcome, sorted by ``(Re, Im)`` of the eigenvalue.

    Outcomes are grouped exactly when the coefficients are integer multiples
    of a common scale, and within ``tol`` otherwise.
    """
    measurement._check(basis)
    occ = basis.occupations
    scale = _integer_scale(measurement.coefficients)
    groups: dict = {}
    if scale is not None:
        re = np.round(np.array([c.real for c in measurement.coefficients]) / scale).astype(np.int64)
        im = np.round(np.array([c.imag for c in measurement.coefficients]) / scale).astype(np.int64)
        keys = np.stack([occ @ re, occ @ im], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for g, (kr, ki) in enumerate(uniq):
            groups[complex(kr * scale, ki * scale)] = np.flatnonzero(inverse == g)
    else:
        vals = measurement.values(basis)
        order = np.lexsort((vals.imag, vals.real))
        start = None
        current: list[int] = []
        for i in order:
            if start is not None and abs(vals[i] - start) <= tol:
                current.append(i)
                continue
            if current:
                groups[start] = np.sort(np.array(current))
            start, current = vals[i], [i]
        if current:
            groups[start] = np.sort(np.array(current))
    c = complex(measurement.prefactor)
    items = sorted(groups.items(), key=lambda kv: ((c * kv[0]).real, (c * kv[0]).imag))
    return [ZenoSector(v, c * v, np.asarray(m, dtype=np.int64), _projector(basis, m)) for v, m in items]


def sector_of(sector_list: Sequence[ZenoSector], value: complex, tol: float = GROUP_TOL) -> ZenoSector:
    for s in sector_list:
        if abs(s.value - value) <= tol:
            return s
    raise KeyError(f"no sector with measured value {value}")


def zeno_hamiltonian(h: SparseOperator, sector: ZenoSector) -> SparseOperator:
    """``P H P`` on the sector's own basis (rows and columns in member order)."""
    if sector.dim == 0:
        raise ContractError("empty sector")
    if h.basis_tag != sector.projector.basis_tag:
        raise OperatorMismatchError("Hamiltonian and sector live on different bases")
    return h.restrict(sector.members, f"{h.basis_tag}|D={sector.value}")


def embed(block: SparseOperator, sector: ZenoSector) -> SparseOperator:
    """Zero-padded full-basis operator whose sector block is ``block``."""
    import scipy.sparse as sp
    n = sector.projector.dim
    if block.dim != sector.dim:
        raise OperatorMismatchError("block size does not match the sector")
    c = block.matrix.tocoo()
    m = sector.members
    return SparseOperator(sp.csr_matrix((c.data, (m[c.row], m[c.col])), shape=(n, n)),
                          sector.projector.basis_tag)


def surviving_terms_report(terms: Iterable, sector_list, atol: float = 0.0) -> list[tuple[str, bool]]:
    """``(label, survives)`` per labelled term.

    ``terms`` yields ``(label, operator)`` or ``(label, kind, operator)``; a
    term survives when any of its sector blocks has an entry above ``atol``.
    """
    if isinstance(sector_list, ZenoSector):
        sector_list = [sector_list]
    out = []
    for term in terms:
        label, op = term[0], term[-1]
        alive = any(zeno_hamiltonian(op, s).max_abs() > atol for s in sector_list)
        out.append((label, alive))
    return out


def zeno_product_error(h: SparseOperator, sector: ZenoSector, t: float,
                       steps: Sequence[int] = (100, 1000, 10000)) -> list[float]:
    """Spectral-norm distance ``||(P e^{-iHt/N} P)^N - e^{-i H_Z t}||`` per ``N``.

    Checks the Zeno limit: interrupting the evolution ``N`` times with the
    projector approaches the projected dynamics as ``N`` grows.
    """
    if h.dim > 400:
        raise ContractError("zeno_product_error is a dense check meant for small systems")
    m = sector.members
    target = taylor_expm(-1j * t * zeno_hamiltonian(h, sector).to_dense())
    dense = h.to_dense()
    errs = []
    for n in steps:
        u = taylor_expm(-1j * (t / n) * dense)[np.ix_(m, m)]
        errs.append(float(np.linalg.norm(np.linalg.matrix_power(u, int(n)) - target, 2)))
    return errs


def sector_report(sector_list: Sequence[ZenoSector]) -> list[dict]:
    return [{"value": [s.value.real, s.value.imag],
             "eigenvalue": [s.eigenvalue.real, s.eigenvalue.imag],
             "dimension": s.dim,
             "members": s.members.tolist()} for s in sector_list]
