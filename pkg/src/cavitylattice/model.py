"""Effective atomic Hamiltonians with cavity-mediated terms, and model presets.

Energies are dimensionless; by convention the classical nearest-neighbour
tunnelling is the unit. Cavity-cavity products are dropped, and the cavity
terms use the symmetric split ``(J^dag J + J J^dag) / 2``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import ops
from .errors import (AssemblyError, CavitySingularityError, ContractError,
                     NonNearestNeighbourError)
from .fock import FockBasis, build_basis
from .geometry import CouplingTensor
from .ops import SparseOperator

__all__ = [
    "Cavity", "ModelSpec", "BuiltModel", "TwoBodyKind", "TwoBodyTerm",
    "cavity_prefactor", "chain_bonds", "matter_hamiltonian",
    "build_effective_hamiltonian", "heisenberg_residual", "classify_two_body",
    "correlated_tunnelling_terms", "preset_correlated_tunnelling",
    "preset_density_density", "preset_superexchange", "superexchange_spin_form",
    "preset_generalised_dicke", "dicke_couplings", "reservoir_pair_coupling",
    "preset_two_species_dicke", "preset_pair_bhm", "preset_gauge_field",
]

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Cavity:
    """One cavity mode ``m != 0`` driven by scattering from the pump."""

    label: int
    detuning: float
    kappa: float
    omega_pump: complex = 1.0     # Omega_m0 = g_m g_0 / Delta_a
    omega_self: float | None = None  # Omega_mm, used only for the dispersive-shift check
    frequency: float | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"cavity {self.label}: kappa must be >= 0")
        if self.label == 0:
            raise ValueError("mode label 0 is reserved for the pump")


@dataclass(frozen=True)
class ModelSpec:
    """Physical parameters of the extended Bose-Hubbard model.

    ``tunnelling`` is either a uniform nearest-neighbour rate applied in both
    directions on ``bonds`` (an open chain by default) or an explicit map
    ``(i, j) -> J^T_ij`` over ordered pairs. ``tensors`` maps mode pairs such
    as ``(0, 0)`` and ``(m, 0)`` to coupling tensors.
    """

    tunnelling: float | Mapping[tuple[int, int], complex] = 1.0
    interaction: float = 0.0
    pump_amplitude: complex = 1.0
    pump_omega: float = 0.0
    cavities: tuple[Cavity, ...] = ()
    tensors: Mapping[tuple, CouplingTensor] = field(default_factory=dict)
    bonds: tuple[tuple[int, int], ...] | None = None
    pump_frequency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        object.__setattr__(self, "tensors", {tuple(k): v for k, v in dict(self.tensors).items()})

    def cavity(self, label) -> Cavity:
        for c in self.cavities:
            if c.label == label:
                return c
        raise KeyError(f"no cavity labelled {label!r}")

    def tensor(self, m, n) -> CouplingTensor:
        if (m, n) in self.tensors:
            return self.tensors[(m, n)]
        if (n, m) in self.tensors:
            return self.tensors[(n, m)].conjugate()
        raise AssemblyError(f"no coupling tensor for mode pair {(m, n)}")


@dataclass(frozen=True)
class BuiltModel:
    basis: FockBasis
    hamiltonian: SparseOperator
    info: dict = field(default_factory=dict)


def _finalise(h: SparseOperator) -> SparseOperator:
    err = h.hermiticity_error()
    if err > HERMITIAN_TOL * max(1.0, h.max_abs()):
        raise AssemblyError(f"assembled Hamiltonian is not Hermitian (max |H - H^dag| = {err:.3e})")
    return h.hermitian_part()


def cavity_prefactor(spec: ModelSpec, m) -> complex:
    """Steady-state prefactor ``C_m = Omega_m0 alpha_0 / (i kappa_m + Delta_m)``."""
    cav = spec.cavity(m)
    denom = 1j * cav.kappa + cav.detuning
    if denom == 0:
        raise CavitySingularityError(f"cavity {m}: kappa = Delta = 0 has no steady state")
    return complex(cav.omega_pump) * complex(spec.pump_amplitude) / denom


def chain_bonds(num_sites: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(num_sites - 1)]


def _directed(bonds: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    for i, j in bonds:
        out += [(i, j), (j, i)]
    return out


def matter_hamiltonian(basis: FockBasis, spec: ModelSpec) -> SparseOperator:
    """Bose-Hubbard part ``sum_ij J^T_ij b_i^dag b_j + (U/2) sum_i b_i^dag b_i^dag b_i b_i``."""
    h = ops.zero(basis)
    if isinstance(spec.tunnelling, Mapping):
        pairs = spec.tunnelling.items()
    else:
        bonds = spec.bonds if spec.bonds is not None else chain_bonds(basis.num_sites)
        pairs = [(ij, spec.tunnelling) for ij in _directed(bonds)]
    for (i, j), t in pairs:
        if t != 0:
            h = h + complex(t) * ops.hop(basis, i, j)
    if spec.interaction:
        for i in range(basis.num_sites):
            h = h + 0.5 * spec.interaction * ops.onsite_pair(basis, i)
    return h


def _rough_norm(op: SparseOperator) -> float:
    return float(np.abs(op.matrix).sum(axis=1).max()) if op.nnz else 0.0


def build_effective_hamiltonian(basis: FockBasis, spec: ModelSpec) -> SparseOperator:
    """Effective atomic Hamiltonian after eliminating the cavity modes.

    ``H = H_M + Omega_00 |alpha_0|^2 J_00
          + sum_m (Delta_m |C_m|^2 / 2) (J_m0^dag J_m0 + J_m0 J_m0^dag)``
    """
    h = matter_hamiltonian(basis, spec)
    pump = spec.pump_omega * abs(spec.pump_amplitude) ** 2
    if pump != 0:
        h = h + pump * ops.coupling_operator(basis, spec.tensor(0, 0))
    for cav in spec.cavities:
        c = cavity_prefactor(spec, cav.label)
        jm = ops.coupling_operator(basis, spec.tensor(cav.label, 0))
        jd = jm.adjoint()
        h = h + (0.5 * cav.detuning * abs(c) ** 2) * (jd @ jm + jm @ jd)
        if cav.omega_self is not None and (cav.label, cav.label) in spec.tensors:
            shift = abs(cav.omega_self) * _rough_norm(ops.coupling_operator(basis, spec.tensors[(cav.label, cav.label)]))
            if cav.detuning == 0 or shift > 0.1 * abs(cav.detuning):
                warnings.warn(
                    f"cavity {cav.label}: dispersive shift {shift:.3g} is not small against "
                    f"|Delta| = {abs(cav.detuning):.3g}", RuntimeWarning, stacklevel=2)
    return _finalise(h)


def _kernel(basis: FockBasis, tensor: CouplingTensor, k: int, bs) -> SparseOperator:
    """``sum_j J_kj b_j``, the operator produced by ``[b_k, J]``."""
    out = ops.zero(basis)
    for j in range(basis.num_sites):
        v = tensor[(k, j)]
        if v != 0:
            out = out + v * bs[j]
    return out


def heisenberg_residual(basis: FockBasis, spec: ModelSpec, k: int, *,
                        symmetrized: bool = True, include_loss: bool = False) -> float:
    """Mismatch between the effective-Hamiltonian and substituted Heisenberg equations.

    Builds ``R = i[H_eff, b_k] - RHS`` where ``RHS`` is ``i[H_M, b_k]`` plus the
    light-matter right-hand side with the cavity operators replaced by their
    steady states, from the symmetrised (default) or the plain ordering of the
    light and matter operators. Only the coherent part ``Delta_m |C_m|^2`` of
    the substituted coefficient ``Omega_m0 alpha_0 C_m^*`` is kept unless
    ``include_loss``; the remaining ``i kappa_m |C_m|^2`` is cavity loss and
    has no Hermitian generator.

    Returns ``max |R|`` over the columns with total particle number ``<= cap``,
    the part of the capped space where canonical commutators hold exactly.
    """
    if basis.total_number is not None:
        raise ContractError("heisenberg_residual needs a basis without a number sector")
    bs = [ops.annihilate(basis, j) for j in range(basis.num_sites)]
    bk = bs[k]
    h_eff = build_effective_hamiltonian(basis, spec)
    lhs = 1j * ops.commutator(h_eff, bk)
    rhs = 1j * ops.commutator(matter_hamiltonian(basis, spec), bk)
    pump = spec.pump_omega * abs(spec.pump_amplitude) ** 2
    if pump != 0:
        rhs = rhs - 1j * pump * _kernel(basis, spec.tensor(0, 0), k, bs)
    alpha0 = complex(spec.pump_amplitude)
    for cav in spec.cavities:
        c = cavity_prefactor(spec, cav.label)
        t = spec.tensor(cav.label, 0)
        jm = ops.coupling_operator(basis, t)
        jd = jm.adjoint()
        x = _kernel(basis, t, k, bs)
        y = _kernel(basis, t.conjugate(), k, bs)
        g = complex(cav.omega_pump) * alpha0 * np.conj(c)          # a_m^dag a_0 term
        h = np.conj(complex(cav.omega_pump)) * np.conj(alpha0) * c  # a_0^dag a_m term
        if not include_loss:
            g = h = cav.detuning * abs(c) ** 2
        if symmetrized:
            rhs = rhs - 0.5j * (g * (jd @ x + x @ jd) + h * (jm @ y + y @ jm))
        else:
            rhs = rhs - 1j * (g * (jd @ x) + h * (jm @ y))
    r = (lhs - rhs).matrix.tocsc()
    cols = np.flatnonzero(basis.particle_numbers <= basis.max_per_site)
    block = r[:, cols]
    return float(np.abs(block.data).max()) if block.nnz else 0.0


class TwoBodyKind(str, enum.Enum):
    PAIR_TUNNELLING = "pair_tunnelling"
    PAIR_EXCHANGE = "pair_exchange"
    NEXT_NEAREST_EFFECTIVE = "next_nearest_effective"
    EFFECTIVE_PAIR_1 = "effective_pair_1"   # both atoms tunnel into the shared site
    EFFECTIVE_PAIR_2 = "effective_pair_2"   # both atoms tunnel out of the shared site
    LONG_RANGE_CORRELATED = "long_range_correlated"


@dataclass(frozen=True)
class TwoBodyTerm:
    kind: TwoBodyKind
    bond1: tuple[int, int]
    bond2: tuple[int, int]


def classify_two_body(bond1, bond2, neighbours=None) -> TwoBodyTerm:
    """Classify the correlated process ``b_i^dag b_j b_k^dag b_l``.

    A bond ``(i, j)`` stands for ``b_i^dag b_j``: one atom moves from ``j`` to
    ``i``. ``neighbours`` is a collection of unordered neighbour pairs; by
    default sites are on an open chain.
    """
    for b in (bond1, bond2):
        i, j = b
        ok = abs(i - j) == 1 if neighbours is None else frozenset(b) in {frozenset(p) for p in neighbours}
        if not ok or i == j:
            raise NonNearestNeighbourError(f"{tuple(b)} is not a nearest-neighbour bond")
    (i, j), (k, l) = bond1, bond2
    s1, s2 = {i, j}, {k, l}
    if s1 == s2:
        kind = TwoBodyKind.PAIR_TUNNELLING if (i, j) == (k, l) else TwoBodyKind.PAIR_EXCHANGE
    elif len(s1 & s2) == 1:
        (x,) = s1 & s2
        into1, into2 = x == i, x == k
        if into1 != into2:
            kind = TwoBodyKind.NEXT_NEAREST_EFFECTIVE
        elif into1:
            kind = TwoBodyKind.EFFECTIVE_PAIR_1
        else:
            kind = TwoBodyKind.EFFECTIVE_PAIR_2
    else:
        kind = TwoBodyKind.LONG_RANGE_CORRELATED
    return TwoBodyTerm(kind, (i, j), (k, l))


def hop_label(*bonds) -> str:
    return " ".join(f"b{i}+ b{j}" for i, j in bonds)


def correlated_tunnelling_terms(basis: FockBasis, bonds=None, *, single: bool = True):
    """Labelled single hops and all ordered products of two hops on ``bonds``.

    Returns a list of ``(label, kind, operator)`` where ``kind`` is
    ``"single_hop"`` or a :class:`TwoBodyKind` value.
    """
    bonds = chain_bonds(basis.num_sites) if bonds is None else list(bonds)
    directed = _directed(bonds)
    hops = {b: ops.hop(basis, *b) for b in directed}
    out = []
    if single:
        out += [(hop_label(b), "single_hop", hops[b]) for b in directed]
    for b1 in directed:
        for b2 in directed:
            kind = classify_two_body(b1, b2, neighbours=bonds).kind.value
            out.append((hop_label(b1, b2), kind, hops[b1] @ hops[b2]))
    return out


def preset_correlated_tunnelling(basis: FockBasis, one_body: complex, two_body: complex, bonds=None) -> SparseOperator:
    """``sum_<ij> t b_i^dag b_j + g sum_<ij>,<kl> b_i^dag b_j b_k^dag b_l`` over directed bonds."""
    bonds = chain_bonds(basis.num_sites) if bonds is None else list(bonds)
    directed = _directed(bonds)
    hops = {b: ops.hop(basis, *b) for b in directed}
    h = ops.zero(basis)
    for b in directed:
        h = h + one_body * hops[b]
    total = ops.zero(basis)
    for b in directed:
        total = total + hops[b]
    h = h + two_body * (total @ total)
    return _finalise(h)


@dataclass(frozen=True)
class IlluminatingCavity:
    """A cavity seen by some regions, with the phase of ``J_ii^{c0}`` in each."""

    detuning: float
    prefactor: complex
    phases: Mapping[str, float]


def preset_density_density(basis: FockBasis, regions: Mapping[str, Iterable[int]],
                           cavities: Sequence[IlluminatingCavity]):
    """Cavity-mediated density-density interactions between lattice regions.

    Each cavity contributes ``Delta_c |C_c|^2 |D_c|^2`` with
    ``D_c = sum_i exp(i phi_region(i)) n_i`` over the sites it illuminates.
    Returns the Hamiltonian and ``{(A, B): U_AB}`` with
    ``U_AB = sum_c Delta_c |C_c|^2 cos(phi_A - phi_B)``.
    """
    regions = {name: sorted(set(sites)) for name, sites in regions.items()}
    h = ops.zero(basis)
    strengths = {(a, b): 0.0 for a in regions for b in regions}
    for cav in cavities:
        coeff: dict[int, complex] = {}
        for name, phase in cav.phases.items():
            if name not in regions:
                raise KeyError(f"unknown region {name!r}")
            for s in regions[name]:
                z = np.exp(1j * phase)
                if s in coeff and not np.isclose(coeff[s], z):
                    raise ContractError(f"site {s} lies in overlapping regions with different phases")
                coeff[s] = z
        d = ops.zero(basis)
        for s, z in sorted(coeff.items()):
            d = d + z * ops.number(basis, s)
        u = cav.detuning * abs(cav.prefactor) ** 2
        h = h + (0.5 * u) * (d.adjoint() @ d + d @ d.adjoint())
        for a, pa in cav.phases.items():
            for b, pb in cav.phases.items():
                strengths[(a, b)] += u * np.cos(pa - pb)
    return _finalise(h), strengths


# site order of the double well: L-up, R-up, L-down, R-down
_LU, _RU, _LD, _RD = range(4)


def preset_superexchange(detuning: float, prefactor: complex, j_nn: complex) -> BuiltModel:
    """Two-species double well with cavity-induced pair exchange.

    ``H_ex = J_ex (b_Lu^dag b_Ru b_Rd^dag b_Ld + h.c.)`` with
    ``J_ex = 2 Delta_c |C_c J_nn|^2``, on the basis with one atom of each
    species. ``info["physical"]`` holds the one-atom-per-site states.
    """
    basis = build_basis(4, 1, 2, where=lambda s: s[_LU] + s[_RU] == 1 and s[_LD] + s[_RD] == 1,
                        label="double-well")
    j_ex = 2 * detuning * abs(prefactor * j_nn) ** 2
    x = ops.hop(basis, _LU, _RU) @ ops.hop(basis, _RD, _LD)
    h = _finalise(j_ex * (x + x.adjoint()))
    physical = [i for i, s in enumerate(basis.states) if s[_LU] + s[_LD] == 1 and s[_RU] + s[_RD] == 1]
    return BuiltModel(basis, h, {"J_ex": j_ex, "physical": physical})


def superexchange_spin_form(basis: FockBasis, j_ex: float) -> SparseOperator:
    """``J_ex (S_L^+ S_R^- + S_L^- S_R^+)`` with ``S_j^+ = b_ju^dag b_jd``, on ``basis``.

    A single spin flip changes the species numbers, so the product is formed
    on the unconstrained two-atom space and then restricted.
    """
    full = build_basis(4, 1, 2)
    x = ops.hop(full, _LU, _LD) @ ops.hop(full, _RD, _RU)
    idx = full.lookup(basis.occupations)
    if np.any(idx < 0):
        raise ContractError("basis is not a subset of the two-atom double-well space")
    return (j_ex * (x + x.adjoint())).restrict(idx, basis.tag)


def preset_generalised_dicke(mu1: float, mu2: float, lambda1: complex, lambda2: complex, cap: int) -> BuiltModel:
    """``sum_i mu_i n_i + (lambda1 b1^dag b2 + lambda2 b1^dag b2^dag + h.c.)`` on two capped modes."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    basis = build_basis(2, cap, label="dicke")
    x = lambda1 * ops.hop(basis, 0, 1) + lambda2 * ops.pair_create(basis, 0, 1)
    h = mu1 * ops.number(basis, 0) + mu2 * ops.number(basis, 1) + x + x.adjoint()
    return BuiltModel(basis, _finalise(h), {"mu": (mu1, mu2), "lambda": (lambda1, lambda2)})


def reservoir_pair_coupling(beta1: complex, beta2: complex, detuning: float,
                            prefactor: complex, j_nn: complex) -> complex:
    """Pair-creation amplitude ``2 beta_1 beta_2 Delta_c |C_c J_nn^{c0}|^2``."""
    return 2 * beta1 * beta2 * detuning * abs(prefactor * j_nn) ** 2


def dicke_couplings(spec: ModelSpec, cavity_label, beta1: complex, beta2: complex,
                    j_nn_pump: complex, j_nn_cavity: complex) -> tuple[complex, complex]:
    """Co- and counter-rotating couplings of the reservoir-built Dicke model.

    ``lambda1 = J^T + Omega_00 |alpha_0|^2 J_nn^{00}`` and
    ``lambda2 = 2 beta_1 beta_2 Delta_c |C_c J_nn^{c0}|^2``.
    """
    if isinstance(spec.tunnelling, Mapping):
        raise ContractError("dicke_couplings needs a uniform tunnelling rate")
    lam1 = spec.tunnelling + spec.pump_omega * abs(spec.pump_amplitude) ** 2 * j_nn_pump
    cav = spec.cavity(cavity_label)
    lam2 = reservoir_pair_coupling(beta1, beta2, cav.detuning, cavity_prefactor(spec, cavity_label), j_nn_cavity)
    return lam1, lam2


def preset_two_species_dicke(mu: Mapping[str, float], lambda1: Mapping[str, complex],
                             lambda2: Mapping[str, complex], cap: int) -> BuiltModel:
    """Two atomic species A, B coupled to one synthetic light mode L (sites 0, 1, 2)."""
    basis = build_basis(3, cap, label="two-species-dicke")
    idx = {"A": 0, "B": 1, "L": 2}
    h = ops.zero(basis)
    for name, i in idx.items():
        h = h + mu.get(name, 0.0) * ops.number(basis, i)
    for name in ("A", "B"):
        i = idx[name]
        x = lambda1.get(name, 0.0) * ops.hop(basis, i, 2) + lambda2.get(name, 0.0) * ops.pair_create(basis, i, 2)
        h = h + x + x.adjoint()
    return BuiltModel(basis, _finalise(h), {"sites": idx})


def preset_pair_bhm(tunnelling: float, interaction: float, pair: complex, num_sites: int,
                    cap: int, bonds=None) -> BuiltModel:
    """Bose-Hubbard model with long-range pair creation and annihilation.

    ``-J sum_<ij> b_i^dag b_j + (U/2) sum_i n_i (n_i - 1) + (lambda sum_ij b_i^dag b_j^dag + h.c.)``
    """
    basis = build_basis(num_sites, cap, label="pair-bhm")
    bonds = chain_bonds(num_sites) if bonds is None else list(bonds)
    h = ops.zero(basis)
    for i, j in _directed(bonds):
        h = h - tunnelling * ops.hop(basis, i, j)
    for i in range(num_sites):
        h = h + 0.5 * interaction * ops.onsite_pair(basis, i)
    if pair != 0:
        x = ops.zero(basis)
        for i in range(num_sites):
            for j in range(num_sites):
                x = x + ops.pair_create(basis, i, j)
        h = h + pair * x + np.conj(pair) * x.adjoint()
    return BuiltModel(basis, _finalise(h), {"bonds": bonds})


def preset_gauge_field(strength: float, link_ratio: float, num_sites: int, *,
                       lattice_atoms: int, link_atoms: int = 1, cap: int | None = None) -> BuiltModel:
    """Chain of ``num_sites`` sites with a global two-site link ``L, R``.

    ``H = lambda sum_j (b_j^dag b_{j+1} (sum_k b_{k+1}^dag b_k + theta b_L^dag b_R) + h.c.)
          + lambda theta^2 (b_L^dag b_R b_R^dag b_L + b_R^dag b_L b_L^dag b_R)``

    Site ``num_sites`` is ``L`` and ``num_sites + 1`` is ``R``. The lattice
    and link particle numbers are fixed separately.
    """
    L, R = num_sites, num_sites + 1
    cap = max(lattice_atoms, link_atoms) if cap is None else cap
    basis = build_basis(
        num_sites + 2, cap, lattice_atoms + link_atoms,
        where=lambda s: s[L] + s[R] == link_atoms, label="gauge-field")
    left = ops.zero(basis)   # sum_j b_j^dag b_{j+1}
    for j in range(num_sites - 1):
        left = left + ops.hop(basis, j, j + 1)
    right = left.adjoint()
    s_plus = ops.hop(basis, L, R)
    x = left @ (right + link_ratio * s_plus)
    link = ops.hop(basis, L, R) @ ops.hop(basis, R, L) + ops.hop(basis, R, L) @ ops.hop(basis, L, R)
    h = strength * (x + x.adjoint()) + strength * link_ratio**2 * link
    two_sz = ops.number(basis, L) - ops.number(basis, R)
    return BuiltModel(basis, _finalise(h), {"link": (L, R), "two_sz": two_sz, "lambda": strength})
