import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitylattice import model, ops, zeno
from cavitylattice.errors import ContractError, OperatorMismatchError
from cavitylattice.fock import build_basis
from cavitylattice.zeno import MeasurementSpec


def test_two_site_sectors():
    b = build_basis(2, 2, 2)
    secs = zeno.sectors(b, MeasurementSpec((1, -1)))
    assert [s.value for s in secs] == [-2, 0, 2]
    assert [[b.states[i] for i in s.members] for s in secs] == [[(0, 2)], [(1, 1)], [(2, 0)]]


def test_diffraction_minimum_balanced_sector():
    b = build_basis(4, 2, 2)
    secs = zeno.sectors(b, zeno.diffraction_minimum(4))
    zero = zeno.sector_of(secs, 0)
    members = {b.states[i] for i in zero.members}
    expected = {s for s in b.states if s[0] + s[2] == 1 and s[1] + s[3] == 1}
    assert members == expected


def test_reservoir_sectors_fix_outer_difference():
    b = build_basis(3, 3)
    for s in zeno.sectors(b, MeasurementSpec((1, 0, -1))):
        assert {b.states[i][0] - b.states[i][2] for i in s.members} == {s.value.real}


def test_sectors_sorted_by_eigenvalue_and_prefactor_applied():
    b = build_basis(3, 2, 2)
    secs = zeno.sectors(b, MeasurementSpec((1, 2, 3), prefactor=-0.5))
    eig = [s.eigenvalue.real for s in secs]
    assert eig == sorted(eig)
    assert all(s.eigenvalue == pytest.approx(-0.5 * s.value) for s in secs)


def test_non_integer_coefficients_use_tolerance_grouping():
    b = build_basis(3, 2, 2)
    secs = zeno.sectors(b, MeasurementSpec((1.0, np.sqrt(2), np.pi)))
    values = b.occupations @ np.array([1.0, np.sqrt(2), np.pi])
    assert len(secs) == len(np.unique(np.round(values, 9)))


def test_scaled_integer_coefficients_group_exactly():
    b = build_basis(4, 2, 2)
    secs = zeno.sectors(b, zeno.gradient_measurement(4, upsilon=0.1, link=False))
    # 0.1 * 0.3 arithmetic does not split sectors
    assert len(secs) == len({sum(j * n for j, n in enumerate(s)) for s in b.states})


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_partition_and_idempotence(m, cap, coeffs):
    coeffs = coeffs[:m]
    if not any(coeffs):
        coeffs[0] = 1
    b = build_basis(m, cap)
    secs = zeno.sectors(b, MeasurementSpec(tuple(coeffs)))
    all_members = np.concatenate([s.members for s in secs])
    assert sorted(all_members.tolist()) == list(range(b.dim))
    total = ops.zero(b)
    for s in secs:
        p = s.projector
        assert ((p @ p) - p).is_zero()
        total = total + p
    assert (total - ops.identity(b)).is_zero()


def test_measurement_needs_nonzero_coefficient():
    with pytest.raises(ValueError):
        MeasurementSpec((0, 0))


def test_zeno_hamiltonian_is_the_sub_block():
    b = build_basis(4, 2, 2)
    h = model.preset_correlated_tunnelling(b, 1.0, 0.3)
    for s in zeno.sectors(b, zeno.diffraction_minimum(4)):
        hz = zeno.zeno_hamiltonian(h, s)
        np.testing.assert_array_equal(hz.to_dense(), h.to_dense()[np.ix_(s.members, s.members)])
        assert hz.hermiticity_error() == 0
        emb = zeno.embed(hz, s)
        assert ops.commutator(emb, zeno.diffraction_minimum(4).operator(b)).is_zero()


def test_diagonal_hamiltonian_projects_to_diagonal():
    b = build_basis(3, 2, 2)
    h = ops.number(b, 0) * 2 + ops.onsite_pair(b, 1)
    for s in zeno.sectors(b, MeasurementSpec((1, -1, 1))):
        d = zeno.zeno_hamiltonian(h, s).to_dense()
        np.testing.assert_array_equal(d, np.diag(h.diagonal()[s.members]))


def test_single_hops_vanish_under_diffraction_minimum():
    b = build_basis(4, 2, 2)
    bhm = model.build_effective_hamiltonian(b, model.ModelSpec(tunnelling=1.0, interaction=2.0))
    for s in zeno.sectors(b, zeno.diffraction_minimum(4)):
        hz = zeno.zeno_hamiltonian(bhm, s).to_dense()
        np.testing.assert_array_equal(hz, np.diag(np.diag(hz)))


def test_survival_report_examples():
    b = build_basis(4, 2, 2)
    secs = zeno.sectors(b, zeno.diffraction_minimum(4))
    terms = [("hop", ops.hop(b, 0, 1)),
             ("exchange", ops.hop(b, 0, 1) @ ops.hop(b, 1, 0))]
    assert zeno.surviving_terms_report(terms, secs) == [("hop", False), ("exchange", True)]


def test_gradient_measurement_same_vs_opposite_direction():
    m = model.preset_gauge_field(1.0, 1.0, 4, lattice_atoms=2)
    b = m.basis
    secs = zeno.sectors(b, zeno.gradient_measurement(4))
    same = ops.hop(b, 0, 1) @ ops.hop(b, 2, 3)
    opposite = ops.hop(b, 0, 1) @ ops.hop(b, 3, 2)
    report = dict(zeno.surviving_terms_report([("same", same), ("opposite", opposite)], secs))
    assert report == {"same": False, "opposite": True}


def test_errors():
    b = build_basis(2, 1)
    with pytest.raises(OperatorMismatchError):
        zeno.sectors(b, MeasurementSpec((1, 0, 1)))
    s = zeno.sectors(b, MeasurementSpec((1, 1)))[0]
    empty = zeno.ZenoSector(0, 0, np.array([], dtype=np.int64), s.projector)
    with pytest.raises(ContractError):
        zeno.zeno_hamiltonian(ops.number(b, 0), empty)
    with pytest.raises(OperatorMismatchError):
        zeno.zeno_hamiltonian(ops.number(build_basis(2, 2), 0), s)


def test_product_formula_error_decreases():
    b = build_basis(4, 2, 2)   # dim 10
    h = model.build_effective_hamiltonian(b, model.ModelSpec(tunnelling=1.0, interaction=0.5))
    sector = zeno.sector_of(zeno.sectors(b, zeno.diffraction_minimum(4)), 0)
    errs = zeno.zeno_product_error(h, sector, t=0.5)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_sector_report_json_ready():
    b = build_basis(2, 2, 2)
    rep = zeno.sector_report(zeno.sectors(b, MeasurementSpec((1, -1), prefactor=0.5j)))
    assert rep[0]["dimension"] == 1 and len(rep) == 3
