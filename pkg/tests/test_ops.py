import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitylattice import ops
from cavitylattice.errors import ContractError, OperatorMismatchError
from cavitylattice.fock import build_basis
from cavitylattice.geometry import CouplingTensor
from cavitylattice.ops import SparseOperator


@pytest.mark.parametrize("m,cap,n", [(2, 2, None), (3, 2, None), (3, 2, 2), (4, 2, 2), (2, 3, 3)])
def test_hops_and_numbers_match_dense(oracle, m, cap, n):
    o = oracle(m, cap)
    b = build_basis(m, cap, n)
    for i in range(m):
        np.testing.assert_allclose(ops.number(b, i).to_dense(), o.on(b, o.n(i)), atol=1e-14)
        for j in range(m):
            np.testing.assert_allclose(ops.hop(b, i, j).to_dense(), o.on(b, o.hop(i, j)), atol=1e-14)


def test_ladder_and_pairs_match_dense(oracle):
    o = oracle(3, 2)
    b = build_basis(3, 2)
    for i in range(3):
        np.testing.assert_allclose(ops.create(b, i).to_dense(), o.on(b, o.bd[i]), atol=1e-14)
        np.testing.assert_allclose(ops.annihilate(b, i).to_dense(), o.on(b, o.b[i]), atol=1e-14)
        np.testing.assert_allclose(ops.onsite_pair(b, i).to_dense(),
                                   o.on(b, o.bd[i] @ o.bd[i] @ o.b[i] @ o.b[i]), atol=1e-13)
        for j in range(3):
            np.testing.assert_allclose(ops.pair_create(b, i, j).to_dense(), o.on(b, o.bd[i] @ o.bd[j]), atol=1e-13)
            np.testing.assert_allclose(ops.pair_annihilate(b, i, j).to_dense(), o.on(b, o.b[j] @ o.b[i]), atol=1e-13)


def test_two_site_hop_example():
    b = build_basis(2, 1, 1)   # states (0,1), (1,0)
    np.testing.assert_array_equal(ops.hop(b, 0, 1).to_dense(), [[0, 0], [1, 0]])


def test_fock_string_order_rightmost_first():
    b = build_basis(1, 3)
    # b b^dag - b^dag b = 1 away from the cap
    comm = ops.fock_string(b, [(0, False), (0, True)]) - ops.fock_string(b, [(0, True), (0, False)])
    np.testing.assert_allclose(comm.to_dense()[:3, :3], np.eye(3), atol=1e-14)
    # at the cap the truncation shows up
    assert comm.to_dense()[3, 3] == pytest.approx(-3)


def test_sector_basis_rejects_number_changing_ops():
    b = build_basis(2, 2, 2)
    for f in (ops.create, ops.annihilate):
        with pytest.raises(ContractError):
            f(b, 0)
    with pytest.raises(ContractError):
        ops.pair_create(b, 0, 1)


def test_site_out_of_range():
    with pytest.raises(IndexError):
        ops.hop(build_basis(2, 1), 0, 2)


def test_mixing_bases_is_an_error():
    a = ops.number(build_basis(2, 2), 0)
    c = ops.number(build_basis(2, 2, 2), 0)
    with pytest.raises(OperatorMismatchError):
        a + c
    with pytest.raises(OperatorMismatchError):
        a @ c


def test_coupling_operator_checks_sites():
    t = CouplingTensor.diagonal((1, 0), [1, 1, 1])
    with pytest.raises(OperatorMismatchError):
        ops.coupling_operator(build_basis(2, 2), t)


def test_coupling_operator_uniform_onsite_is_total_number():
    b = build_basis(3, 2, 2)
    t = CouplingTensor.diagonal((1, 0), [1, 1, 1])
    assert ops.coupling_operator(b, t).approx_equal(ops.total_number(b))


def test_arithmetic_against_dense():
    b = build_basis(3, 2)
    x = ops.hop(b, 0, 1) * (0.3 + 0.2j)
    y = ops.number(b, 2)
    xd, yd = x.to_dense(), y.to_dense()
    np.testing.assert_allclose((x + y).to_dense(), xd + yd)
    np.testing.assert_allclose((x - y).to_dense(), xd - yd)
    np.testing.assert_allclose((x @ y).to_dense(), xd @ yd)
    np.testing.assert_allclose(x.adjoint().to_dense(), xd.conj().T)
    np.testing.assert_allclose(ops.commutator(x, y).to_dense(), xd @ yd - yd @ xd)
    np.testing.assert_allclose((2 * x / 4).to_dense(), xd / 2)
    v = np.arange(b.dim) + 1j
    np.testing.assert_allclose(x @ v, xd @ v)


def test_from_entries_and_entries_round_trip():
    op = SparseOperator.from_entries(3, [(0, 1, 2.0), (2, 2, 1j)], "t")
    assert sorted(op.entries) == [(0, 1, 2.0), (2, 2, 1j)]
    assert not op.is_hermitian()
    assert op.hermitian_part().is_hermitian()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(1, 2), st.data())
def test_hermitian_combinations(m, cap, data):
    b = build_basis(m, cap)
    coeffs = data.draw(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                                min_size=m * m, max_size=m * m))
    h = ops.zero(b)
    for k, c in enumerate(coeffs):
        i, j = divmod(k, m)
        term = c * ops.hop(b, i, j)
        h = h + term + term.adjoint()
    assert h.hermiticity_error() <= 1e-12 * max(1, h.max_abs())


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3))
def test_canonical_commutator_below_cap(m, cap):
    b = build_basis(m, cap)
    below = b.particle_numbers < cap
    for i in range(m):
        for j in range(m):
            c = ops.commutator(ops.annihilate(b, i), ops.create(b, j)).to_dense()
            expected = np.eye(b.dim) * (i == j)
            # exact wherever no site can reach the cap
            np.testing.assert_allclose(c[np.ix_(below, below)], expected[np.ix_(below, below)], atol=1e-13)
