import numpy as np
import pytest
import scipy.linalg as la

from cavitylattice import model, ops, traj, zeno
from cavitylattice.errors import ContractError, NumericalUnderflowError, StepSizeError
from cavitylattice.expm import taylor_expm, taylor_expm_apply
from cavitylattice.fock import build_basis
from cavitylattice.zeno import MeasurementSpec

BASIS = build_basis(2, 1, 1)          # states (0,1), (1,0)
MEAS = MeasurementSpec((1, 2))         # alpha = 2 on (0,1), 1 on (1,0)


def equal_state():
    return traj.superposition(BASIS, {(1, 0): 1, (0, 1): 1})


def test_state_is_normalised_and_validated():
    s = traj.QuantumState(BASIS, [3, 4j])
    assert np.sum(s.probabilities()) == pytest.approx(1, abs=1e-15)
    with pytest.raises(ValueError):
        traj.QuantumState(BASIS, [1, np.nan])
    with pytest.raises(NumericalUnderflowError):
        traj.QuantumState(BASIS, [0, 0])


def test_no_jump_step():
    fock = traj.superposition(BASIS, {(1, 0): 1})
    assert np.allclose(traj.no_jump_step(fock, MEAS, 0.3).amplitudes, fock.amplitudes)
    s = traj.no_jump_step(equal_state(), MEAS, 0.1)
    big = BASIS.index_of[(0, 1)]
    assert s.probabilities()[big] < 0.5
    still = traj.no_jump_step(equal_state(), MeasurementSpec((1, 2), kappa=0.0), 0.5)
    assert np.allclose(still.amplitudes, equal_state().amplitudes)
    with pytest.raises(ValueError):
        traj.no_jump_step(s, MEAS, 0.0)


def test_no_jump_step_survives_huge_damping():
    s = traj.no_jump_step(equal_state(), MeasurementSpec((1, 2), kappa=1e6), 10.0)
    assert s.probabilities()[BASIS.index_of[(1, 0)]] == pytest.approx(1)


def test_jump_reweights_by_alpha_squared():
    s = traj.jump(equal_state(), MEAS)
    p = s.probabilities()
    assert p[BASIS.index_of[(0, 1)]] / p[BASIS.index_of[(1, 0)]] == pytest.approx(4)
    fock = traj.superposition(BASIS, {(0, 1): 1j})
    assert np.allclose(np.abs(traj.jump(fock, MEAS).amplitudes), np.abs(fock.amplitudes))
    dark = MeasurementSpec((0, 1))
    assert traj.jump(equal_state(), dark).probabilities()[BASIS.index_of[(1, 0)]] == 0
    with pytest.raises(ContractError):
        traj.jump(traj.superposition(BASIS, {(1, 0): 1}), dark)


def test_convergence_metric():
    secs = zeno.sectors(BASIS, MEAS)
    assert traj.convergence_metric(equal_state(), secs) == pytest.approx(0.5)
    assert traj.convergence_metric(traj.superposition(BASIS, {(1, 0): 1}), secs) == pytest.approx(1)


def test_step_size_enforced():
    with pytest.raises(StepSizeError):
        traj.sample_trajectory(equal_state(), MEAS, total_time=1.0, dt=0.02, seed=0)


def test_single_sector_never_leaks():
    s0 = traj.superposition(BASIS, {(1, 0): 1})
    r = traj.sample_trajectory(s0, MEAS, total_time=2.0, dt=0.005, seed=3)
    occupied = [s.value for s in zeno.sectors(BASIS, MEAS)].index(1)
    others = np.delete(r.sector_probabilities, occupied, axis=1)
    assert np.all(others == 0.0)
    np.testing.assert_allclose(r.sector_probabilities[:, occupied], 1.0, atol=1e-15)


def test_record_invariants_and_determinism():
    a = traj.sample_trajectory(equal_state(), MEAS, total_time=3.0, dt=0.0025, seed=11)
    b = traj.sample_trajectory(equal_state(), MEAS, total_time=3.0, dt=0.0025, seed=11)
    assert np.array_equal(a.sector_probabilities, b.sector_probabilities) and a.jump_times == b.jump_times
    assert np.all(np.diff(a.photocounts) >= 0)
    assert a.photocounts[-1] == len(a.jump_times)
    np.testing.assert_allclose(a.sector_probabilities.sum(axis=1), 1, atol=1e-12)
    assert np.all((a.sector_probabilities >= 0) & (a.sector_probabilities <= 1))


def test_ensemble_records_match_single_runs():
    ens = traj.sample_ensemble(equal_state(), MEAS, total_time=1.0, dt=0.0025, seeds=range(5, 12), batch=3)
    for r in ens.records:
        single = traj.sample_trajectory(equal_state(), MEAS, total_time=1.0, dt=0.0025, seed=r.seed)
        assert np.array_equal(single.sector_probabilities, r.sector_probabilities)
        assert single.jump_times == r.jump_times


def test_commuting_hamiltonian_keeps_sector_probabilities():
    b = build_basis(4, 2, 2)
    meas = zeno.diffraction_minimum(4, kappa=0.5, prefactor=0.3)
    secs = zeno.sectors(b, meas)
    h = model.preset_correlated_tunnelling(b, 1.0, 0.4)
    hz = ops.zero(b)
    for s in secs:
        hz = hz + zeno.embed(zeno.zeno_hamiltonian(h, s), s)
    c = np.zeros(b.dim, complex)
    sector = zeno.sector_of(secs, 0)
    c[sector.members] = 1.0
    s0 = traj.QuantumState(b, c)
    r = traj.sample_trajectory(s0, meas, hz, total_time=1.0, dt=0.01, seed=1)
    np.testing.assert_allclose(r.sector_probabilities, np.broadcast_to(r.sector_probabilities[0], r.sector_probabilities.shape),
                               atol=1e-12)


def test_hamiltonian_substep_unitary_evolution():
    b = build_basis(2, 1, 1)
    h = ops.hop(b, 0, 1) + ops.hop(b, 1, 0)
    meas = MeasurementSpec((1, 1), kappa=0.0)
    s0 = traj.superposition(b, {(1, 0): 1})
    r = traj.sample_trajectory(s0, meas, h, total_time=np.pi / 4, dt=np.pi / 400, seed=0, sample_every=100,
                               sector_list=[zeno.ZenoSector(0, 0, np.array([0]), ops.zero(b)),
                                            zeno.ZenoSector(1, 1, np.array([1]), ops.zero(b))])
    # Rabi oscillation on two sites: half transfer at t = pi/4
    np.testing.assert_allclose(r.sector_probabilities[-1], [0.5, 0.5], atol=1e-12)


def test_taylor_expm_against_eigendecomposition():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    h = a + a.conj().T
    w, v = la.eigh(h)
    for t in (0.01, 1.0, 7.0):
        exact = (v * np.exp(-1j * t * w)) @ v.conj().T
        assert np.abs(taylor_expm(-1j * t * h) - exact).max() < 1e-10
        vec = rng.standard_normal(12) + 0j
        assert np.abs(taylor_expm_apply(h, vec, -1j * t) - exact @ vec).max() < 1e-10
    assert np.allclose(taylor_expm(np.zeros((3, 3))), np.eye(3))
