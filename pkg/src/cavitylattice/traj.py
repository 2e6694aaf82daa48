"""Quantum-jump trajectories of photodetection on a diagonal measurement.

Per step of length ``dt`` a photon is detected with probability
``p = dt * sum_n |c_n|^2 * 2 kappa |alpha_n|^2``. A detection multiplies each
amplitude by ``alpha_n``; otherwise amplitudes are damped by
``exp(-|alpha_n|^2 kappa dt)``. States are renormalised after every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, NumericalUnderflowError, StepSizeError
from .expm import taylor_expm, taylor_expm_apply
from .fock import FockBasis, rank
from .ops import SparseOperator
from .zeno import MeasurementSpec, ZenoSector, sectors as find_sectors

MAX_JUMP_PROBABILITY = 0.1
CONVERGED = 0.99
_DENSE_EXPM_LIMIT = 2000

__all__ = [
    "QuantumState", "TrajectoryRecord", "EnsembleSummary", "no_jump_step", "jump",
    "sample_trajectory", "sample_ensemble", "convergence_metric", "superposition",
]


def _normalised(c: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(np.abs(c) ** 2, axis=-1, keepdims=True))
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise NumericalUnderflowError("state vector vanished during evolution")
    return c / norm


@dataclass(frozen=True)
class QuantumState:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.amplitudes, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("amplitudes must be finite")
        c = _normalised(c)
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def sector_probabilities(self, sector_list: Sequence[ZenoSector]) -> np.ndarray:
        p = self.probabilities()
        return np.array([p[s.members].sum() for s in sector_list])


def superposition(basis: FockBasis, amplitudes: Mapping[tuple, complex]) -> QuantumState:
    """State with the given amplitudes on named Fock states (normalised)."""
    c = np.zeros(basis.dim, dtype=complex)
    for occ, a in amplitudes.items():
        c[rank(basis, occ)] = a
    return QuantumState(basis, c)


def no_jump_step(state: QuantumState, measurement: MeasurementSpec, dt: float) -> QuantumState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    rate = np.abs(measurement.amplitudes(state.basis)) ** 2 * measurement.kappa * dt
    c = state.amplitudes
    # shift the exponent so the largest surviving amplitude is not damped to zero
    occupied = np.abs(c) > 0
    shift = rate[occupied].min() if occupied.any() else 0.0
    return QuantumState(state.basis, c * np.exp(-(rate - shift)))


def jump(state: QuantumState, measurement: MeasurementSpec) -> QuantumState:
    c = state.amplitudes * measurement.amplitudes(state.basis)
    if not np.any(c):
        raise ContractError("state lies entirely in the alpha = 0 sector; no photon can be detected")
    return QuantumState(state.basis, c)


def convergence_metric(state: QuantumState, sector_list: Sequence[ZenoSector]) -> float:
    """Largest total probability held by a single sector."""
    return float(state.sector_probabilities(sector_list).max())


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    times: np.ndarray                  # sample times
    photocounts: np.ndarray            # detections up to each sample time
    sector_probabilities: np.ndarray   # (samples, sectors)
    jump_times: tuple[float, ...]
    final_sector: int
    final_probability: float
    sector_values: tuple = field(default=())

    def rows(self):
        for t, k, p in zip(self.times, self.photocounts, self.sector_probabilities):
            yield [float(t), int(k), *map(float, p)]


@dataclass(frozen=True)
class EnsembleSummary:
    records: tuple[TrajectoryRecord, ...]
    converged_fraction: float
    mean_final: np.ndarray     # ensemble mean of final per-sector probabilities
    stderr_final: np.ndarray
    initial: np.ndarray

    def to_dict(self) -> dict:
        return {
            "trajectories": len(self.records),
            "converged_fraction": self.converged_fraction,
            "convergence_threshold": CONVERGED,
            "initial_sector_probabilities": self.initial.tolist(),
            "mean_final_sector_probabilities": self.mean_final.tolist(),
            "stderr_final_sector_probabilities": self.stderr_final.tolist(),
            "final_sectors": [r.final_sector for r in self.records],
        }


def _run_batch(state0: QuantumState, measurement: MeasurementSpec, h: SparseOperator | None,
               total_time: float, dt: float, seeds: Sequence[int], sample_every: int | None,
               sector_list: Sequence[ZenoSector]) -> list[TrajectoryRecord]:
    basis = state0.basis
    if dt <= 0 or total_time <= 0:
        raise ValueError("T and dt must be positive")
    alpha = measurement.amplitudes(basis)
    rate = 2 * measurement.kappa * np.abs(alpha) ** 2
    p_max = dt * rate.max()
    if p_max >= MAX_JUMP_PROBABILITY:
        raise StepSizeError(f"jump probability per step can reach {p_max:.3g} >= {MAX_JUMP_PROBABILITY}; reduce dt")
    steps = int(round(total_time / dt))
    if steps < 1:
        raise StepSizeError("T is shorter than one step")
    sample_every = sample_every or max(1, steps // 200)
    damp = np.exp(-0.5 * rate * dt)

    propagate = None
    if h is not None:
        if h.basis_tag != basis.tag:
            raise ContractError("Hamiltonian and state live on different bases")
        if basis.dim <= _DENSE_EXPM_LIMIT:
            u = taylor_expm(-1j * dt * h.to_dense())
            propagate = lambda c: np.stack([u @ row for row in c])
        else:
            propagate = lambda c: np.stack([taylor_expm_apply(h, row, -1j * dt) for row in c])

    # row-wise reductions only, so a trajectory does not depend on its batch
    def by_sector(prob):
        return np.stack([prob[:, s.members].sum(axis=1) for s in sector_list], axis=1)

    n = len(seeds)
    uniforms = np.stack([np.random.default_rng(int(s)).random(steps) for s in seeds]) if n else np.zeros((0, steps))
    c = np.repeat(state0.amplitudes[None, :], n, axis=0)
    counts = np.zeros(n, dtype=np.int64)
    jumps: list[list[float]] = [[] for _ in range(n)]
    times, kept_counts, kept_probs = [0.0], [counts.copy()], [by_sector(np.abs(c) ** 2)]
    for step in range(steps):
        prob = np.abs(c) ** 2
        p_jump = dt * (prob * rate).sum(axis=1)
        hit = uniforms[:, step] < p_jump
        factor = np.where(hit[:, None], alpha[None, :], damp[None, :])
        c = c * factor
        if not np.all(np.any(c != 0, axis=1)):
            raise NumericalUnderflowError("state vector vanished during evolution")
        c = _normalised(c)
        if propagate is not None:
            c = _normalised(propagate(c))
        counts = counts + hit
        t = (step + 1) * dt
        for i in np.flatnonzero(hit):
            jumps[i].append(t)
        if (step + 1) % sample_every == 0 or step + 1 == steps:
            times.append(t)
            kept_counts.append(counts.copy())
            kept_probs.append(by_sector(np.abs(c) ** 2))

    times_arr = np.array(times)
    counts_arr = np.stack(kept_counts, axis=1)
    probs_arr = np.stack(kept_probs, axis=1)
    values = tuple(s.value for s in sector_list)
    records = []
    for i, seed in enumerate(seeds):
        final = probs_arr[i, -1]
        records.append(TrajectoryRecord(
            seed=int(seed), times=times_arr, photocounts=counts_arr[i],
            sector_probabilities=probs_arr[i], jump_times=tuple(jumps[i]),
            final_sector=int(np.argmax(final)), final_probability=float(final.max()),
            sector_values=values))
    return records


def sample_trajectory(state0: QuantumState, measurement: MeasurementSpec, h: SparseOperator | None = None,
                      *, total_time: float, dt: float, seed: int, sample_every: int | None = None,
                      sector_list: Sequence[ZenoSector] | None = None) -> TrajectoryRecord:
    """One seeded trajectory; ``h`` adds a unitary substep ``exp(-i H dt)`` after each measurement step."""
    sector_list = find_sectors(state0.basis, measurement) if sector_list is None else sector_list
    return _run_batch(state0, measurement, h, total_time, dt, [seed], sample_every, sector_list)[0]


def sample_ensemble(state0: QuantumState, measurement: MeasurementSpec, h: SparseOperator | None = None,
                    *, total_time: float, dt: float, seeds: Sequence[int], sample_every: int | None = None,
                    jobs: int = 1, batch: int = 256) -> EnsembleSummary:
    """Run trajectories for every seed. Each record matches :func:`sample_trajectory` for that seed."""
    sector_list = find_sectors(state0.basis, measurement)
    seeds = [int(s) for s in seeds]
    groups = [seeds[i:i + batch] for i in range(0, len(seeds), batch)]
    args = (state0, measurement, h, total_time, dt)
    if jobs > 1 and len(groups) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_batch, *args, g, sample_every, sector_list) for g in groups]
            results = [f.result() for f in futures]
    else:
        results = [_run_batch(*args, g, sample_every, sector_list) for g in groups]
    records = tuple(r for group in results for r in group)
    finals = np.array([r.sector_probabilities[-1] for r in records])
    n = len(records)
    mean = finals.mean(axis=0)
    se = finals.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full_like(mean, np.nan)
    converged = float(np.mean([r.final_probability > CONVERGED for r in records]))
    return EnsembleSummary(records, converged, mean, se, state0.sector_probabilities(sector_list))
