"""Ground states, spectra, expectation values and the two-mode Dicke phase sweep."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from . import ops
from .errors import ConvergenceError, NonHermitianError
from .fock import build_basis
from .ops import SparseOperator

DENSE_LIMIT = 2000
DEGENERACY_GAP = 1e-8
RESIDUAL_TOL = 1e-10
DEFAULT_THRESHOLD = 1.0

__all__ = [
    "SpectrumResult", "spectrum", "ground_state", "lanczos", "expectation",
    "SweepResult", "dicke_phase_sweep", "boundary_contours", "distance_to_polyline",
]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residuals: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return bool(self.metadata.get("degenerate", False))


def _as_matrix(h):
    if isinstance(h, SparseOperator):
        return h.matrix
    return h


def _check_hermitian(m, tol=1e-12):
    diff = m - m.conj().T
    err = float(np.abs(diff).max()) if diff.shape[0] else 0.0
    scale = max(1.0, float(np.abs(m).max())) if m.shape[0] else 1.0
    if err > tol * scale:
        raise NonHermitianError(f"matrix is not Hermitian (max |H - H^dag| = {err:.3e})")


def _residuals(m, vals, vecs):
    return np.array([np.linalg.norm(m @ vecs[:, i] - vals[i] * vecs[:, i]) for i in range(len(vals))])


def lanczos(h, v0: np.ndarray | None = None, *, max_iter: int = 300, max_restarts: int = 10,
            tol: float = RESIDUAL_TOL, seed: int = 0) -> tuple[float, np.ndarray, dict]:
    """Lowest eigenpair by restarted Lanczos with full reorthogonalisation.

    Each cycle builds a Krylov basis of up to ``max_iter`` vectors and restarts
    from the lowest Ritz vector, until ``||H psi - E psi|| <= tol * max(1, |E|)``.
    """
    m = _as_matrix(h)
    n = m.shape[0]
    if v0 is None:
        v0 = np.random.default_rng(seed).standard_normal(n) + 0j
    v = np.asarray(v0, dtype=complex)
    v = v / np.linalg.norm(v)
    history = []
    for cycle in range(max_restarts + 1):
        size = min(max_iter, n)
        basis = np.zeros((n, size), dtype=complex)
        alpha = np.zeros(size)
        beta = np.zeros(size)
        basis[:, 0] = v
        k_used = size
        for j in range(size):
            w = m @ basis[:, j]
            alpha[j] = np.vdot(basis[:, j], w).real
            for _ in range(2):  # full reorthogonalisation, twice is enough
                w = w - basis[:, :j + 1] @ (basis[:, :j + 1].conj().T @ w)
            b = np.linalg.norm(w)
            beta[j] = b
            if j + 1 == size:
                break
            if b < 1e-14 * max(1.0, abs(alpha[j])):
                k_used = j + 1
                break
            basis[:, j + 1] = w / b
        t_vals, t_vecs = la.eigh_tridiagonal(alpha[:k_used], beta[:k_used - 1])
        energy = float(t_vals[0])
        psi = basis[:, :k_used] @ t_vecs[:, 0]
        psi = psi / np.linalg.norm(psi)
        res = float(np.linalg.norm(m @ psi - energy * psi))
        history.append(res)
        gap = float(t_vals[1] - t_vals[0]) if k_used > 1 else np.inf
        if res <= tol * max(1.0, abs(energy)):
            return energy, psi, {"restarts": cycle, "residual": res, "history": history,
                                 "krylov_dim": k_used, "ritz_gap": gap}
        v = psi
    raise ConvergenceError(f"Lanczos did not converge after {max_restarts} restarts (residual {history[-1]:.3e})")


def spectrum(h, k: int = 1, *, vectors: bool = True, method: str = "auto",
             dense_limit: int = DENSE_LIMIT) -> SpectrumResult:
    """Lowest ``k`` eigenpairs, ascending."""
    m = _as_matrix(h)
    _check_hermitian(m)
    n = m.shape[0]
    k = min(k, n)
    if method == "auto":
        method = "dense" if n <= dense_limit else "lanczos"
    if method == "dense":
        dense = m.toarray() if hasattr(m, "toarray") else np.asarray(m)
        want = min(n, max(k, 2))
        vals, vecs = la.eigh(dense, subset_by_index=[0, want - 1])
        meta = {"degenerate": bool(want > 1 and vals[1] - vals[0] < DEGENERACY_GAP)}
        vals, vecs = vals[:k], vecs[:, :k]
    elif method == "lanczos":
        if k == 1:
            e, psi, meta = lanczos(m)
            vals, vecs = np.array([e]), psi[:, None]
            meta["degenerate"] = bool(meta["ritz_gap"] < DEGENERACY_GAP)
        else:
            vals, vecs = spla.eigsh(m, k=max(k, 2), which="SA", tol=1e-13)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            meta = {"degenerate": bool(vals[1] - vals[0] < DEGENERACY_GAP)}
            vals, vecs = vals[:k], vecs[:, :k]
    else:
        raise ValueError(f"unknown method {method!r}")
    res = _residuals(m, vals, vecs)
    bound = RESIDUAL_TOL * np.maximum(1.0, np.abs(vals))
    if np.any(res > bound):
        raise ConvergenceError(f"{method} eigenpairs miss the residual bound (max residual {res.max():.3e})")
    return SpectrumResult(np.asarray(vals, dtype=float), vecs if vectors else None, res, method, meta)


def ground_state(h, *, method: str = "auto") -> tuple[float, np.ndarray]:
    r = spectrum(h, 1, method=method)
    return float(r.eigenvalues[0]), r.eigenvectors[:, 0]


def expectation(state, op) -> complex:
    """``<psi| op |psi>`` for a state vector or :class:`QuantumState`."""
    psi = getattr(state, "amplitudes", state)
    m = _as_matrix(op)
    return complex(np.vdot(psi, m @ psi))


# --- phase sweep -------------------------------------------------------------

def _dicke_blocks(cap: int):
    basis = build_basis(2, cap)
    n1 = ops.number(basis, 0).to_dense().real.diagonal().copy()
    n2 = ops.number(basis, 1).to_dense().real.diagonal().copy()
    hop = ops.hop(basis, 0, 1).to_dense().real
    pair = ops.pair_create(basis, 0, 1).to_dense().real
    return n1, n2, hop + hop.T, pair + pair.T


def _sweep_rows(args):
    mu, lam1_values, lam2_values, cap = args
    n1, n2, hop, pair = _dicke_blocks(cap)
    diag = mu * (n1 + n2)
    out = []
    for l1 in lam1_values:
        for l2 in lam2_values:
            h = l1 * hop + l2 * pair
            h[np.diag_indices_from(h)] += diag
            try:
                vals, vecs = la.eigh(h, subset_by_index=[0, 0])
            except Exception as exc:  # noqa: BLE001 - re-raised with coordinates
                raise ConvergenceError(f"ground state failed at lambda1={l1}, lambda2={l2}: {exc}") from exc
            p = vecs[:, 0] ** 2
            out.append((l1, l2, float(p @ n1), float(p @ n2), float(vals[0])))
    return out


@dataclass(frozen=True)
class SweepResult:
    mu: float
    cap: int
    lambda1: np.ndarray
    lambda2: np.ndarray
    n1: np.ndarray       # indexed [i1, i2]
    n2: np.ndarray
    energy: np.ndarray
    threshold: float
    contours: list       # polylines of (lambda1, lambda2)
    sensitivity: dict = field(default_factory=dict)

    def table(self):
        for i, l1 in enumerate(self.lambda1):
            for j, l2 in enumerate(self.lambda2):
                yield (float(l1), float(l2), float(self.n1[i, j]), float(self.n2[i, j]), float(self.energy[i, j]))

    def boundary_error(self) -> float:
        """Largest ``|lambda1 + lambda2 - mu|`` along the boundary, in units of ``mu``."""
        pts = np.concatenate(self.contours) if self.contours else np.zeros((0, 2))
        return float(np.abs(pts.sum(axis=1) - self.mu).max() / abs(self.mu)) if len(pts) else np.inf

    def distance_to(self, point) -> float:
        return min((distance_to_polyline(c, point) for c in self.contours), default=np.inf)


def boundary_contours(values: np.ndarray, lambda1: np.ndarray, lambda2: np.ndarray, level: float) -> list:
    """Marching-squares level set of a grid sampled on uniform axes, in axis coordinates."""
    from skimage.measure import find_contours
    out = []
    for c in find_contours(values, level):
        l1 = np.interp(c[:, 0], np.arange(len(lambda1)), lambda1)
        l2 = np.interp(c[:, 1], np.arange(len(lambda2)), lambda2)
        out.append(np.column_stack([l1, l2]))
    return out


def distance_to_polyline(poly: np.ndarray, point) -> float:
    p = np.asarray(point, dtype=float)
    if len(poly) == 1:
        return float(np.linalg.norm(poly[0] - p))
    a, b = poly[:-1], poly[1:]
    ab = b - a
    denom = np.maximum((ab ** 2).sum(axis=1), 1e-300)
    t = np.clip(((p - a) * ab).sum(axis=1) / denom, 0.0, 1.0)
    return float(np.linalg.norm(a + t[:, None] * ab - p, axis=1).min())


def dicke_phase_sweep(mu: float, lambda1: Sequence[float], lambda2: Sequence[float], cap: int, *,
                      threshold: float = DEFAULT_THRESHOLD, jobs: int = 1,
                      sensitivity_thresholds: Sequence[float] = (0.2, 0.4, 0.5, 0.6, 0.8, 1.0)) -> SweepResult:
    """Ground-state occupations of the two-mode Dicke model on a ``(lambda1, lambda2)`` grid.

    Uses ``mu_1 = mu_2 = mu``. The superradiance boundary is the
    ``<n_1> = threshold`` contour; ``sensitivity`` reports the boundary error
    for other thresholds.
    """
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    if not (np.all(np.isfinite(l1)) and np.all(np.isfinite(l2))):
        raise ValueError("sweep grids must be finite")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    chunks = [c for c in np.array_split(l1, max(1, min(jobs, len(l1)))) if len(c)]
    tasks = [(mu, c, l2, cap) for c in chunks]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_sweep_rows, tasks))
    else:
        parts = [_sweep_rows(t) for t in tasks]
    rows = np.array([r for part in parts for r in part])
    shape = (len(l1), len(l2))
    n1, n2, e0 = (rows[:, c].reshape(shape) for c in (2, 3, 4))
    contours = boundary_contours(n1, l1, l2, threshold)
    sens = {}
    for th in sensitivity_thresholds:
        cs = boundary_contours(n1, l1, l2, th)
        pts = np.concatenate(cs) if cs else np.zeros((0, 2))
        sens[float(th)] = float(np.abs(pts.sum(axis=1) - mu).max() / abs(mu)) if len(pts) else None
    return SweepResult(mu, cap, l1, l2, n1, n2, e0, threshold, contours, sens)
