"""Light modefunctions, Gaussian Wannier functions and overlap couplings.

The coupling between modes ``m`` and ``n`` for sites ``i, j`` is

    J_ij^mn = \\int w(r - r_i) u_m^*(r) u_n(r) w(r - r_j) dr.

Standing and travelling waves are sums of plane waves, so the integrand factors
into one-dimensional integrals per axis. Each of those is done by composite
Simpson on a fixed grid (``points_per_period`` per lattice spacing); the
half-resolution Simpson value gives a Richardson error estimate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from .errors import QuadratureError

__all__ = [
    "LatticeSpec", "ModeFunction", "CouplingTensor", "evaluate_mode", "wannier",
    "compute_couplings", "crossed_standing_waves", "scan_crossed_angle",
    "tensor_to_json", "tensor_from_json",
]

PAIR_RANGES = ("onsite", "nn", "onsite+nn", "all")


@dataclass(frozen=True)
class LatticeSpec:
    """Regular 1D or 2D lattice; sites are numbered row-major over ``shape``."""

    shape: tuple[int, ...]
    spacing: float = 1.0
    wannier_width: float = 0.1

    def __post_init__(self):
        shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        object.__setattr__(self, "shape", shape)
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise ValueError(f"shape must be 1 or 2 positive ints, got {self.shape}")
        if self.wannier_width <= 0:
            raise ValueError("wannier_width must be > 0")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def positions(self) -> np.ndarray:
        grids = np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij")
        return self.spacing * np.stack([g.ravel() for g in grids], axis=1).astype(float)

    def neighbour_bonds(self) -> list[tuple[int, int]]:
        """Unordered nearest-neighbour bonds ``(i, j)`` with ``i < j``."""
        pos = self.positions / self.spacing
        bonds = []
        for i in range(self.num_sites):
            for j in range(i + 1, self.num_sites):
                if np.isclose(np.abs(pos[i] - pos[j]).sum(), 1.0):
                    bonds.append((i, j))
        return bonds

    def pairs(self, pair_range: str) -> list[tuple[int, int]]:
        """Ordered site pairs covered by ``pair_range``."""
        if pair_range not in PAIR_RANGES:
            raise ValueError(f"pair_range must be one of {PAIR_RANGES}")
        M = self.num_sites
        if pair_range == "all":
            return [(i, j) for i in range(M) for j in range(M)]
        out = []
        if pair_range in ("onsite", "onsite+nn"):
            out += [(i, i) for i in range(M)]
        if pair_range in ("nn", "onsite+nn"):
            for i, j in self.neighbour_bonds():
                out += [(i, j), (j, i)]
        return sorted(out)


@dataclass(frozen=True)
class ModeFunction:
    """A light modefunction evaluated on the lattice plane.

    ``kind`` is ``uniform`` (constant ``amplitude``), ``standing``
    (``amplitude * cos(k.r + phase)``), ``travelling``
    (``amplitude * exp(i(k.r + phase))``) or ``superposition`` (``amplitude``
    times the sum of ``components``). The wavevector makes angle ``theta``
    with the first lattice axis; on a 1D lattice only its projection
    ``k cos(theta)`` enters.
    """

    kind: str
    k: float = 0.0
    theta: float = 0.0
    phase: float = 0.0
    amplitude: complex = 1.0
    components: tuple["ModeFunction", ...] = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "standing", "travelling", "superposition"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        object.__setattr__(self, "components", tuple(self.components))

    def wavevector(self, dimension: int) -> np.ndarray:
        full = self.k * np.array([np.cos(self.theta), np.sin(self.theta)])
        return full[:dimension]

    def plane_waves(self, dimension: int) -> list[tuple[complex, np.ndarray]]:
        """Decomposition ``u(r) = sum_a c_a exp(i q_a . r)``."""
        a = complex(self.amplitude)
        q = self.wavevector(dimension)
        if self.kind == "uniform":
            return [(a, np.zeros(dimension))]
        if self.kind == "travelling":
            return [(a * np.exp(1j * self.phase), q)]
        if self.kind == "standing":
            return [(0.5 * a * np.exp(1j * self.phase), q), (0.5 * a * np.exp(-1j * self.phase), -q)]
        return [(a * c, qq) for comp in self.components for c, qq in comp.plane_waves(dimension)]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "k": self.k, "theta": self.theta, "phase": self.phase,
             "amplitude": [complex(self.amplitude).real, complex(self.amplitude).imag]}
        if self.components:
            d["components"] = [c.to_dict() for c in self.components]
        return d


def _as_points(r, dimension: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if dimension == 1 and (r.ndim == 0 or r.shape[-1] != 1):
        return r[..., None]
    return r


def evaluate_mode(mode: ModeFunction, r, dimension: int = 1):
    """Value of ``u(r)``; ``r`` is a scalar/array of x (1D) or ``(..., 2)`` points."""
    pts = _as_points(r, dimension)
    if mode.kind == "uniform":
        out = np.full(pts.shape[:-1], complex(mode.amplitude))
    elif mode.kind == "superposition":
        out = sum((evaluate_mode(c, pts, dimension) for c in mode.components),
                  np.zeros(pts.shape[:-1], complex)) * complex(mode.amplitude)
    else:
        arg = pts @ mode.wavevector(dimension) + mode.phase
        base = np.cos(arg) if mode.kind == "standing" else np.exp(1j * arg)
        out = complex(mode.amplitude) * base
    return out[()] if out.ndim == 0 else out


def _gauss(x, centre, sigma):
    return (np.pi * sigma**2) ** -0.25 * np.exp(-((x - centre) ** 2) / (2 * sigma**2))


def wannier(lattice: LatticeSpec, i: int, r):
    """Normalised Gaussian Wannier function of site ``i`` (product form in 2D).

    With this width convention the neighbour overlap is ``exp(-d^2 / (4 sigma^2))``.
    """
    pts = _as_points(r, lattice.dimension)
    centre = lattice.positions[i]
    out = np.ones(pts.shape[:-1])
    for a in range(lattice.dimension):
        out = out * _gauss(pts[..., a], centre[a], lattice.wannier_width)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CouplingTensor:
    """Coefficients ``J_ij^{mn}`` over ordered site pairs for one mode pair."""

    mode_pair: tuple
    num_sites: int
    entries: Mapping[tuple[int, int], complex]
    pair_range: str = "custom"
    quadrature_error: float = 0.0
    symmetry_deviation: float = 0.0

    def __post_init__(self):
        ent = {(int(i), int(j)): complex(v) for (i, j), v in dict(self.entries).items()}
        for i, j in ent:
            if not (0 <= i < self.num_sites and 0 <= j < self.num_sites):
                raise ValueError(f"site pair {(i, j)} outside {self.num_sites} sites")
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "mode_pair", tuple(self.mode_pair))

    def __getitem__(self, ij) -> complex:
        return self.entries.get(tuple(ij), 0j)

    def conjugate(self) -> "CouplingTensor":
        """Tensor for the reversed mode pair, ``J^{nm} = conj(J^{mn})``."""
        m, n = self.mode_pair
        return replace(self, mode_pair=(n, m), entries={k: np.conj(v) for k, v in self.entries.items()})

    def scaled(self, c: complex) -> "CouplingTensor":
        return replace(self, entries={k: c * v for k, v in self.entries.items()})

    def symmetry_error(self) -> float:
        """Largest ``|J_ij - J_ji|`` over stored pairs."""
        return max((abs(v - self[(j, i)]) for (i, j), v in self.entries.items()), default=0.0)

    @classmethod
    def diagonal(cls, mode_pair, values: Sequence[complex]) -> "CouplingTensor":
        return cls(mode_pair, len(values), {(i, i): v for i, v in enumerate(values)}, "onsite")

    @classmethod
    def bonds(cls, mode_pair, num_sites: int, bonds: Iterable[tuple[int, int]], value: complex) -> "CouplingTensor":
        """Homogeneous coefficient on both orientations of every bond."""
        ent = {}
        for i, j in bonds:
            ent[(i, j)] = value
            ent[(j, i)] = value
        return cls(mode_pair, num_sites, ent, "nn")


def _simpson_with_error(f, x):
    s_fine = simpson(f, x=x)
    s_coarse = simpson(f[::2], x=x[::2])
    return s_fine, abs(s_fine - s_coarse) / 15.0


def compute_couplings(
    lattice: LatticeSpec,
    mode_m: ModeFunction,
    mode_n: ModeFunction,
    pair_range: str = "onsite+nn",
    *,
    mode_pair=("m", "n"),
    points_per_period: int = 512,
    window: float = 6.0,
    tol: float = 1e-9,
) -> CouplingTensor:
    """Overlap integrals ``J_ij^{mn}`` by per-axis composite Simpson quadrature.

    Raises :class:`QuadratureError` if any coefficient's Richardson error
    estimate exceeds ``tol``. ``J_ij`` and ``J_ji`` are computed separately and
    averaged; their largest gap is stored as ``symmetry_deviation``.
    """
    if window < 6.0:
        raise ValueError("quadrature window must extend at least 6 sigma beyond the outer sites")
    dim = lattice.dimension
    sigma = lattice.wannier_width
    terms: dict[tuple, complex] = {}
    for cm, qm in mode_m.plane_waves(dim):
        for cn, qn in mode_n.plane_waves(dim):
            q = tuple(np.round(qn - qm, 12) + 0.0)
            terms[q] = terms.get(q, 0j) + np.conj(cm) * cn
    terms = {q: c for q, c in terms.items() if c != 0}

    pos = lattice.positions
    cache: dict = {}

    def axis_integral(a, xi, xj, q):
        key = (a, xi, xj, q)
        if key not in cache:
            lo, hi = min(xi, xj) - window * sigma, max(xi, xj) + window * sigma
            n = int(np.ceil((hi - lo) * points_per_period / lattice.spacing))
            n += (-n) % 4
            x = np.linspace(lo, hi, n + 1)
            f = _gauss(x, xi, sigma) * _gauss(x, xj, sigma) * np.exp(1j * q * x)
            cache[key] = _simpson_with_error(f, x)
        return cache[key]

    def one(i, j):
        total, err = 0j, 0.0
        for q, c in terms.items():
            vals, errs = zip(*(axis_integral(a, pos[i, a], pos[j, a], q[a]) for a in range(dim)))
            prod = np.prod(vals)
            total += c * prod
            err += abs(c) * (np.prod(np.abs(vals) + errs) - np.prod(np.abs(vals)))
        return total, err

    raw, max_err = {}, 0.0
    for i, j in lattice.pairs(pair_range):
        raw[(i, j)], e = one(i, j)
        max_err = max(max_err, e)
    if max_err > tol:
        raise QuadratureError(f"quadrature error estimate {max_err:.3e} exceeds tol {tol:.1e}", max_err)
    deviation = 0.0
    sym = {}
    for (i, j), v in raw.items():
        w = raw.get((j, i), v)
        deviation = max(deviation, abs(v - w))
        sym[(i, j)] = 0.5 * (v + w)
    return CouplingTensor(mode_pair, lattice.num_sites, sym, pair_range, max_err, deviation)


def crossed_standing_waves(theta: float, k: float = np.pi, cavity_phase: float = np.pi / 2):
    """Pump at ``theta`` and cavity at ``-theta``, both standing waves of wavenumber ``k``."""
    pump = ModeFunction("standing", k=k, theta=theta)
    cavity = ModeFunction("standing", k=k, theta=-theta, phase=cavity_phase)
    return pump, cavity


def scan_crossed_angle(lattice: LatticeSpec, thetas: Sequence[float], *, k: float = np.pi,
                       cavity_phase: float = np.pi / 2, refine: bool = True, **quad) -> dict:
    """Scan the crossing angle for vanishing on-site pump-cavity couplings.

    The grid ``thetas`` brackets the minimum of ``sum_i |J_ii^{c0}|^2``, which
    is then refined by bounded Brent minimisation. Returns the best ``theta``,
    ``max |J_ii|`` and ``min |J_nn|`` there, the tensor, and the grid scan.
    """
    def tensor(th):
        pump, cav = crossed_standing_waves(th, k, cavity_phase)
        return compute_couplings(lattice, cav, pump, "onsite+nn", mode_pair=("c", 0), **quad)

    def onsite_power(t):
        return sum(abs(t[(i, i)]) ** 2 for i in range(lattice.num_sites))

    thetas = np.asarray(thetas, dtype=float)
    scan = [onsite_power(tensor(th)) for th in thetas]
    b = int(np.argmin(scan))
    best = float(thetas[b])
    if refine and len(thetas) > 1:
        lo = thetas[max(b - 1, 0)]
        hi = thetas[min(b + 1, len(thetas) - 1)]
        res = minimize_scalar(lambda th: onsite_power(tensor(th)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
        if res.fun <= scan[b]:
            best = float(res.x)
    t = tensor(best)
    return {
        "theta": best,
        "onsite_max": max(abs(t[(i, i)]) for i in range(lattice.num_sites)),
        "nn_min": min(abs(t[bd]) for bd in lattice.neighbour_bonds()),
        "tensor": t,
        "scan": list(zip(thetas.tolist(), scan)),
    }


def tensor_to_json(tensor: CouplingTensor) -> dict:
    return {
        "mode_pair": list(tensor.mode_pair),
        "num_sites": tensor.num_sites,
        "entries": [
            {"i": i, "j": j, "re": float(v.real), "im": float(v.imag)}
            for (i, j), v in sorted(tensor.entries.items())
        ],
    }


def tensor_from_json(doc) -> CouplingTensor:
    if isinstance(doc, str):
        doc = json.loads(doc)
    entries = {(int(e["i"]), int(e["j"])): complex(e["re"], e.get("im", 0.0)) for e in doc["entries"]}
    num_sites = doc.get("num_sites")
    if num_sites is None:
        num_sites = 1 + max((max(ij) for ij in entries), default=-1)
    return CouplingTensor(tuple(doc["mode_pair"]), int(num_sites), entries)
