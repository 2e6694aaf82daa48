"""``cavitylattice <command> --config FILE [--jobs N] [--seed S] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration, 3 computation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import geometry, model, ops, solve, traj, zeno
from . import io as out_io
from .config import (COMMANDS, EffectiveModel, canonical_json, cplx, json_schemas,
                     load_config, resolved)
from .errors import CavityLatticeError
from .fock import build_basis

EXIT_SCHEMA, EXIT_COMPUTE, EXIT_IO = 2, 3, 4


# --- builders ----------------------------------------------------------------

def to_mode(block) -> geometry.ModeFunction:
    return geometry.ModeFunction(block.kind, block.k, block.theta, block.phase,
                                 cplx(block.amplitude), tuple(to_mode(c) for c in block.components))


def effective_spec(block: EffectiveModel) -> tuple[geometry.LatticeSpec, model.ModelSpec]:
    lattice = geometry.LatticeSpec(block.lattice.shape, block.lattice.spacing, block.lattice.wannier_width)
    modes = {int(k): to_mode(v) for k, v in block.modes.items()}
    quad = block.quadrature.model_dump()
    tensors = {}

    def tensor(m, n):
        tensors[(m, n)] = geometry.compute_couplings(lattice, modes[m], modes[n], block.pair_range,
                                                     mode_pair=(m, n), **quad)

    if block.pump.omega != 0:
        tensor(0, 0)
    cavities = []
    for c in block.cavities:
        tensor(c.label, 0)
        if c.omega_self is not None:
            tensor(c.label, c.label)
        cavities.append(model.Cavity(c.label, c.detuning, c.kappa, cplx(c.omega_pump), c.omega_self))
    spec = model.ModelSpec(
        tunnelling=block.tunnelling, interaction=block.interaction,
        pump_amplitude=cplx(block.pump.amplitude), pump_omega=block.pump.omega,
        cavities=tuple(cavities), tensors=tensors, bonds=tuple(lattice.neighbour_bonds()))
    return lattice, spec


def build_model(block) -> model.BuiltModel:
    p = block.preset
    if p == "effective":
        _, spec = effective_spec(block)
        b = block.basis
        basis = build_basis(b.num_sites, b.cap, b.total_number)
        return model.BuiltModel(basis, model.build_effective_hamiltonian(basis, spec), {"spec": spec})
    if p == "generalised_dicke":
        return model.preset_generalised_dicke(block.mu1, block.mu2, cplx(block.lambda1),
                                              cplx(block.lambda2), block.cap)
    if p == "two_species_dicke":
        return model.preset_two_species_dicke(
            block.mu, {k: cplx(v) for k, v in block.lambda1.items()},
            {k: cplx(v) for k, v in block.lambda2.items()}, block.cap)
    if p == "pair_bhm":
        return model.preset_pair_bhm(block.tunnelling, block.interaction, cplx(block.pair),
                                     block.num_sites, block.cap)
    if p == "superexchange":
        return model.preset_superexchange(block.detuning, cplx(block.prefactor), cplx(block.j_nn))
    if p == "gauge_field":
        built = model.preset_gauge_field(block.strength, block.link_ratio, block.num_sites,
                                         lattice_atoms=block.lattice_atoms, link_atoms=block.link_atoms,
                                         cap=block.cap)
        built.info["bonds"] = model.chain_bonds(block.num_sites) + [built.info["link"]]
        return built
    if p == "correlated_tunnelling":
        b = block.basis
        basis = build_basis(b.num_sites, b.cap, b.total_number)
        h = model.preset_correlated_tunnelling(basis, cplx(block.one_body), cplx(block.two_body))
        return model.BuiltModel(basis, h, {})
    raise ValueError(f"unknown preset {p!r}")


def build_measurement(block, num_sites: int) -> zeno.MeasurementSpec:
    kw = {"prefactor": cplx(block.prefactor), "kappa": block.kappa}
    if block.kind == "custom":
        return zeno.MeasurementSpec(tuple(cplx(c) for c in block.coefficients), **kw)
    if block.kind == "diffraction_minimum":
        return zeno.diffraction_minimum(num_sites, **kw)
    if block.kind == "diffraction_maximum":
        return zeno.diffraction_maximum(num_sites, **kw)
    lattice_sites = num_sites - 2 if block.link else num_sites
    return zeno.gradient_measurement(lattice_sites, block.upsilon, link=block.link, **kw)


# --- commands ----------------------------------------------------------------

def cmd_couplings(cfg, out: Path, meta: dict, jobs: int) -> list[Path]:
    lattice = geometry.LatticeSpec(cfg.lattice.shape, cfg.lattice.spacing, cfg.lattice.wannier_width)
    modes = {k: to_mode(v) for k, v in cfg.modes.items()}
    quad = cfg.quadrature.model_dump()
    written, rows, report = [], [], []
    for m, n in cfg.pairs:
        t = geometry.compute_couplings(lattice, modes[m], modes[n], cfg.pair_range,
                                       mode_pair=(m, n), **quad)
        doc = geometry.tensor_to_json(t)
        doc.update(quadrature_error=t.quadrature_error, symmetry_deviation=t.symmetry_deviation)
        written.append(out_io.write_json(out / f"couplings_{m}_{n}.json", doc, meta))
        rows += [(m, n, i, j, float(v.real), float(v.imag)) for (i, j), v in sorted(t.entries.items())]
        report.append((m, n, t.quadrature_error, t.symmetry_deviation))
    written.append(out_io.write_csv(out / "couplings.csv", ["mode_m", "mode_n", "i", "j", "re", "im"], rows, meta))
    written.append(out_io.write_csv(out / "symmetry_report.csv",
                                    ["mode_m", "mode_n", "quadrature_error", "symmetry_deviation"], report, meta))
    return written


def cmd_spectrum(cfg, out: Path, meta: dict, jobs: int) -> list[Path]:
    built = build_model(cfg.model)
    res = solve.spectrum(built.hamiltonian, cfg.eigenvalues, method=cfg.method)
    psi = res.eigenvectors[:, 0]
    occ = [solve.expectation(psi, ops.number(built.basis, i)).real for i in range(built.basis.num_sites)]
    written = [out_io.write_csv(out / "spectrum.csv", ["index", "energy", "residual"],
                                [(i, float(e), float(r)) for i, (e, r) in enumerate(zip(res.eigenvalues, res.residuals))],
                                meta)]
    payload = {"method": res.method, "dimension": built.basis.dim, "ground_energy": float(res.eigenvalues[0]),
               "degenerate": res.degenerate, "ground_occupations": occ,
               "info": {k: v for k, v in built.info.items() if isinstance(v, (int, float, str, list, tuple))}}
    written.append(out_io.write_json(out / "observables.json", payload, meta))
    if cfg.checks.heisenberg_residual:
        if cfg.model.preset != "effective":
            raise ValueError("checks.heisenberg_residual needs the 'effective' preset")
        spec = built.info["spec"]
        sites = range(built.basis.num_sites)
        payload = {
            "symmetrized": [model.heisenberg_residual(built.basis, spec, k) for k in sites],
            "unsymmetrized": [model.heisenberg_residual(built.basis, spec, k, symmetrized=False) for k in sites],
        }
        written.append(out_io.write_json(out / "heisenberg.json", payload, meta))
    return written


def cmd_sweep(cfg, out: Path, meta: dict, jobs: int) -> list[Path]:
    r = solve.dicke_phase_sweep(cfg.mu, cfg.lambda1.values(), cfg.lambda2.values(), cfg.cap,
                                threshold=cfg.threshold, jobs=jobs,
                                sensitivity_thresholds=cfg.sensitivity_thresholds)
    written = [out_io.write_csv(out / "sweep.csv", ["lambda1", "lambda2", "n1", "n2", "E0"], r.table(), meta)]
    rows = [(ci, float(a), float(b)) for ci, c in enumerate(r.contours) for a, b in c]
    written.append(out_io.write_csv(out / "boundary.csv", ["contour", "lambda1", "lambda2"], rows, meta))
    payload = {
        "mu": cfg.mu, "cap": cfg.cap, "threshold": cfg.threshold,
        "grid": {"lambda1": r.lambda1.tolist(), "lambda2": r.lambda2.tolist()},
        "boundary_max_deviation": r.boundary_error(),
        "distance_to_half_point": r.distance_to((cfg.mu / 2, cfg.mu / 2)),
        "distance_to_axis_point": r.distance_to((cfg.mu, 0.0)),
        "threshold_sensitivity": {str(k): v for k, v in r.sensitivity.items()},
    }
    written.append(out_io.write_json(out / "sweep.json", payload, meta))
    return written


def cmd_zeno(cfg, out: Path, meta: dict, jobs: int) -> list[Path]:
    if cfg.model is not None:
        built = build_model(cfg.model)
        basis, h = built.basis, built.hamiltonian
        default_bonds = built.info.get("bonds")
    else:
        b = cfg.basis
        basis, h, default_bonds = build_basis(b.num_sites, b.cap, b.total_number), None, None
    meas = build_measurement(cfg.measurement, basis.num_sites)
    secs = zeno.sectors(basis, meas)
    bonds = cfg.terms.bonds if cfg.terms.bonds is not None else default_bonds
    terms = model.correlated_tunnelling_terms(basis, bonds, single=cfg.terms.include_single)
    terms += [(model.hop_label((i, j)), "single_hop_extra", ops.hop(basis, i, j)) for i, j in cfg.terms.extra_hops]
    survival = zeno.surviving_terms_report(terms, secs)
    written = [out_io.write_csv(out / "survival.csv", ["term", "kind", "survives"],
                                [(lab, kind, str(alive).lower()) for (lab, kind, _), (_, alive) in zip(terms, survival)],
                                meta)]
    rows = [(float(s.value.real), float(s.value.imag), float(s.eigenvalue.real), float(s.eigenvalue.imag), s.dim)
            for s in secs]
    written.append(out_io.write_csv(out / "sectors.csv", ["value_re", "value_im", "alpha_re", "alpha_im", "dimension"],
                                    rows, meta))
    payload = {"basis_dimension": basis.dim, "sectors": zeno.sector_report(secs)}
    if h is not None:
        blocks = [zeno.zeno_hamiltonian(h, s) for s in secs]
        payload["projected"] = [{"dimension": z.dim, "nnz": z.nnz, "hermiticity_error": z.hermiticity_error()}
                                for z in blocks]
    written.append(out_io.write_json(out / "sectors.json", payload, meta))
    return written


def cmd_trajectory(cfg, out: Path, meta: dict, jobs: int) -> list[Path]:
    b = cfg.basis
    basis = build_basis(b.num_sites, b.cap, b.total_number)
    meas = build_measurement(cfg.measurement, basis.num_sites)
    state0 = traj.superposition(basis, {a.state: cplx(a.amplitude) for a in cfg.initial})
    h = None
    if cfg.model is not None:
        built = build_model(cfg.model)
        if built.basis != basis:
            raise ValueError("model basis differs from the trajectory basis")
        h = built.hamiltonian
    seeds = range(cfg.seed, cfg.seed + cfg.trajectories)
    ens = traj.sample_ensemble(state0, meas, h, total_time=cfg.total_time, dt=cfg.dt, seeds=seeds,
                               sample_every=cfg.sample_every, jobs=jobs)
    keep = ens.records if cfg.records_to_write is None else ens.records[:cfg.records_to_write]
    nsec = len(ens.initial)
    rows = ([r.seed, *row] for r in keep for row in r.rows())
    written = [out_io.write_csv(out / "trajectories.csv", ["seed", "t", "k", *[f"p{i}" for i in range(nsec)]],
                                rows, meta)]
    payload = ens.to_dict()
    payload["sector_values"] = [[complex(v).real, complex(v).imag] for v in ens.records[0].sector_values]
    written.append(out_io.write_json(out / "ensemble.json", payload, meta))
    return written


HANDLERS = {
    "couplings": cmd_couplings,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "zeno": cmd_zeno,
    "trajectory": cmd_trajectory,
}


# --- entry point -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavitylattice", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in HANDLERS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", type=Path, default=Path("results"))
    s = sub.add_parser("schema", help="write the JSON schema of every command")
    s.add_argument("--out", type=Path, default=Path("schemas"))
    return p


def _fail(code: int, msg: str) -> int:
    print(f"cavitylattice: {msg}", file=sys.stderr)
    return code


def _validation_message(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "invalid config: " + "; ".join(parts)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            for name, schema in json_schemas().items():
                (args.out / f"{name}.schema.json").write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write schemas: {exc}")
        return 0
    if args.jobs < 1:
        return _fail(EXIT_SCHEMA, "--jobs must be >= 1")
    try:
        text = args.config.read_text()
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read config: {exc}")
    try:
        cfg = load_config(text, args.command)
        if args.seed is not None:
            if "seed" not in COMMANDS[args.command].model_fields:
                return _fail(EXIT_SCHEMA, f"--seed is not used by '{args.command}'")
            cfg = COMMANDS[args.command].model_validate({**resolved(cfg), "seed": args.seed})
    except json.JSONDecodeError as exc:
        return _fail(EXIT_SCHEMA, f"config is not valid JSON: {exc}")
    except ValidationError as exc:
        return _fail(EXIT_SCHEMA, _validation_message(exc))
    if cfg.command != args.command:
        return _fail(EXIT_SCHEMA, f"command: config is for '{cfg.command}', not '{args.command}'")
    canonical = canonical_json(cfg)
    meta = out_io.metadata(canonical, command=args.command)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        out_io.write_json(args.out / "resolved_config.json", {"config": resolved(cfg)}, meta)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write to {args.out}: {exc}")
    try:
        written = HANDLERS[args.command](cfg, args.out, meta, args.jobs)
    except OSError as exc:
        return _fail(EXIT_IO, f"{args.command}: output failed: {exc}")
    except (CavityLatticeError, ValueError, ArithmeticError, KeyError) as exc:
        return _fail(EXIT_COMPUTE, f"{args.command}: {type(exc).__name__}: {exc}")
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
