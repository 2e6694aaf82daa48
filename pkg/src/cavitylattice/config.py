"""Validated run configurations for the command-line front end.

Every block forbids unknown keys. Complex numbers are written either as a
plain number or as ``[re, im]``.
"""

from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1

Complexish = Union[float, tuple[float, float]]


def cplx(v) -> complex:
    if isinstance(v, (tuple, list)):
        return complex(v[0], v[1])
    return complex(v)


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LatticeBlock(Strict):
    shape: tuple[int, ...] = Field(min_length=1, max_length=2)
    spacing: float = Field(1.0, gt=0)
    wannier_width: float = Field(0.1, gt=0)


class ModeBlock(Strict):
    kind: Literal["uniform", "standing", "travelling", "superposition"]
    k: float = 0.0
    theta: float = 0.0
    phase: float = 0.0
    amplitude: Complexish = 1.0
    components: tuple["ModeBlock", ...] = ()


class QuadratureBlock(Strict):
    points_per_period: int = Field(512, ge=16)
    window: float = Field(6.0, gt=0)
    tol: float = Field(1e-9, gt=0)


class BasisBlock(Strict):
    num_sites: int = Field(ge=1)
    cap: int = Field(ge=0)
    total_number: Optional[int] = Field(None, ge=0)


class CavityBlock(Strict):
    label: int = Field(ge=1)
    detuning: float
    kappa: float = Field(ge=0)
    omega_pump: Complexish = 1.0
    omega_self: Optional[float] = None


class PumpBlock(Strict):
    amplitude: Complexish = 1.0
    omega: float = 0.0


class EffectiveModel(Strict):
    """Model assembled from optical geometry: tensors are computed from ``modes``."""

    preset: Literal["effective"]
    lattice: LatticeBlock
    basis: BasisBlock
    modes: dict[str, ModeBlock] = {}
    tunnelling: float = 1.0
    interaction: float = 0.0
    pump: PumpBlock = PumpBlock()
    cavities: tuple[CavityBlock, ...] = ()
    pair_range: Literal["onsite", "nn", "onsite+nn", "all"] = "onsite+nn"
    quadrature: QuadratureBlock = QuadratureBlock()

    @model_validator(mode="after")
    def _modes_present(self):
        needed = {"0"} if (self.pump.omega != 0 or self.cavities) else set()
        needed |= {str(c.label) for c in self.cavities}
        missing = sorted(needed - set(self.modes))
        if missing:
            raise ValueError(f"modes missing for labels {missing}")
        if self.basis.num_sites != _prod(self.lattice.shape):
            raise ValueError("basis.num_sites must equal the number of lattice sites")
        return self


def _prod(shape):
    out = 1
    for s in shape:
        out *= s
    return out


class DickeModel(Strict):
    preset: Literal["generalised_dicke"]
    mu1: float = 1.0
    mu2: float = 1.0
    lambda1: Complexish = 0.0
    lambda2: Complexish = 0.0
    cap: int = Field(20, ge=1)


class TwoSpeciesDickeModel(Strict):
    preset: Literal["two_species_dicke"]
    mu: dict[Literal["A", "B", "L"], float] = {}
    lambda1: dict[Literal["A", "B"], Complexish] = {}
    lambda2: dict[Literal["A", "B"], Complexish] = {}
    cap: int = Field(ge=1)


class PairBHMModel(Strict):
    preset: Literal["pair_bhm"]
    tunnelling: float = 1.0
    interaction: float = 0.0
    pair: Complexish = 0.0
    num_sites: int = Field(ge=1)
    cap: int = Field(ge=1)


class SuperexchangeModel(Strict):
    preset: Literal["superexchange"]
    detuning: float
    prefactor: Complexish
    j_nn: Complexish


class GaugeFieldModel(Strict):
    preset: Literal["gauge_field"]
    strength: float = 1.0
    link_ratio: float = 1.0
    num_sites: int = Field(ge=2)
    lattice_atoms: int = Field(ge=0)
    link_atoms: int = Field(1, ge=0)
    cap: Optional[int] = Field(None, ge=1)


class CorrelatedModel(Strict):
    preset: Literal["correlated_tunnelling"]
    basis: BasisBlock
    one_body: Complexish = 0.0
    two_body: Complexish = 1.0


ModelBlock = Annotated[
    Union[EffectiveModel, DickeModel, TwoSpeciesDickeModel, PairBHMModel,
          SuperexchangeModel, GaugeFieldModel, CorrelatedModel],
    Field(discriminator="preset"),
]


class MeasurementBlock(Strict):
    kind: Literal["custom", "diffraction_minimum", "diffraction_maximum", "gradient"]
    coefficients: Optional[tuple[Complexish, ...]] = None
    upsilon: float = 1.0
    link: bool = True
    prefactor: Complexish = 1.0
    kappa: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _coefficients(self):
        if (self.kind == "custom") != (self.coefficients is not None):
            raise ValueError("coefficients are required for kind 'custom' and only allowed there")
        return self


class RangeBlock(Strict):
    start: float
    stop: float
    step: float = Field(gt=0)

    def values(self):
        import numpy as np
        n = int(round((self.stop - self.start) / self.step)) + 1
        return np.round(self.start + self.step * np.arange(n), 12)


class _Base(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION


class CouplingsConfig(_Base):
    command: Literal["couplings"]
    lattice: LatticeBlock
    modes: dict[str, ModeBlock]
    pairs: tuple[tuple[str, str], ...]
    pair_range: Literal["onsite", "nn", "onsite+nn", "all"] = "onsite+nn"
    quadrature: QuadratureBlock = QuadratureBlock()

    @model_validator(mode="after")
    def _known(self):
        for p in self.pairs:
            for label in p:
                if label not in self.modes:
                    raise ValueError(f"pairs: unknown mode {label!r}")
        return self


class ChecksBlock(Strict):
    heisenberg_residual: bool = False


class SpectrumConfig(_Base):
    command: Literal["spectrum"]
    model: ModelBlock
    eigenvalues: int = Field(4, ge=1)
    method: Literal["auto", "dense", "lanczos"] = "auto"
    checks: ChecksBlock = ChecksBlock()


class SweepConfig(_Base):
    command: Literal["sweep"]
    mu: float = 1.0
    lambda1: RangeBlock
    lambda2: RangeBlock
    cap: int = Field(20, ge=1)
    threshold: float = Field(1.0, gt=0)
    sensitivity_thresholds: tuple[float, ...] = (0.2, 0.4, 0.5, 0.6, 0.8, 1.0)


class TermsBlock(Strict):
    bonds: Optional[tuple[tuple[int, int], ...]] = None
    include_single: bool = True
    extra_hops: tuple[tuple[int, int], ...] = ()


class ZenoConfig(_Base):
    command: Literal["zeno"]
    model: Optional[ModelBlock] = None
    basis: Optional[BasisBlock] = None
    measurement: MeasurementBlock
    terms: TermsBlock = TermsBlock()

    @model_validator(mode="after")
    def _one_basis(self):
        if (self.model is None) == (self.basis is None):
            raise ValueError("give exactly one of 'model' and 'basis'")
        return self


class AmplitudeBlock(Strict):
    state: tuple[int, ...]
    amplitude: Complexish = 1.0


class TrajectoryConfig(_Base):
    command: Literal["trajectory"]
    basis: BasisBlock
    measurement: MeasurementBlock
    initial: tuple[AmplitudeBlock, ...] = Field(min_length=1)
    model: Optional[ModelBlock] = None
    total_time: float = Field(gt=0)
    dt: float = Field(gt=0)
    trajectories: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    sample_every: Optional[int] = Field(None, ge=1)
    records_to_write: Optional[int] = Field(20, ge=0)


RunConfig = Annotated[
    Union[CouplingsConfig, SpectrumConfig, SweepConfig, ZenoConfig, TrajectoryConfig],
    Field(discriminator="command"),
]

COMMANDS = {
    "couplings": CouplingsConfig,
    "spectrum": SpectrumConfig,
    "sweep": SweepConfig,
    "zeno": ZenoConfig,
    "trajectory": TrajectoryConfig,
}


def load_config(text: str, command: str):
    """Parse JSON text for ``command``; the document's own ``command`` key must agree."""
    doc = json.loads(text)
    if isinstance(doc, dict):
        doc.setdefault("command", command)
    return COMMANDS[command].model_validate(doc)


def resolved(cfg) -> dict:
    return cfg.model_dump(mode="json")


def canonical_json(cfg) -> str:
    return json.dumps(resolved(cfg), sort_keys=True, separators=(",", ":"))


def json_schemas() -> dict[str, dict]:
    return {name: cls.model_json_schema() for name, cls in COMMANDS.items()}
