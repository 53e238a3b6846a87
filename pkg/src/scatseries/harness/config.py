"""Experiment configuration: YAML documents validated by pydantic.

Unknown keys are rejected at every level.  ``--set a.b=value`` overrides are
applied to the raw document before validation, with ``value`` parsed as YAML.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PeriodicGridConfig(_Strict):
    L: float = Field(gt=0)
    N: int = Field(ge=8)

    @field_validator("N")
    @classmethod
    def _power_of_two(cls, n):
        if n & (n - 1):
            raise ValueError("N must be a power of two")
        return n


class ToyGridConfig(_Strict):
    d: int = Field(ge=1)
    frequencies: Optional[list[float]] = None

    @model_validator(mode="after")
    def _length(self):
        if self.frequencies is not None and len(self.frequencies) != self.d:
            raise ValueError("frequencies must have d entries")
        return self


class HorizonConfig(_Strict):
    T: float = Field(gt=0)
    dt: float = Field(gt=0)


class IntegratorSection(_Strict):
    scheme: Optional[Literal["strang", "lawson-rk4"]] = None
    save_every: int = Field(default=1, ge=1)
    conservation_check_every: int = Field(default=0, ge=0)


class DataConfig(_Strict):
    profile: Literal["gaussian", "packet", "random-seeded"] = "gaussian"
    amplitude: float = Field(default=1.0, ge=0)
    width: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0)
    wavenumber: float = 1.0
    normalize_to: Optional[float] = Field(default=None, ge=0)


class SeriesConfig(_Strict):
    K: int = Field(default=2, ge=0)
    epsilon_list: list[float] = Field(default_factory=lambda: [1e-2, 1e-2 / 2 ** 0.5, 5e-3])
    fd_step: float = Field(default=1e-2, gt=0)
    fd_check: bool = False

    @field_validator("epsilon_list")
    @classmethod
    def _positive(cls, eps):
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("epsilon_list must hold positive numbers")
        return eps


class ThresholdConfig(_Strict):
    tail: float = Field(default=1e-4, gt=0)
    boundary_mass: float = Field(default=1e-6, gt=0)
    noise_floor: float = Field(default=1e-13, gt=0)
    slope_tolerance: float = Field(default=0.3, gt=0)
    p_tolerance: float = Field(default=0.1, gt=0)
    born_slope_min: float = 8.5
    lambda_rel_tolerance: float = Field(default=0.02, gt=0)
    omega_defect: float = Field(default=1e-5, gt=0)
    refinement_factor: float = Field(default=4.0, gt=0)
    fd_rel_tolerance: float = Field(default=1e-4, gt=0)
    envelope_residual: float = Field(default=0.5, gt=0)
    sparsity_ratio: float = Field(default=1e-12, gt=0)
    norm_stability: float = Field(default=0.05, gt=0)


class StudyConfig(_Strict):
    dts: list[float] = Field(default_factory=list)
    horizons: list[float] = Field(default_factory=list)
    scales: list[float] = Field(default_factory=lambda: [1.0, 0.5])
    probes: int = Field(default=32, ge=2)
    doubling: bool = False
    corpus: int = Field(default=4, ge=1)


class ExperimentConfig(_Strict):
    equation: Literal["nls", "kg", "toy", "toy-hartree"]
    p: int
    lam: float = Field(alias="lambda")
    grid: Union[PeriodicGridConfig, ToyGridConfig]
    horizon: HorizonConfig
    data: DataConfig = DataConfig()
    perturbation: DataConfig = DataConfig(profile="random-seeded", seed=1)
    series: SeriesConfig = SeriesConfig()
    thresholds: ThresholdConfig = ThresholdConfig()
    integrator: IntegratorSection = IntegratorSection()
    study: StudyConfig = StudyConfig()
    kg_mass: float = Field(default=1.0, ge=0)
    conv_kernel: Optional[list[list[float]]] = None
    output_dir: str = "results"

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("p")
    @classmethod
    def _odd(cls, p):
        if p < 3 or p % 2 == 0:
            raise ValueError(f"p must be an odd integer >= 3 (got {p}); even powers are rejected")
        return p

    @model_validator(mode="after")
    def _consistent(self):
        toy = self.equation.startswith("toy")
        if toy != isinstance(self.grid, ToyGridConfig):
            raise ValueError(f"equation '{self.equation}' needs a {'toy {d}' if toy else 'periodic {L, N}'} grid")
        if self.equation == "toy-hartree":
            if self.p != 3:
                raise ValueError("toy-hartree is cubic: p must be 3")
            if self.conv_kernel is None:
                raise ValueError("toy-hartree needs conv_kernel")
        elif self.conv_kernel is not None:
            raise ValueError("conv_kernel is only used by toy-hartree")
        steps = 2 * self.horizon.T / self.horizon.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError("horizon.dt must divide 2T")
        return self

    def canonical(self):
        """Plain dict with YAML-style key names, suitable for hashing and output."""
        return self.model_dump(mode="json", by_alias=True)

    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _set_path(doc, dotted, value):
    node = doc
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set '{dotted}': '{key}' is not a mapping")
    node[keys[-1]] = value


def apply_overrides(doc, overrides):
    doc = json.loads(json.dumps(doc))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, raw = item.split("=", 1)
        _set_path(doc, key.strip(), yaml.safe_load(raw))
    return doc


def load_config(path, overrides=None):
    """Read, override and validate a config file; raises :class:`ConfigError`."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return validate_document(apply_overrides(doc, overrides))


def validate_document(doc):
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines)) from exc
