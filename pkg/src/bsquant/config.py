"""JSON experiment configuration and the objects it builds."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .acs import OmegaMap, omega_catalog, scale_adiabatic
from .group_actions import ActionFamily, catalog
from .prequantum import PrequantumLift
from .quadrature import QuadratureGrid

Scalar = Union[float, int, str, list[float]]
U64_MAX = 2 ** 64 - 1


class ConfigError(ValueError):
    """The configuration is malformed or names something that does not exist."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FamilyConfig(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class OmegaConfig(_Strict):
    """Exactly one of catalog, constant or polynomial."""

    catalog: Optional[str] = None
    params: dict[str, Any] = Field(default_factory=dict)
    constant: Optional[list[list[Scalar]]] = None
    polynomial: Optional[dict[str, Any]] = None

    @model_validator(mode="after")
    def _one_source(self):
        given = [v is not None for v in (self.catalog, self.constant, self.polynomial)]
        if sum(given) != 1:
            raise ValueError("omega needs exactly one of 'catalog', 'constant', 'polynomial'")
        return self


class Tolerances(_Strict):
    trunc_eps: float = 1e-12
    quad_tol: float = 1e-8
    check_tol: float = 1e-10

    @field_validator("trunc_eps", "quad_tol", "check_tol")
    @classmethod
    def _positive(cls, v):
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v


class QuadratureConfig(_Strict):
    order: int = 16
    panels: int = 4
    fiber_size: int = 16
    box_order: int = 16
    box_panels: int = 8


class TestSectionConfig(_Strict):
    """Base function (c_0 + sum_k c_k d_k) exp(-decay |d|^2) with d = x - m/N."""

    coefficients: list[Scalar] = Field(default_factory=lambda: [1.0])
    decay: float = 1.0
    radius: float = 6.0


class Outputs(_Strict):
    csv: Optional[str] = None
    json_path: Optional[str] = Field(default=None, alias="json")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ExperimentConfig(_Strict):
    family: FamilyConfig
    N: int = 1
    phases: Optional[list[float]] = None  # generator phases as turns, g(e_i) = exp(2 pi i turn)
    hermitian_constant: float = 1.0
    omega: Optional[OmegaConfig] = None
    m: Optional[list[int]] = None
    approximate: bool = False
    t_list: list[float] = Field(default_factory=lambda: [1.0])
    tolerances: Tolerances = Field(default_factory=Tolerances)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    checks: list[Literal["liftable", "action", "integrability", "invariance"]] = Field(
        default_factory=lambda: ["liftable", "action", "invariance"])
    quantities: list[Literal["l1_norm", "l2_norm", "pairing_error", "dirac_residual"]] = Field(
        default_factory=lambda: ["l1_norm", "l2_norm", "pairing_error", "dirac_residual"])
    test_section: Optional[TestSectionConfig] = None
    points: int = 20
    seed: int = 0
    outputs: Outputs = Field(default_factory=Outputs)

    @field_validator("N", "points")
    @classmethod
    def _positive_int(cls, v):
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("seed")
    @classmethod
    def _u64(cls, v):
        if not 0 <= v <= U64_MAX:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        return v

    @field_validator("t_list")
    @classmethod
    def _ascending(cls, v):
        if not v or any(t <= 0 for t in v):
            raise ValueError("t_list must hold positive values")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("t_list must be strictly ascending")
        return v

    # serialization ------------------------------------------------------------------

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=False, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from err
        try:
            json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
        return cls.from_json(text)

    # builders ------------------------------------------------------------------------

    def build_family(self) -> ActionFamily:
        try:
            return catalog(self.family.name, self.family.params)
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"bad family: {err}") from err

    def build_lift(self, family: ActionFamily | None = None) -> PrequantumLift:
        family = family or self.build_family()
        phases = None if self.phases is None else np.exp(2j * np.pi * np.asarray(self.phases, float))
        try:
            return PrequantumLift(family, self.N, phases, self.hermitian_constant)
        except ValueError as err:
            raise ConfigError(f"bad lift: {err}") from err

    def build_omega(self, n: int) -> OmegaMap:
        if self.omega is None:
            return omega_catalog("identity", {"n": n})
        try:
            if self.omega.catalog is not None:
                omega = omega_catalog(self.omega.catalog, self.omega.params)
            elif self.omega.constant is not None:
                omega = OmegaMap.constant(self.omega.constant)
            else:
                omega = OmegaMap.from_json(self.omega.polynomial)
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"bad omega: {err}") from err
        if omega.n != n:
            raise ConfigError(f"omega is {omega.n}x{omega.n} but the family has n={n}")
        return omega

    def build_grid(self) -> QuadratureGrid:
        try:
            return QuadratureGrid(**self.quadrature.model_dump())
        except ValueError as err:
            raise ConfigError(f"bad quadrature: {err}") from err

    def bs_index(self, n: int) -> tuple[int, ...]:
        m = self.m if self.m is not None else [0] * n
        if len(m) != n:
            raise ConfigError(f"m has {len(m)} entries but the family has n={n}")
        return tuple(m)

    def test_base(self, n: int):
        """The test function for delta pairings, or None when not configured."""
        if self.test_section is None:
            return None
        from .acs import _as_scalar_coefficient

        coeffs = [complex(_as_scalar_coefficient(c)) for c in self.test_section.coefficients]
        if len(coeffs) > n + 1:
            raise ConfigError("test_section has more coefficients than 1 + n")
        coeffs += [0j] * (n + 1 - len(coeffs))
        point = np.array(self.bs_index(n), float) / self.N
        decay = float(self.test_section.decay)

        def base(x):
            d = np.asarray(x, float) - point
            return (coeffs[0] + d @ np.array(coeffs[1:])) * np.exp(-decay * np.sum(d * d, axis=-1))

        return base

    def adiabatic(self, omega: OmegaMap, t: float):
        return scale_adiabatic(omega, t)
