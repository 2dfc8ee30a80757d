"""Validated JSON inputs: simulation run configs and verification plans."""

from __future__ import annotations

import json
import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .dyadic import BesovSpec
from .errors import ConfigurationError
from .solver import INTEGRATORS, SolverConfig

PLAN_NAMES: tuple[str, ...] = (
    "partition",
    "bernstein",
    "equivalence",
    "semigroup",
    "commutator",
    "vishik",
    "maxprinciple",
    "smalldata",
    "scaling",
    "scheme",
    "theorem2",
    "e1calibration",
)

PlanName = Literal[
    "partition",
    "bernstein",
    "equivalence",
    "semigroup",
    "commutator",
    "vishik",
    "maxprinciple",
    "smalldata",
    "scaling",
    "scheme",
    "theorem2",
    "e1calibration",
]


def _exponent(v: Any) -> Any:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    return v


class BesovSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    s: float
    p: float = Field(ge=1.0)
    m: float = Field(default=1.0, ge=1.0)
    hom: bool = True

    @field_validator("p", "m", mode="before")
    @classmethod
    def _parse_inf(cls, v: Any) -> Any:
        return _exponent(v)

    def to_spec(self) -> BesovSpec:
        return BesovSpec(self.s, self.p, self.m, self.hom)


class InitialSpec(BaseModel):
    """kind=modes: params.modes = [{k, amplitude, phase}];
    kind=random_seeded: params {seed?, k_max, slope, target?};
    kind=file: params.path to a snapshot."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["modes", "random_seeded", "file"]
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("params")
    @classmethod
    def _check_params(cls, v: dict[str, Any], info) -> dict[str, Any]:
        kind = info.data.get("kind")
        if kind == "modes":
            modes = v.get("modes")
            if not isinstance(modes, list) or not modes:
                raise ValueError("kind=modes needs a non-empty params.modes list")
            for m in modes:
                if not isinstance(m, dict) or "k" not in m:
                    raise ValueError("every mode needs a lattice vector k")
        if kind == "file" and not v.get("path"):
            raise ValueError("kind=file needs params.path")
        return v


class OutputsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ledger_csv: bool = True
    # 0 writes only the initial and final snapshots
    snapshot_every: int = Field(default=0, ge=0)
    besov_specs: list[BesovSpecModel] = Field(default_factory=list)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "run"
    n: int = Field(gt=0)
    length: float = Field(default=2.0 * math.pi, gt=0.0)
    alpha: float = Field(ge=0.0, lt=1.0)
    dt: float = Field(gt=0.0)
    t_end: float = Field(ge=0.0)
    cfl: float = Field(default=0.4, gt=0.0, lt=1.0)
    integrator: str = "IF-RK4"
    kappa: float = Field(default=1.0, ge=0.0)
    dealias: bool = True
    seed: int | None = None
    initial: InitialSpec
    outputs: OutputsSpec = Field(default_factory=OutputsSpec)

    @field_validator("integrator")
    @classmethod
    def _check_integrator(cls, v: str) -> str:
        if v not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        return v

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            alpha=self.alpha,
            dt=self.dt,
            t_end=self.t_end,
            cfl=self.cfl,
            dealias=self.dealias,
            integrator=self.integrator,  # type: ignore[arg-type]
            kappa=self.kappa,
        )


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: PlanName
    params: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    out_dir: str | None = None


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path} is not valid JSON: {e}") from e


def _validation_message(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err.get("loc", ()))
        parts.append(f"{loc or '<root>'}: {err.get('msg')}")
    return "; ".join(parts)


def load_run_config(path: str) -> RunConfig:
    try:
        return RunConfig.model_validate(_read_json(path))
    except ValidationError as e:
        raise ConfigurationError(f"invalid run config {path}: {_validation_message(e)}") from e


def load_plan(name_or_path: str) -> ExperimentPlan:
    """A bare plan name, or a JSON plan file {name, params, seed, out_dir}."""
    if name_or_path in PLAN_NAMES:
        return ExperimentPlan(name=name_or_path)  # type: ignore[arg-type]
    if not name_or_path.endswith(".json"):
        raise ConfigurationError(f"unknown plan {name_or_path!r}; known plans: {', '.join(PLAN_NAMES)}")
    try:
        return ExperimentPlan.model_validate(_read_json(name_or_path))
    except ValidationError as e:
        raise ConfigurationError(f"invalid plan {name_or_path}: {_validation_message(e)}") from e
