"""Run configuration schemas.

``RunConfig`` is the validated form of a JSON run file (plus flag
overrides); ``SweepConfig`` is the fully resolved input of one h-sweep.
"""

from __future__ import annotations

import math
from typing import Annotated

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from app.core.config import Settings
from app.core.errors import ConfigValidationError
from app.domain.models.phase import RIGHT_BOUNDARIES, BoundaryKind, PhaseEngine, StateKind
from app.domain.models.potential import BUILTIN_POTENTIALS, PotentialSpec


def _validate_band(v: tuple[float, float]) -> tuple[float, float]:
    lo, hi = v
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
        raise ValueError(f"band must satisfy 0 < c_k < C_k, got ({lo}, {hi})")
    return v


def _validate_h_values(v: list[float]) -> list[float]:
    if not v:
        raise ValueError("at least one h value is required")
    if any(not (math.isfinite(h) and h > 0) for h in v):
        raise ValueError("h values must be positive")
    return sorted(set(v), reverse=True)


def _validate_right_bc(v: BoundaryKind) -> BoundaryKind:
    if v not in RIGHT_BOUNDARIES:
        raise ValueError("right_bc must be neumann_right or dirichlet_right")
    return v


Band = Annotated[tuple[float, float], AfterValidator(_validate_band)]
HValues = Annotated[list[float], AfterValidator(_validate_h_values)]
RightBoundary = Annotated[BoundaryKind, AfterValidator(_validate_right_bc)]


class SweepConfig(BaseModel):
    """Inputs of one h-sweep; h values are kept in descending order."""

    model_config = ConfigDict(extra="forbid")

    potential: PotentialSpec
    right_bc: RightBoundary = BoundaryKind.NEUMANN_RIGHT
    merge_right_bcs: bool = Field(
        default=False, description="Run both right conditions and merge the state sets"
    )
    band: Band
    h_values: HValues
    x_match: float | None = None
    grid_n: int = Field(default=64, ge=2)
    tol: float = Field(default=1e-11, gt=0, description="Bisection tolerance in k")
    ode_tol: float = Field(default=1e-10, gt=0)
    engine: PhaseEngine = PhaseEngine.ODE
    max_samples: int = Field(default=20000, ge=16)

    @property
    def right_bcs(self) -> tuple[BoundaryKind, ...]:
        return RIGHT_BOUNDARIES if self.merge_right_bcs else (self.right_bc,)


class RunConfig(BaseModel):
    """Validated run file. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    potential: PotentialSpec | None = None
    builtin: str | None = Field(default=None, description="Name of a built-in potential")
    right_bc: RightBoundary = BoundaryKind.NEUMANN_RIGHT
    merge_right_bcs: bool = False
    band: Band = (0.5, 3.0)
    h: HValues = Field(default_factory=lambda: [1.0])
    kinds: list[StateKind] = Field(default_factory=lambda: list(StateKind))
    x_match: float | None = None
    grid_n: int | None = Field(default=None, ge=2)
    tol: float | None = Field(default=None, gt=0)
    ode_tol: float | None = Field(default=None, gt=0)
    engine: PhaseEngine = PhaseEngine.ODE
    out_dir: str = "results"
    input_csv: str | None = Field(default=None, description="states.csv to plot")

    lemma_k: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    lemma_h: list[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    cone_fraction: float = Field(default=0.5, gt=0, lt=1)
    check_slack: float = Field(default=1e-9, ge=0)

    @field_validator("lemma_k", "lemma_h")
    @classmethod
    def _positive_samples(cls, v: list[float]) -> list[float]:
        if not v or any(not x > 0 for x in v):
            raise ValueError("samples must be a nonempty list of positive numbers")
        return v

    @field_validator("builtin")
    @classmethod
    def _known_builtin(cls, v: str | None) -> str | None:
        if v is not None and v not in BUILTIN_POTENTIALS:
            raise ValueError(f"unknown builtin {v!r}; expected one of {sorted(BUILTIN_POTENTIALS)}")
        return v

    @model_validator(mode="after")
    def _one_potential_source(self) -> RunConfig:
        if self.potential is not None and self.builtin is not None:
            raise ValueError("give either potential or builtin, not both")
        return self

    def resolved_potential(self) -> PotentialSpec | None:
        if self.potential is not None:
            return self.potential
        if self.builtin is not None:
            return BUILTIN_POTENTIALS[self.builtin]()
        return None

    def to_sweep_config(self, settings: Settings) -> SweepConfig:
        potential = self.resolved_potential()
        if potential is None:
            raise ConfigValidationError(
                "A potential or builtin is required for this command",
                details={"field": "potential"},
            )
        numerics = settings.numerics
        return SweepConfig(
            potential=potential,
            right_bc=self.right_bc,
            merge_right_bcs=self.merge_right_bcs,
            band=self.band,
            h_values=self.h,
            x_match=self.x_match,
            grid_n=self.grid_n or numerics.grid_n,
            tol=self.tol or numerics.root_tol,
            ode_tol=self.ode_tol or numerics.ode_tol,
            engine=self.engine,
            max_samples=numerics.max_samples,
        )
