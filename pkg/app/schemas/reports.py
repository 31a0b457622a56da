"""Report schemas produced by lemma checks, pairing and sweeps."""

from __future__ import annotations

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from app.domain.models.phase import StateKind, StateRecord

MAX_REPORTED_VIOLATIONS = 20


class CheckReport(BaseModel):
    """Outcome of one runtime property check."""

    name: str
    passed: bool
    k: float | None = None
    h: float | None = None
    worst_margin: float | None = Field(None, description="Smallest margin seen; negative fails")
    n_checked: int = 0
    skipped: bool = False
    reason: str | None = None
    violations: list[dict[str, float]] = Field(default_factory=list)

    @classmethod
    def skip(
        cls, name: str, reason: str, k: float | None = None, h: float | None = None
    ) -> CheckReport:
        return cls(name=name, passed=True, skipped=True, reason=reason, k=k, h=h)


class WronskianDrift(BaseModel):
    relative_drift: float
    scale_free_defect: float
    n_points: int
    initial_wronskian: float


class StateRow(BaseModel):
    """One row of ``states.csv``."""

    model_config = ConfigDict(frozen=True)

    h: float
    inv_h: float
    kind: StateKind
    k: float
    winding: int
    residual: float
    dmismatch_dk: float

    @classmethod
    def from_record(cls, record: StateRecord) -> StateRow:
        return cls(
            h=record.h,
            inv_h=1.0 / record.h,
            kind=record.kind,
            k=record.k,
            winding=record.winding,
            residual=record.residual,
            dmismatch_dk=record.dmismatch_dk,
        )

    def sort_key(self) -> tuple[float, int, float]:
        return (-self.h, self.kind.rank, self.k)


class DecayFit(BaseModel):
    """Least-squares fit of log(gap) = logC_hat - delta_hat / h."""

    delta_hat: float
    logC_hat: float
    r_squared: float = Field(..., ge=0.0, le=1.0)
    n_points: int = Field(..., ge=3)
    n_floored: int = 0

    def envelope(self, h: float) -> float:
        """Fitted gap bound C * exp(-delta / h)."""
        return math.exp(self.logC_hat - self.delta_hat / h)


class PairRecord(BaseModel):
    h: float | None = None
    k0: float
    k_plus: float | None = None
    k_minus: float | None = None
    gap_plus: float | None = None
    gap_minus: float | None = None

    @property
    def complete(self) -> bool:
        return self.k_plus is not None and self.k_minus is not None


class PairingReport(BaseModel):
    h: float | None = None
    right_bc: str | None = None
    band: tuple[float, float] | None = None
    shrunk_band: tuple[float, float] | None = None
    pairs: list[PairRecord] = Field(default_factory=list)
    unpaired_neumann: list[float] = Field(default_factory=list)
    unpaired_bound: list[float] = Field(default_factory=list)
    unpaired_antibound: list[float] = Field(default_factory=list)

    @property
    def fully_paired(self) -> bool:
        """No Neumann eigenvalue of the shrunk band lacks a partner of either kind."""
        return not self.unpaired_neumann


class InterlacingViolation(BaseModel):
    h: float | None = None
    right_bc: str | None = None
    k_low: float
    k_high: float
    # antibound state sits on an endpoint to within the root-finding floor
    unresolved: bool = False


class EnvelopeViolation(BaseModel):
    """A bound or antibound state farther than ten fitted envelopes from any Neumann value."""

    h: float
    kind: StateKind
    k: float
    distance: float
    allowed: float


class HSweepEntry(BaseModel):
    h: float
    states: list[StateRow] = Field(default_factory=list)
    pairings: list[PairingReport] = Field(default_factory=list)
    angle_closeness: float | None = None
    interlacing: list[InterlacingViolation] = Field(default_factory=list)
    error: dict[str, Any] | None = None


class SweepReport(BaseModel):
    entries: list[HSweepEntry] = Field(default_factory=list)
    gap_fit: DecayFit | None = None
    closeness_fit: DecayFit | None = None
    first_paired_h: float | None = None
    envelope_violations: list[EnvelopeViolation] = Field(default_factory=list)
    fit_errors: dict[str, str] = Field(default_factory=dict)

    def rows(self) -> list[StateRow]:
        out = [row for entry in self.entries for row in entry.states]
        return sorted(out, key=StateRow.sort_key)

    def pairs(self) -> list[PairRecord]:
        return [p for e in self.entries for report in e.pairings for p in report.pairs]

    @property
    def failed(self) -> list[HSweepEntry]:
        return [e for e in self.entries if e.error is not None]


class LemmaSuiteReport(BaseModel):
    checks: list[CheckReport] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def n_skipped(self) -> int:
        return sum(1 for c in self.checks if c.skipped)

    def worst_margins(self) -> dict[str, float]:
        """Smallest margin per check name over all non-skipped checks."""
        worst: dict[str, float] = {}
        for check in self.checks:
            if check.skipped or check.worst_margin is None:
                continue
            worst[check.name] = min(worst.get(check.name, check.worst_margin), check.worst_margin)
        return worst
