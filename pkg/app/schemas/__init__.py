"""Schemas package for run configuration and report models."""

from app.schemas.reports import (
    CheckReport,
    DecayFit,
    EnvelopeViolation,
    HSweepEntry,
    InterlacingViolation,
    LemmaSuiteReport,
    PairingReport,
    PairRecord,
    StateRow,
    SweepReport,
    WronskianDrift,
)
from app.schemas.run_config import RunConfig, SweepConfig

__all__ = [
    "CheckReport",
    "DecayFit",
    "EnvelopeViolation",
    "HSweepEntry",
    "InterlacingViolation",
    "LemmaSuiteReport",
    "PairRecord",
    "PairingReport",
    "RunConfig",
    "StateRow",
    "SweepConfig",
    "SweepReport",
    "WronskianDrift",
]
