"""Pytest configuration and fixtures."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest
import structlog

ROOT = Path(__file__).resolve().parents[1]

# Add app to path for imports
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# Keep test output quiet; individual tests override through monkeypatch
os.environ.setdefault("RESONANCE_LAB_LOG_LEVEL", "WARNING")
os.environ.setdefault("RESONANCE_LAB_THREADS", "1")

from app.core.config import reload_settings
from app.domain.models.potential import (
    PiecewiseConstantPotential,
    ZeroPotential,
    bump_well,
    positive_barrier,
)
from app.services import spectra

SEED = 20241019


def random_piecewise_constant(
    rng: np.random.Generator,
    max_segments: int = 6,
    B: float = 2.0,
    low: float = -5.0,
    high: float = 5.0,
) -> PiecewiseConstantPotential:
    """Random piecewise-constant potential on [0, B] with 1..max_segments pieces."""
    n = int(rng.integers(1, max_segments + 1))
    cuts = np.sort(rng.uniform(0.05 * B, 0.95 * B, size=n - 1))
    breaks = (0.0, *[float(c) for c in cuts], B)
    values = tuple(float(v) for v in rng.uniform(low, high, size=n))
    return PiecewiseConstantPotential(breaks=breaks, values=values, support_right=B)


@pytest.fixture(autouse=True)
def _fresh_state():
    """Reload settings and drop cached right-end phases around every test."""
    reload_settings()
    spectra.clear_cache()
    yield
    spectra.clear_cache()
    reload_settings()
    # setup_logging binds the current stderr, which capsys replaces per test
    structlog.reset_defaults()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for randomized checks."""
    return np.random.default_rng(SEED)


@pytest.fixture
def zero_potential() -> ZeroPotential:
    """V = 0 on [0, 1]."""
    return ZeroPotential(support_right=1.0)


@pytest.fixture
def step_well() -> PiecewiseConstantPotential:
    """V = 1 on [0, 0.5), V = -4 on [0.5, 1], A = 0.5."""
    return PiecewiseConstantPotential(breaks=(0.0, 0.5, 1.0), values=(1.0, -4.0), bump_width=0.5)


@pytest.fixture
def barrier() -> PiecewiseConstantPotential:
    """V = 1 on [0, 1]."""
    return positive_barrier()


@pytest.fixture
def well() -> PiecewiseConstantPotential:
    """Positive step on [0, 0.4] and a well of depth 3 up to B = 2."""
    return bump_well()


@pytest.fixture
def random_potentials(rng) -> list[PiecewiseConstantPotential]:
    """A handful of random piecewise-constant potentials on [0, 1]."""
    return [random_piecewise_constant(rng, B=1.0) for _ in range(5)]
