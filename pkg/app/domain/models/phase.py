"""Phase-space state of real solutions of (P(h) + k^2) u = 0.

A solution is tracked in log-polar form: (u, h u') = exp(log_length) *
(cos theta, sin theta), theta lifted to the real line, plus the scaled mass
J = (integral of u^2 from the start) / L^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from app.core.errors import ValidationError
from app.domain.models.potential import PotentialSpec


@dataclass(frozen=True, slots=True)
class PhasePoint:
    x: float
    theta: float
    log_length: float = 0.0
    mass_scaled: float = 0.0

    def vector(self) -> np.ndarray:
        """The state vector (u, h u')."""
        scale = math.exp(self.log_length)
        return np.array([scale * math.cos(self.theta), scale * math.sin(self.theta)])

    def state(self) -> np.ndarray:
        return np.array([self.theta, self.log_length, self.mass_scaled])

    def moved(self, x: float, state: np.ndarray) -> PhasePoint:
        return replace(
            self,
            x=float(x),
            theta=float(state[0]),
            log_length=float(state[1]),
            mass_scaled=float(state[2]),
        )


@dataclass(frozen=True)
class PhaseProblem:
    """One ODE instance: a potential, the spectral parameter k and h."""

    potential: PotentialSpec
    k: float
    h: float
    tol: float = 1e-10

    def __post_init__(self) -> None:
        for name in ("k", "h", "tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(
                    f"{name} must be a positive finite number", details={"field": name, name: value}
                )

    @property
    def B(self) -> float:
        return self.potential.support_right

    def with_k(self, k: float) -> PhaseProblem:
        return replace(self, k=k)

    def max_step(self) -> float:
        """Step cap keeping consecutive lifted angles less than pi/2 apart."""
        return self.h * math.pi / (2.0 * (1.0 + self.potential.sup_abs() + self.k**2))


class BoundaryKind(str, Enum):
    """Boundary conditions fixing the initial angle of a solution."""

    NEUMANN_LEFT = "neumann_left"
    DIRICHLET_LEFT = "dirichlet_left"
    OUTGOING_PLUS = "outgoing_plus"
    OUTGOING_MINUS = "outgoing_minus"
    NEUMANN_RIGHT = "neumann_right"
    DIRICHLET_RIGHT = "dirichlet_right"

    @property
    def is_left(self) -> bool:
        return self not in (BoundaryKind.NEUMANN_RIGHT, BoundaryKind.DIRICHLET_RIGHT)

    def initial_angle(self, k: float) -> float:
        if self is BoundaryKind.OUTGOING_PLUS:
            return math.atan(k)
        if self is BoundaryKind.OUTGOING_MINUS:
            return -math.atan(k)
        if self in (BoundaryKind.DIRICHLET_LEFT, BoundaryKind.DIRICHLET_RIGHT):
            return math.pi / 2
        return 0.0

    def initial_angle_dk(self, k: float) -> float:
        """d(initial angle)/dk; zero except for the outgoing conditions."""
        if self is BoundaryKind.OUTGOING_PLUS:
            return 1.0 / (1.0 + k * k)
        if self is BoundaryKind.OUTGOING_MINUS:
            return -1.0 / (1.0 + k * k)
        return 0.0

    def start_x(self, B: float) -> float:
        return 0.0 if self.is_left else B

    def start_point(self, k: float, B: float) -> PhasePoint:
        return PhasePoint(x=self.start_x(B), theta=self.initial_angle(k))


RIGHT_BOUNDARIES = (BoundaryKind.NEUMANN_RIGHT, BoundaryKind.DIRICHLET_RIGHT)


class StateKind(str, Enum):
    """Spectral objects located by shooting; the order fixes CSV ordering."""

    NEUMANN = "neumann"
    BOUND = "bound"
    ANTIBOUND = "antibound"

    @property
    def left_boundary(self) -> BoundaryKind:
        return {
            StateKind.NEUMANN: BoundaryKind.NEUMANN_LEFT,
            StateKind.BOUND: BoundaryKind.OUTGOING_PLUS,
            StateKind.ANTIBOUND: BoundaryKind.OUTGOING_MINUS,
        }[self]

    @property
    def rank(self) -> int:
        return list(StateKind).index(self)


class PhaseEngine(str, Enum):
    ODE = "ode"
    TRANSFER = "transfer"


@dataclass(frozen=True, slots=True)
class StateRecord:
    """A located state.

    ``residual`` is |F(k) - 2 pi m| in units of the mismatch F, not of k; for a root
    refined to |dk| <= tol it is at most about |dmismatch_dk| tol plus the integration error.
    """

    kind: StateKind
    k: float
    h: float
    winding: int
    residual: float
    dmismatch_dk: float
