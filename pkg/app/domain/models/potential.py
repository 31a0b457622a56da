"""Real potentials supported in [0, B].

Three shapes are supported: the zero potential, piecewise-constant
potentials and cubic splines. All are immutable pydantic models so they can
be hashed, cached and shared across worker threads.

Conventions:
- V(x) = 0 outside [support_left, support_right].
- At a discontinuity the right limit is returned.
- Splines are natural (zero second derivative) at both ends unless an end is
  declared ``clamped`` (zero first derivative); they are zero outside the
  knot range.

Usage:
    p = PiecewiseConstantPotential(breaks=(0, 0.5, 1), values=(1, -4))
    p.evaluate(0.25)            # 1.0
    check_bump(p, 0.5)          # BumpCheck(holds=True, margin=1.0)
"""

from __future__ import annotations

import bisect
from functools import lru_cache
from typing import Annotated, Any, Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator
from scipy.interpolate import CubicSpline

from app.core.errors import SymmetryError, ValidationError

EndCondition = Literal["natural", "clamped"]

SYMMETRY_TOL = 1e-9
SYMMETRY_SAMPLES = 2000
BOUNDS_SAMPLES = 65
BUMP_EPS_FRACTION = 1.0 / 1024.0


class BumpCheck(NamedTuple):
    holds: bool
    margin: float


class _PotentialBase(BaseModel):
    """Fields shared by every potential shape."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    support_left: float = Field(default=0.0, description="Left end of the support")
    support_right: float = Field(default=0.0, description="B, right end of support and domain")
    bump_width: float | None = Field(default=None, description="A, end of the positivity interval")

    @model_validator(mode="after")
    def _validate_support(self) -> _PotentialBase:
        if not self.support_right > self.support_left:
            raise ValueError(
                f"support_right ({self.support_right}) must exceed "
                f"support_left ({self.support_left})"
            )
        if self.support_right <= 0:
            raise ValueError("support_right must be positive")
        if self.bump_width is not None and not 0 < self.bump_width <= self.support_right:
            raise ValueError(f"bump_width must lie in (0, {self.support_right}]")
        return self

    @property
    def is_piecewise_constant(self) -> bool:
        return False

    def in_support(self, x: float) -> bool:
        return self.support_left <= x <= self.support_right

    def evaluate(self, x: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(float(x)) for x in np.asarray(xs, dtype=float)])

    def breakpoints(self) -> list[float]:  # pragma: no cover - abstract
        raise NotImplementedError

    def bounds_on(self, x0: float, x1: float) -> tuple[float, float]:  # pragma: no cover
        raise NotImplementedError

    def sup_abs(self) -> float:
        """sup |V| over the whole support."""
        lo, hi = self.bounds_on(self.support_left, self.support_right)
        return max(abs(lo), abs(hi))

    def _check_interval(self, x0: float, x1: float) -> None:
        if not (self.support_left <= x0 < x1 <= self.support_right):
            raise ValidationError(
                "Invalid interval for potential bounds",
                details={
                    "x0": x0,
                    "x1": x1,
                    "support": [self.support_left, self.support_right],
                },
            )

    def _sorted_breakpoints(self, interior: list[float]) -> list[float]:
        points = {self.support_left, self.support_right}
        points.update(x for x in interior if self.support_left <= x <= self.support_right)
        return sorted(points)


class ZeroPotential(_PotentialBase):
    """V identically zero on [support_left, support_right]."""

    kind: Literal["zero"] = "zero"

    @property
    def is_piecewise_constant(self) -> bool:
        return True

    def evaluate(self, x: float) -> float:
        return 0.0

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(xs, dtype=float))

    def breakpoints(self) -> list[float]:
        return self._sorted_breakpoints([])

    def bounds_on(self, x0: float, x1: float) -> tuple[float, float]:
        self._check_interval(x0, x1)
        return 0.0, 0.0

    def segments(self) -> list[tuple[float, float, float]]:
        return [(self.support_left, self.support_right, 0.0)]


class PiecewiseConstantPotential(_PotentialBase):
    """Constant ``values[i]`` on ``[breaks[i], breaks[i+1])``, zero elsewhere."""

    kind: Literal["pc"] = "pc"
    breaks: tuple[float, ...]
    values: tuple[float, ...]

    @model_validator(mode="before")
    @classmethod
    def _default_support(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("breaks") and "support_right" not in data:
            data = {**data, "support_right": float(data["breaks"][-1])}
        return data

    @model_validator(mode="after")
    def _validate_segments(self) -> PiecewiseConstantPotential:
        if len(self.breaks) < 2:
            raise ValueError("breaks must contain at least two points")
        if len(self.values) != len(self.breaks) - 1:
            raise ValueError(
                f"{len(self.breaks) - 1} segments need {len(self.breaks) - 1} values, "
                f"got {len(self.values)}"
            )
        if any(b <= a for a, b in zip(self.breaks, self.breaks[1:], strict=False)):
            raise ValueError("breaks must be strictly ascending")
        if self.breaks[0] < self.support_left or self.breaks[-1] > self.support_right:
            raise ValueError("breaks must lie inside the support")
        return self

    @property
    def is_piecewise_constant(self) -> bool:
        return True

    def evaluate(self, x: float) -> float:
        if not self.in_support(x):
            return 0.0
        i = bisect.bisect_right(self.breaks, x) - 1
        if 0 <= i < len(self.values):
            return float(self.values[i])
        return 0.0

    def breakpoints(self) -> list[float]:
        return self._sorted_breakpoints(list(self.breaks))

    def segments(self) -> list[tuple[float, float, float]]:
        """Constant pieces covering the whole support, zero pieces included."""
        pieces: list[tuple[float, float, float]] = []
        if self.breaks[0] > self.support_left:
            pieces.append((self.support_left, self.breaks[0], 0.0))
        pieces.extend(
            (a, b, float(v))
            for a, b, v in zip(self.breaks, self.breaks[1:], self.values, strict=False)
        )
        if self.breaks[-1] < self.support_right:
            pieces.append((self.breaks[-1], self.support_right, 0.0))
        return pieces

    def bounds_on(self, x0: float, x1: float) -> tuple[float, float]:
        self._check_interval(x0, x1)
        hits = [v for a, b, v in self.segments() if min(b, x1) - max(a, x0) > 0]
        return min(hits), max(hits)


@lru_cache(maxsize=256)
def _spline_for(
    knots: tuple[float, ...], values: tuple[float, ...], ends: tuple[str, str]
) -> CubicSpline:
    conditions = {"natural": (2, 0.0), "clamped": (1, 0.0)}
    return CubicSpline(
        np.asarray(knots, dtype=float),
        np.asarray(values, dtype=float),
        bc_type=(conditions[ends[0]], conditions[ends[1]]),
    )


class SplinePotential(_PotentialBase):
    """Cubic spline through ``(knots[i], values[i])``, zero outside the knot range."""

    kind: Literal["spline"] = "spline"
    knots: tuple[float, ...]
    values: tuple[float, ...]
    end_conditions: tuple[EndCondition, EndCondition] = ("natural", "natural")

    @model_validator(mode="before")
    @classmethod
    def _default_support(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("knots") and "support_right" not in data:
            data = {**data, "support_right": float(data["knots"][-1])}
        return data

    @model_validator(mode="after")
    def _validate_knots(self) -> SplinePotential:
        if len(self.knots) < 3:
            raise ValueError("a spline needs at least three knots")
        if len(self.values) != len(self.knots):
            raise ValueError("knots and values must have the same length")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:], strict=False)):
            raise ValueError("knots must be strictly ascending")
        if self.knots[0] < self.support_left or self.knots[-1] > self.support_right:
            raise ValueError("knots must lie inside the support")
        return self

    @property
    def spline(self) -> CubicSpline:
        return _spline_for(self.knots, self.values, self.end_conditions)

    def _inside(self, x: float) -> bool:
        return self.in_support(x) and self.knots[0] <= x <= self.knots[-1]

    def evaluate(self, x: float) -> float:
        if not self._inside(x):
            return 0.0
        return float(self.spline(x))

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        lo = max(self.knots[0], self.support_left)
        hi = min(self.knots[-1], self.support_right)
        inside = (xs >= lo) & (xs <= hi)
        out = np.zeros_like(xs)
        out[inside] = self.spline(xs[inside])
        return out

    def breakpoints(self) -> list[float]:
        return self._sorted_breakpoints(list(self.knots))

    def bounds_on(self, x0: float, x1: float) -> tuple[float, float]:
        """Envelope of V on [x0, x1] from endpoints, knots and per-piece extrema."""
        self._check_interval(x0, x1)
        candidates = [x0, x1, *np.linspace(x0, x1, BOUNDS_SAMPLES)]
        candidates.extend(k for k in self.knots if x0 < k < x1)
        # roots of the derivative quadratic on every piece
        roots = self.spline.derivative().roots(extrapolate=False)
        candidates.extend(float(r) for r in roots if np.isfinite(r) and x0 < r < x1)
        vals = list(self.evaluate_many(np.asarray(candidates)))
        if x0 < self.knots[0] or x1 > self.knots[-1]:
            vals.append(0.0)
        return float(min(vals)), float(max(vals))


PotentialSpec = Annotated[
    ZeroPotential | PiecewiseConstantPotential | SplinePotential,
    Field(discriminator="kind"),
]

POTENTIAL_ADAPTER: TypeAdapter[PotentialSpec] = TypeAdapter(PotentialSpec)


def parse_potential(data: dict[str, Any]) -> PotentialSpec:
    """Build a potential from its tagged-object form."""
    return POTENTIAL_ADAPTER.validate_python(data)


def check_bump(p: PotentialSpec, A: float, eps: float | None = None) -> BumpCheck:
    """Check V > 0 on (0, A], using the envelope of ``bounds_on`` over [eps, A].

    ``eps`` defaults to A/1024 so that a potential vanishing continuously at
    the support endpoint can still satisfy the condition.
    """
    if not 0 < A <= p.support_right:
        raise ValidationError(
            "Bump width must lie in (0, B]", details={"A": A, "B": p.support_right}
        )
    lo_x = A * BUMP_EPS_FRACTION if eps is None else eps
    lo_x = max(lo_x, 0.0)
    inf_v, _ = p.bounds_on(lo_x, A)
    return BumpCheck(holds=inf_v > 0, margin=inf_v)


def reflect(p: PotentialSpec) -> PotentialSpec:
    """The potential x -> V(-x)."""
    common = {
        "support_left": -p.support_right,
        "support_right": -p.support_left,
        "bump_width": p.bump_width,
    }
    if isinstance(p, ZeroPotential):
        return ZeroPotential(**common)
    if isinstance(p, PiecewiseConstantPotential):
        return PiecewiseConstantPotential(
            breaks=tuple(-b for b in reversed(p.breaks)),
            values=tuple(reversed(p.values)),
            **common,
        )
    return SplinePotential(
        knots=tuple(-k for k in reversed(p.knots)),
        values=tuple(reversed(p.values)),
        end_conditions=(p.end_conditions[1], p.end_conditions[0]),
        **common,
    )


def symmetry_defect(p: PotentialSpec) -> tuple[float, float]:
    """Largest |V(x) - V(-x)| over a grid avoiding breakpoints; returns (defect, x)."""
    B = max(abs(p.support_left), abs(p.support_right))
    xs = (np.arange(SYMMETRY_SAMPLES) + 0.5) / SYMMETRY_SAMPLES * B
    cuts = np.asarray([abs(b) for b in p.breakpoints()])
    keep = np.min(np.abs(xs[:, None] - cuts[None, :]), axis=1) > 1e-12
    xs = xs[keep]
    defect = np.abs(p.evaluate_many(xs) - p.evaluate_many(-xs))
    i = int(np.argmax(defect))
    return float(defect[i]), float(xs[i])


def even_halfline(whole_line: PotentialSpec, tol: float = SYMMETRY_TOL) -> PotentialSpec:
    """Half-line potential of an even whole-line potential supported in [-B, B].

    Orientation: x_half = B - |x_whole|, so the whole-line support edge sits at
    x = 0 (free region to the left) and the symmetry centre becomes x = B,
    where the Neumann or Dirichlet condition is imposed.
    """
    B = whole_line.support_right
    if abs(whole_line.support_left + B) > tol:
        raise SymmetryError(
            "Whole-line support must be symmetric about 0",
            details={"support": [whole_line.support_left, B], "max_defect": float("inf")},
        )
    defect, at = symmetry_defect(whole_line)
    if defect > tol:
        raise SymmetryError(
            "Potential is not even within tolerance",
            details={"max_defect": defect, "x": at, "tol": tol},
        )

    common = {"support_right": B, "bump_width": whole_line.bump_width}
    if isinstance(whole_line, ZeroPotential):
        return ZeroPotential(**common)

    if isinstance(whole_line, PiecewiseConstantPotential):
        cuts = sorted({b + B for b in whole_line.breaks if -B <= b < 0} | {B})
        if len(cuts) < 2:
            return ZeroPotential(**common)
        values = tuple(
            whole_line.evaluate(0.5 * (a + b) - B) for a, b in zip(cuts, cuts[1:], strict=False)
        )
        return PiecewiseConstantPotential(breaks=tuple(cuts), values=values, **common)

    negative = [k for k in whole_line.knots if k < 0]
    knots = tuple(k + B for k in negative) + (B,)
    values = tuple(whole_line.evaluate(k) for k in negative) + (whole_line.evaluate(0.0),)
    return SplinePotential(
        knots=knots,
        values=values,
        end_conditions=(whole_line.end_conditions[0], "clamped"),
        **common,
    )


# -----------------------------------------------------------------------------
# Built-in potentials
# -----------------------------------------------------------------------------

FIGURE1_KNOTS = (-2.0, -1.5, -1.0, 0.0, 1.0, 1.5, 2.0)
FIGURE1_LEFT_VALUES = (0.0, -0.4, -1.0, -0.2, -1.0, -0.4, 0.0)
FIGURE1_RIGHT_VALUES = (0.0, 0.2, -1.0, -0.2, -1.0, 0.2, 0.0)


def figure1_left_whole() -> SplinePotential:
    """Even spline without the bump condition (negative next to the support edge)."""
    return SplinePotential(
        knots=FIGURE1_KNOTS, values=FIGURE1_LEFT_VALUES, support_left=-2.0, support_right=2.0
    )


def figure1_right_whole() -> SplinePotential:
    """Even spline with a small positive bump at the support edge."""
    return SplinePotential(
        knots=FIGURE1_KNOTS,
        values=FIGURE1_RIGHT_VALUES,
        support_left=-2.0,
        support_right=2.0,
        bump_width=0.5,
    )


def bump_well(
    bump: float = 1.0, width: float = 0.4, well: float = -3.0, B: float = 2.0
) -> PiecewiseConstantPotential:
    """Positive step on [0, width] followed by a well up to B."""
    return PiecewiseConstantPotential(
        breaks=(0.0, width, B), values=(bump, well), support_right=B, bump_width=width
    )


def flat_bump(
    V0: float = 1.0, A: float = 0.5, gap: float = 0.2, well: float = -3.0, B: float = 2.0
) -> PiecewiseConstantPotential:
    """V0 on [0, A], zero on (A, A + gap), a well beyond."""
    return PiecewiseConstantPotential(
        breaks=(0.0, A, A + gap, B), values=(V0, 0.0, well), support_right=B, bump_width=A
    )


def positive_barrier(height: float = 1.0, B: float = 1.0) -> PiecewiseConstantPotential:
    return PiecewiseConstantPotential(
        breaks=(0.0, B), values=(height,), support_right=B, bump_width=B
    )


BUILTIN_POTENTIALS = {
    "figure1_left": lambda: even_halfline(figure1_left_whole()),
    "figure1_right": lambda: even_halfline(figure1_right_whole()),
    "bump_well": bump_well,
    "flat_bump": flat_bump,
    "positive_barrier": positive_barrier,
}

