"""Shooting for Neumann eigenvalues, bound states and antibound states.

For a state kind the left solution (u0, u+ or u-) is propagated forward from
x = 0 and the right solution u1 backward from x = B to a matching point. The
lifted mismatch

    F(k) = 2 (theta_left(k) - theta_right(k))

vanishes modulo 2 pi exactly at the states of that kind. ``find_states``
samples F on an adaptive grid and bisects every crossing of every level
2 pi m.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect

from app.core.errors import RefinementBudgetError, ValidationError
from app.core.logging import get_logger
from app.domain.models.phase import (
    RIGHT_BOUNDARIES,
    BoundaryKind,
    PhaseEngine,
    PhasePoint,
    PhaseProblem,
    StateKind,
    StateRecord,
)
from app.domain.models.potential import PotentialSpec
from app.services.prufer import angle_derivative, propagate

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
MAX_SAMPLE_JUMP = math.pi / 2
DEDUP_FACTOR = 10.0
DEFAULT_ODE_TOL = 1e-10
DEFAULT_ROOT_TOL = 1e-11
DEFAULT_MAX_SAMPLES = 20000


def default_x_match(p: PotentialSpec) -> float:
    """A when a bump width is declared, else B/2."""
    return p.bump_width if p.bump_width is not None else 0.5 * p.support_right


def _require_halfline(p: PotentialSpec) -> None:
    if p.support_left != 0.0:
        raise ValidationError(
            "Shooting needs a half-line potential on [0, B]; "
            "use even_halfline for whole-line input",
            details={"support_left": p.support_left},
        )


def _resolve_x_match(p: PotentialSpec, x_match: float | None) -> float:
    _require_halfline(p)
    x = default_x_match(p) if x_match is None else x_match
    if not 0.0 <= x <= p.support_right:
        raise ValidationError(
            "Matching point must lie in [0, B]", details={"x_match": x, "B": p.support_right}
        )
    return x


def theta_at(
    p: PotentialSpec,
    k: float,
    h: float,
    bc: BoundaryKind,
    x_match: float | None = None,
    tol: float = DEFAULT_ODE_TOL,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> PhasePoint:
    """PhasePoint at ``x_match`` of the solution fixed by ``bc``.

    Left kinds start at x = 0 and run forward, right kinds start at x = B and
    run backward; J is accumulated from the start.
    """
    x = _resolve_x_match(p, x_match)
    problem = PhaseProblem(potential=p, k=k, h=h, tol=tol)
    return propagate(problem, bc.start_point(k, p.support_right), x, engine)


@lru_cache(maxsize=4096)
def _right_phase(
    p: PotentialSpec,
    k: float,
    h: float,
    bc: BoundaryKind,
    x_match: float,
    tol: float,
    engine: PhaseEngine,
) -> tuple[PhasePoint, float]:
    problem = PhaseProblem(potential=p, k=k, h=h, tol=tol)
    start = bc.start_point(k, p.support_right)
    end = propagate(problem, start, x_match, engine)
    return end, angle_derivative(problem, start, end)


def _check_right(right_bc: BoundaryKind) -> None:
    if right_bc not in RIGHT_BOUNDARIES:
        raise ValidationError(
            "Right boundary must be neumann_right or dirichlet_right",
            details={"right_bc": right_bc.value},
        )


def mismatch_with_slope(
    p: PotentialSpec,
    k: float,
    h: float,
    kind: StateKind,
    x_match: float | None = None,
    tol: float = DEFAULT_ODE_TOL,
    right_bc: BoundaryKind = BoundaryKind.NEUMANN_RIGHT,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> tuple[float, float]:
    """(F(k), dF/dk) for the given state kind."""
    _check_right(right_bc)
    x = _resolve_x_match(p, x_match)
    left_bc = kind.left_boundary
    problem = PhaseProblem(potential=p, k=k, h=h, tol=tol)
    start = left_bc.start_point(k, p.support_right)
    left = propagate(problem, start, x, engine)
    d_left = angle_derivative(problem, start, left, left_bc.initial_angle_dk(k))
    right, d_right = _right_phase(p, k, h, right_bc, x, tol, engine)
    return 2.0 * (left.theta - right.theta), 2.0 * (d_left - d_right)


def mismatch(
    p: PotentialSpec,
    k: float,
    h: float,
    kind: StateKind,
    x_match: float | None = None,
    tol: float = DEFAULT_ODE_TOL,
    right_bc: BoundaryKind = BoundaryKind.NEUMANN_RIGHT,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> float:
    """Lifted F(k) = 2 (theta_left - theta_right) at the matching point."""
    _check_right(right_bc)
    x = _resolve_x_match(p, x_match)
    left = theta_at(p, k, h, kind.left_boundary, x, tol, engine)
    right, _ = _right_phase(p, k, h, right_bc, x, tol, engine)
    return 2.0 * (left.theta - right.theta)


def mismatch_slope(
    p: PotentialSpec,
    k: float,
    h: float,
    x_match: float | None = None,
    tol: float = DEFAULT_ODE_TOL,
    right_bc: BoundaryKind = BoundaryKind.NEUMANN_RIGHT,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> float:
    """2 (Theta0'(k) - Theta1'(k)) for the Neumann mismatch."""
    _, slope = mismatch_with_slope(p, k, h, StateKind.NEUMANN, x_match, tol, right_bc, engine)
    return slope


def _scan(
    f, k_lo: float, k_hi: float, grid_n: int, max_samples: int, min_width: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample f until consecutive values differ by less than pi/2.

    Intervals narrower than ``min_width`` are not refined further; they come back
    flagged in the third array so the caller can record their crossings directly.
    """
    ks = list(np.linspace(k_lo, k_hi, grid_n))
    fs = [f(k) for k in ks]
    while True:
        jumps = np.abs(np.diff(fs))
        widths = np.diff(ks)
        steep = jumps >= MAX_SAMPLE_JUMP
        bad = np.flatnonzero(steep & (widths >= min_width))
        if bad.size == 0:
            return np.asarray(ks), np.asarray(fs), steep
        if len(ks) + bad.size > max_samples:
            i = int(bad[0])
            raise RefinementBudgetError(
                "Lifted mismatch could not be resolved on the sampling grid",
                details={"k_lo": float(ks[i]), "k_hi": float(ks[i + 1]), "samples": len(ks)},
            )
        # insert midpoints from the right so earlier indices stay valid
        for j in reversed(bad.tolist()):
            mid = 0.5 * (ks[j] + ks[j + 1])
            ks.insert(j + 1, mid)
            fs.insert(j + 1, f(mid))


def find_states(
    p: PotentialSpec,
    h: float,
    kind: StateKind,
    k_lo: float,
    k_hi: float,
    grid_n: int = 64,
    tol: float = DEFAULT_ROOT_TOL,
    *,
    x_match: float | None = None,
    right_bc: BoundaryKind = BoundaryKind.NEUMANN_RIGHT,
    ode_tol: float = DEFAULT_ODE_TOL,
    engine: PhaseEngine = PhaseEngine.ODE,
    max_samples: int = DEFAULT_MAX_SAMPLES,
) -> list[StateRecord]:
    """Every state of ``kind`` in [k_lo, k_hi], sorted by k.

    Roots are bisected to |dk| <= tol; records closer than 10 tol are merged.
    Where F still jumps by pi/2 or more across a bracket narrower than tol, each
    crossed level is recorded at the bracket midpoint with the observed values.
    ``residual`` is |F(k) - 2 pi m| in units of F, so it is bounded by about
    |dF/dk| tol rather than by tol itself.
    """
    if not 0 < k_lo < k_hi:
        raise ValidationError(
            "Band must satisfy 0 < k_lo < k_hi",
            details={"field": "band", "k_lo": k_lo, "k_hi": k_hi},
        )
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2", details={"field": "grid_n"})
    if not h > 0:
        raise ValidationError("h must be positive", details={"field": "h", "h": h})
    _check_right(right_bc)
    x = _resolve_x_match(p, x_match)
    started = time.perf_counter()

    def f(k: float) -> float:
        return mismatch(p, float(k), h, kind, x, ode_tol, right_bc, engine)

    ks, fs, steep = _scan(f, k_lo, k_hi, grid_n, max_samples, min_width=tol)

    # (k, winding, residual, slope); residual and slope are None for bisected roots
    roots: list[tuple[float, int, float | None, float | None]] = []
    last = len(ks) - 2
    for i in range(len(ks) - 1):
        f0, f1 = fs[i], fs[i + 1]
        m_lo = math.ceil(min(f0, f1) / TWO_PI)
        m_hi = math.floor(max(f0, f1) / TWO_PI)
        for m in range(m_lo, m_hi + 1):
            level = TWO_PI * m
            g0, g1 = f0 - level, f1 - level
            if g0 == 0.0:
                roots.append((float(ks[i]), m, None, None))
            elif g1 == 0.0:
                if i == last:
                    roots.append((float(ks[i + 1]), m, None, None))
            elif steep[i]:
                width = float(ks[i + 1] - ks[i])
                roots.append(
                    (
                        float(0.5 * (ks[i] + ks[i + 1])),
                        m,
                        float(min(abs(g0), abs(g1))),
                        float((f1 - f0) / width),
                    )
                )
                logger.debug("steep_crossing", kind=kind.value, h=h, k=roots[-1][0], width=width)
            else:
                k_root = bisect(lambda k, lvl=level: f(k) - lvl, ks[i], ks[i + 1], xtol=tol)
                roots.append((float(k_root), m, None, None))

    records: list[StateRecord] = []
    for k_root, m, residual, slope in sorted(roots, key=lambda r: (r[0], r[1])):
        if records and k_root - records[-1].k <= DEDUP_FACTOR * tol:
            continue
        if residual is None:
            value, slope = mismatch_with_slope(p, k_root, h, kind, x, ode_tol, right_bc, engine)
            residual = abs(value - TWO_PI * m)
        records.append(
            StateRecord(
                kind=kind,
                k=k_root,
                h=h,
                winding=m,
                residual=residual,
                dmismatch_dk=slope,
            )
        )

    logger.debug(
        "states_located",
        kind=kind.value,
        h=h,
        n_states=len(records),
        n_samples=len(ks),
        elapsed_s=round(time.perf_counter() - started, 4),
    )
    return records


def angle_closeness(
    p: PotentialSpec,
    k: float,
    h: float,
    A: float | None = None,
    tol: float = DEFAULT_ODE_TOL,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> float:
    """max over +/- of |2 (Theta0 - Theta+-)| reduced to (-pi, pi], taken at x = A.

    Small only when V > 0 on (0, A]; A defaults to the declared bump width.
    """
    x = A if A is not None else p.bump_width
    if x is None:
        raise ValidationError("angle_closeness needs A or a potential with bump_width")
    neumann = theta_at(p, k, h, BoundaryKind.NEUMANN_LEFT, x, tol, engine).theta
    values = [
        abs(math.remainder(2.0 * (neumann - theta_at(p, k, h, bc, x, tol, engine).theta), TWO_PI))
        for bc in (BoundaryKind.OUTGOING_PLUS, BoundaryKind.OUTGOING_MINUS)
    ]
    return max(values)


def endpoint_phase(
    p: PotentialSpec,
    k: float,
    h: float,
    kind: StateKind = StateKind.BOUND,
    tol: float = DEFAULT_ODE_TOL,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> tuple[float, float]:
    """Angle of the left solution at x = B and its k-derivative.

    With a Neumann right end, states of ``kind`` are the zeros of 2 Phi mod 2 pi.
    """
    _require_halfline(p)
    bc = kind.left_boundary
    problem = PhaseProblem(potential=p, k=k, h=h, tol=tol)
    start = bc.start_point(k, p.support_right)
    end = propagate(problem, start, p.support_right, engine)
    return end.theta, angle_derivative(problem, start, end, bc.initial_angle_dk(k))


def clear_cache() -> None:
    _right_phase.cache_clear()
