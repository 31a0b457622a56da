"""Prufer phase integration for (P(h) + k^2) u = 0 with P(h) = -h^2 d^2/dx^2 + V.

Solutions are carried as (theta, log L, J) where (u, h u') = L (cos theta,
sin theta) and J is the mass of u accumulated since the start of the
integration divided by L^2. Two propagators produce the same PhasePoints:

- ``integrate_phase``: adaptive DOP853 integration of the phase ODE, split at
  potential breakpoints (any potential).
- ``propagate_oracle``: exact transfer matrices with per-substep
  renormalization (piecewise-constant potentials only).

The module also hosts the runtime checks of the Wronskian identity, cone
invariance, the growth bound and the k-derivative formula.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from app.core.errors import HypothesisError, IntegrationError, ValidationError
from app.core.logging import get_logger
from app.domain.models.phase import PhaseEngine, PhasePoint, PhaseProblem
from app.domain.models.potential import PotentialSpec
from app.schemas.reports import MAX_REPORTED_VIOLATIONS, CheckReport, WronskianDrift

logger = get_logger(__name__)

RTOL_FLOOR = 1e-13
HYPOTHESIS_SLACK = 1e-12
DEFAULT_SLACK = 1e-9
SERIES_CUTOFF = 1e-2
MAX_EXPONENT = 700.0


def _direction(x_from: float, x_to: float) -> int:
    return 1 if x_to >= x_from else -1


def _rhs_values(
    q: float, h: float, theta: float, mass: float, direction: int
) -> tuple[float, float, float]:
    c = math.cos(theta)
    s = math.sin(theta)
    dlog = (1.0 + q) * s * c / h
    return (q * c * c - s * s) / h, dlog, direction * c * c - 2.0 * mass * dlog


def phase_rhs(
    problem: PhaseProblem, x: float, theta: float, J: float, direction: int = 1
) -> tuple[float, float, float]:
    """Right-hand side (dtheta/dx, dlogL/dx, dJ/dx) of the phase system.

    ``direction`` is -1 for backward integration, where J is the mass of u
    over [x, x_start] and therefore stays nonnegative.
    """
    q = problem.potential.evaluate(x) + problem.k**2
    return _rhs_values(q, problem.h, theta, J, direction)


def _travel_segments(p: PotentialSpec, x_from: float, x_to: float) -> list[tuple[float, float]]:
    lo, hi = min(x_from, x_to), max(x_from, x_to)
    cuts = [b for b in p.breakpoints() if lo < b < hi]
    if x_to < x_from:
        cuts.reverse()
    points = [x_from, *cuts, x_to]
    return list(zip(points, points[1:], strict=False))


def _check_domain(p: PotentialSpec, *xs: float) -> None:
    for x in xs:
        if not (p.support_left <= x <= p.support_right):
            raise ValidationError(
                "Position outside the computational domain",
                details={"x": x, "domain": [p.support_left, p.support_right]},
            )


def _integrate(
    problem: PhaseProblem, start: PhasePoint, x_target: float, keep_trace: bool
) -> tuple[PhasePoint, list[PhasePoint]]:
    p = problem.potential
    _check_domain(p, start.x, x_target)
    trace = [start] if keep_trace else []
    if x_target == start.x:
        return start, trace

    direction = _direction(start.x, x_target)
    k2, h = problem.k**2, problem.h
    rtol = max(problem.tol / 100.0, RTOL_FLOOR)
    max_step = problem.max_step()
    point = start

    for a, b in _travel_segments(p, start.x, x_target):
        lo, hi = min(a, b), max(a, b)
        inner_hi = math.nextafter(hi, lo)

        def rhs(x: float, y: np.ndarray, lo: float = lo, inner_hi: float = inner_hi) -> list:
            # one-sided value of V on this segment
            q = p.evaluate(min(max(x, lo), inner_hi)) + k2
            return list(_rhs_values(q, h, y[0], y[2], direction))

        sol = solve_ivp(
            rhs,
            (a, b),
            point.state(),
            method="DOP853",
            rtol=rtol,
            atol=problem.tol,
            max_step=max_step,
        )
        if sol.status != 0:
            last_x = float(sol.t[-1]) if sol.t.size else a
            logger.warning(
                "phase_integration_failed",
                k=problem.k,
                h=problem.h,
                last_x=last_x,
                message=sol.message,
            )
            raise IntegrationError(
                f"Phase integration failed: {sol.message}",
                details={"last_x": last_x, "k": problem.k, "h": problem.h},
            )
        if keep_trace:
            trace.extend(point.moved(x, y) for x, y in zip(sol.t[1:], sol.y.T[1:], strict=False))
        point = point.moved(b, sol.y[:, -1])

    return point, trace


def integrate_phase(problem: PhaseProblem, start: PhasePoint, x_target: float) -> PhasePoint:
    """Integrate the phase system from ``start.x`` to ``x_target`` (either direction)."""
    end, _ = _integrate(problem, start, x_target, keep_trace=False)
    return end


def trace_phase(problem: PhaseProblem, start: PhasePoint, x_target: float) -> list[PhasePoint]:
    """Every accepted integrator step from ``start`` to ``x_target``, both ends included."""
    _, trace = _integrate(problem, start, x_target, keep_trace=True)
    return trace


def scaled_wronskian(a: PhasePoint, b: PhasePoint) -> float:
    """sin(theta_b - theta_a); the Wronskian W(u_a, u_b) is exp(logL_a + logL_b) times this."""
    if a.x != b.x:
        raise ValidationError(
            "Wronskian needs both solutions at the same position", details={"xa": a.x, "xb": b.x}
        )
    return math.sin(b.theta - a.theta)


# -----------------------------------------------------------------------------
# Transfer-matrix oracle
# -----------------------------------------------------------------------------


def _transfer(q: float, h: float, dx: float) -> np.ndarray:
    if q > 0:
        mu = math.sqrt(q)
        z = mu * dx / h
        return np.array([[math.cosh(z), math.sinh(z) / mu], [mu * math.sinh(z), math.cosh(z)]])
    if q < 0:
        omega = math.sqrt(-q)
        phi = omega * dx / h
        return np.array(
            [[math.cos(phi), math.sin(phi) / omega], [-omega * math.sin(phi), math.cos(phi)]]
        )
    return np.array([[1.0, dx / h], [0.0, 1.0]])


def transfer_matrix_constant(V0: float, k: float, h: float, dx: float) -> np.ndarray:
    """M with (u, h u')(x + dx) = M (u, h u')(x) for constant V = V0.

    A negative ``dx`` propagates backward.
    """
    if h <= 0:
        raise ValidationError("h must be positive", details={"h": h})
    return _transfer(V0 + k * k, h, dx)


def _sinh_excess(y: float) -> float:
    """sinh(y) - y."""
    if abs(y) < SERIES_CUTOFF:
        y3 = y * y * y
        return y3 / 6.0 + y3 * y * y / 120.0 + y3 * y3 * y / 5040.0
    return math.sinh(y) - y


def _sin_deficit(y: float) -> float:
    """y - sin(y)."""
    if abs(y) < SERIES_CUTOFF:
        y3 = y * y * y
        return y3 / 6.0 - y3 * y * y / 120.0 + y3 * y3 * y / 5040.0
    return y - math.sin(y)


def _substep_mass(q: float, h: float, dx: float, c: float, s: float) -> float:
    """Signed integral over [0, dx] of u^2 for the unit start vector (c, s)."""
    if q > 0:
        mu = math.sqrt(q)
        alpha = mu / h
        z = alpha * dx
        int_cc = dx / 2.0 + math.sinh(2.0 * z) / (4.0 * alpha)
        int_cs = math.sinh(z) ** 2 / (2.0 * alpha * mu)
        int_ss = _sinh_excess(2.0 * z) / (4.0 * alpha * q)
    elif q < 0:
        omega = math.sqrt(-q)
        beta = omega / h
        y = 2.0 * beta * dx
        int_cc = dx / 2.0 + math.sin(y) / (4.0 * beta)
        int_cs = math.sin(beta * dx) ** 2 / (2.0 * beta * omega)
        int_ss = _sin_deficit(y) / (4.0 * beta * -q)
    else:
        int_cc = dx
        int_cs = dx * dx / (2.0 * h)
        int_ss = dx**3 / (3.0 * h * h)
    return c * c * int_cc + 2.0 * c * s * int_cs + s * s * int_ss


def _wrap(angle: float) -> float:
    return math.remainder(angle, 2.0 * math.pi)


def propagate_oracle(
    p: PotentialSpec, k: float, h: float, start: PhasePoint, x_target: float
) -> PhasePoint:
    """Exact propagation through a piecewise-constant potential.

    Every segment is cut into substeps short enough that the angle moves by
    less than pi, the state vector is renormalized after each substep and
    the log-length accumulated, so small h never overflows.
    """
    if not p.is_piecewise_constant:
        raise ValidationError(
            "Transfer-matrix propagation needs a piecewise-constant potential",
            details={"kind": p.kind},
        )
    _check_domain(p, start.x, x_target)
    if x_target == start.x:
        return start

    direction = _direction(start.x, x_target)
    k2 = k * k
    theta, log_length, mass = start.theta, start.log_length, start.mass_scaled

    for a, b in _travel_segments(p, start.x, x_target):
        q = p.evaluate(0.5 * (a + b)) + k2
        span = b - a
        n_sub = max(1, math.ceil(abs(span) * max(1.0, abs(q)) / h))
        dx = span / n_sub
        M = _transfer(q, h, dx)
        for _ in range(n_sub):
            c, s = math.cos(theta), math.sin(theta)
            w0 = M[0, 0] * c + M[0, 1] * s
            w1 = M[1, 0] * c + M[1, 1] * s
            norm2 = w0 * w0 + w1 * w1
            gained = direction * _substep_mass(q, h, dx, c, s)
            theta += _wrap(math.atan2(w1, w0) - theta)
            log_length += 0.5 * math.log(norm2)
            mass = (mass + gained) / norm2

    return PhasePoint(x=float(x_target), theta=theta, log_length=log_length, mass_scaled=mass)


def propagate(
    problem: PhaseProblem,
    start: PhasePoint,
    x_target: float,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> PhasePoint:
    if engine is PhaseEngine.TRANSFER:
        return propagate_oracle(problem.potential, problem.k, problem.h, start, x_target)
    return integrate_phase(problem, start, x_target)


# -----------------------------------------------------------------------------
# k-derivative of the angle
# -----------------------------------------------------------------------------


def angle_derivative(
    problem: PhaseProblem, start: PhasePoint, end: PhasePoint, initial_angle_dk: float = 0.0
) -> float:
    """d(theta at end.x)/dk from an end point propagated out of ``start`` with J = 0.

    The mass term is 2kJ/h forward and -2kJ/h backward; a k-dependent start
    angle contributes its derivative scaled by (L_start / L_end)^2.
    """
    direction = _direction(start.x, end.x)
    value = direction * 2.0 * problem.k * end.mass_scaled / problem.h
    if initial_angle_dk:
        value += initial_angle_dk * math.exp(2.0 * (start.log_length - end.log_length))
    return value


def dtheta_dk(
    problem: PhaseProblem,
    start: PhasePoint,
    x_target: float,
    initial_angle_dk: float = 0.0,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> float:
    """Derivative in k of the angle at ``x_target`` of the solution with data ``start``."""
    origin = PhasePoint(x=start.x, theta=start.theta, log_length=start.log_length)
    end = propagate(problem, origin, x_target, engine)
    return angle_derivative(problem, origin, end, initial_angle_dk)


# -----------------------------------------------------------------------------
# Runtime property checks
# -----------------------------------------------------------------------------


def _violations(xs: np.ndarray, margins: np.ndarray, slack: float) -> list[dict[str, float]]:
    bad = np.flatnonzero(margins < -slack)[:MAX_REPORTED_VIOLATIONS]
    return [{"x": float(xs[i]), "margin": float(margins[i])} for i in bad]


def check_growth_bound(
    problem: PhaseProblem, trace: list[PhasePoint], slack: float = DEFAULT_SLACK
) -> CheckReport:
    """Check |log L(x1) - log L(x0)| <= (1 + M)|x1 - x0| / (2h) over all trace pairs.

    M bounds |V + k^2| over the traced interval.
    """
    if len(trace) < 2:
        return CheckReport(name="growth", passed=True, worst_margin=0.0, n_checked=0)
    xs = np.array([pt.x for pt in trace])
    logs = np.array([pt.log_length for pt in trace])
    inf_v, sup_v = problem.potential.bounds_on(float(xs.min()), float(xs.max()))
    k2 = problem.k**2
    M = max(abs(inf_v + k2), abs(sup_v + k2))

    dx = np.abs(xs[:, None] - xs[None, :])
    dlog = np.abs(logs[:, None] - logs[None, :])
    margins = (1.0 + M) * dx / (2.0 * problem.h) - dlog
    iu = np.triu_indices(len(trace), k=1)
    pair_margins = margins[iu]
    worst = float(pair_margins.min())
    bad = np.flatnonzero(pair_margins < -slack)[:MAX_REPORTED_VIOLATIONS]
    violations = [
        {"x0": float(xs[iu[0][i]]), "x1": float(xs[iu[1][i]]), "margin": float(pair_margins[i])}
        for i in bad
    ]
    return CheckReport(
        name="growth",
        passed=worst >= -slack,
        worst_margin=worst,
        n_checked=int(pair_margins.size),
        violations=violations,
    )


def check_cone_invariance(
    problem: PhaseProblem,
    x0: float,
    x1: float,
    start: PhasePoint,
    slack: float = DEFAULT_SLACK,
) -> CheckReport:
    """Check that W+ = W(u, e^{bx/h}) and W- = W(e^{-ax/h}, u) increase on [x0, x1].

    a^2 and b^2 are inf and sup of V + k^2 on [x0, x1]. Also checks
    u >= L / sqrt(1 + b^2). Raises HypothesisError when a^2 <= 0 or either
    Wronskian is negative at x0.
    """
    if start.x != x0 or not x0 < x1:
        raise ValidationError(
            "Cone check needs a start point at x0 < x1",
            details={"x0": x0, "x1": x1, "start_x": start.x},
        )
    inf_v, sup_v = problem.potential.bounds_on(x0, x1)
    k2 = problem.k**2
    a2, b2 = inf_v + k2, sup_v + k2
    if a2 <= 0:
        raise HypothesisError(
            "Cone invariance needs V + k^2 > 0 on the interval",
            details={"x0": x0, "x1": x1, "inf": a2},
        )
    a, b = math.sqrt(a2), math.sqrt(b2)
    c0, s0 = math.cos(start.theta), math.sin(start.theta)
    if b * c0 - s0 < -HYPOTHESIS_SLACK or a * c0 + s0 < -HYPOTHESIS_SLACK:
        raise HypothesisError(
            "Initial data lies outside the invariant cone",
            details={"theta": start.theta, "w_plus": b * c0 - s0, "w_minus": a * c0 + s0},
        )

    trace = trace_phase(problem, start, x1)
    xs = np.array([pt.x for pt in trace])
    thetas = np.array([pt.theta for pt in trace])
    logs = np.array([pt.log_length for pt in trace])
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)

    def increments(exponent: np.ndarray, shape: np.ndarray) -> np.ndarray:
        top = np.maximum(exponent[:-1], exponent[1:])
        return np.exp(exponent[1:] - top) * shape[1:] - np.exp(exponent[:-1] - top) * shape[:-1]

    plus = increments(logs + b * xs / problem.h, b * cos_t - sin_t)
    minus = increments(logs - a * xs / problem.h, a * cos_t + sin_t)
    cone = cos_t - 1.0 / math.sqrt(1.0 + b2)

    worst = float(min(plus.min(), minus.min(), cone.min()))
    violations = (
        _violations(xs[1:], plus, slack)
        + _violations(xs[1:], minus, slack)
        + _violations(xs, cone, slack)
    )[:MAX_REPORTED_VIOLATIONS]
    return CheckReport(
        name="cone",
        passed=worst >= -slack,
        worst_margin=worst,
        n_checked=int(plus.size + minus.size + cone.size),
        violations=violations,
    )


def wronskian_drift(
    problem: PhaseProblem,
    theta_a: float,
    theta_b: float,
    n_points: int = 33,
    engine: PhaseEngine = PhaseEngine.ODE,
) -> WronskianDrift:
    """Propagate two solutions from x = 0 and measure how far their Wronskian moves.

    Both the relative drift of exp(logL_a + logL_b) sin(theta_b - theta_a)
    and the scale-free defect |sin(theta_b - theta_a) - W0 exp(-(logL_a + logL_b))|
    are returned; the latter stays well conditioned when L grows like e^{1/h}.
    """
    B = problem.B
    checkpoints = np.linspace(0.0, B, max(n_points, 2))
    a = PhasePoint(x=0.0, theta=theta_a)
    b = PhasePoint(x=0.0, theta=theta_b)
    w0 = scaled_wronskian(a, b)
    rel_drift = 0.0
    defect = 0.0
    for x in checkpoints[1:]:
        a = propagate(problem, a, float(x), engine)
        b = propagate(problem, b, float(x), engine)
        total = a.log_length + b.log_length
        sine = scaled_wronskian(a, b)
        defect = max(defect, abs(sine - w0 * math.exp(-total)))
        if w0 != 0.0:
            drift = abs(math.exp(total) * sine - w0) if total < MAX_EXPONENT else math.inf
            rel_drift = max(rel_drift, drift / abs(w0))
    return WronskianDrift(
        relative_drift=rel_drift,
        scale_free_defect=defect,
        n_points=len(checkpoints),
        initial_wronskian=w0,
    )
