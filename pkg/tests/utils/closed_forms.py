"""Closed-form solutions used as oracles in tests.

Constant potential V0 on the interval, q = V0 + k^2 = mu^2 > 0:
    Neumann solution     u = cosh(mu x / h)
    Outgoing solutions   u = cosh(mu x / h) +/- (k / mu) sinh(mu x / h)
"""

from __future__ import annotations

import math


def free_neumann_angle(k: float, h: float, x: float) -> float:
    """Angle at x of u = cosh(kx/h) started with theta = 0 at x = 0."""
    return math.atan(k * math.tanh(k * x / h))


def free_neumann_log_length(k: float, h: float, x: float) -> float:
    z = k * x / h
    return 0.5 * math.log(math.cosh(z) ** 2 + (k * math.sinh(z)) ** 2)


def free_neumann_mass(k: float, h: float, x: float) -> float:
    """J(x) = (integral of cosh^2(ks/h) over [0, x]) / L(x)^2."""
    integral = x / 2.0 + h * math.sinh(2.0 * k * x / h) / (4.0 * k)
    return integral / math.exp(2.0 * free_neumann_log_length(k, h, x))


def free_right_angle(k: float, h: float, B: float, x: float) -> float:
    """Angle at x of u = cosh(k(x - B)/h), Neumann at x = B."""
    return -math.atan(k * math.tanh(k * (B - x) / h))


def free_neumann_mismatch(k: float, h: float, B: float, x: float) -> float:
    return 2.0 * (free_neumann_angle(k, h, x) - free_right_angle(k, h, B, x))


def constant_neumann_angle(V0: float, k: float, h: float, x: float) -> float:
    mu = math.sqrt(V0 + k * k)
    return math.atan(mu * math.tanh(mu * x / h))


def constant_outgoing_angle(V0: float, k: float, h: float, x: float, sign: int) -> float:
    """Angle of the solution started at theta = sign * arctan(k); needs V0 > 0."""
    mu = math.sqrt(V0 + k * k)
    return math.atan(mu * math.tanh(mu * x / h + math.atanh(sign * k / mu)))


def constant_closeness(V0: float, k: float, h: float, A: float) -> float:
    neumann = constant_neumann_angle(V0, k, h, A)
    return max(
        abs(math.remainder(2.0 * (neumann - constant_outgoing_angle(V0, k, h, A, s)), 2 * math.pi))
        for s in (1, -1)
    )
