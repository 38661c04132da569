"""Explicit ODE steppers used by the dynamics module.

Two methods are provided:

* ``rk4`` — classical fixed-step Runge-Kutta.  The number of steps depends
  only on the time span, so the numerical flow is a smooth (for linear
  fields: exactly linear) function of the initial condition.  This is the
  method of choice whenever trajectories are differenced against each
  other, as in the no-signaling audits.
* ``rkf45`` — Fehlberg 4(5) embedded pair with adaptive step control.  The
  higher-order solution is propagated; the embedded difference drives the
  step size.  Default error weights are ``atol + rtol * |y|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationFailureError

__all__ = ["IntegratorOptions", "DEFAULT_OPTIONS", "solve"]


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "rkf45"
    step: float = 0.01          # fixed step for rk4; initial guess for rkf45
    atol: float = 1e-10
    rtol: float = 1e-8
    max_steps: int = 200_000

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.step <= 0 or self.atol <= 0 or self.rtol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


DEFAULT_OPTIONS = IntegratorOptions()

# Fehlberg tableau.
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8, 3680 / 513, -845 / 4104),
    (-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
# b5 - b4: local truncation error estimate of the propagated solution.
_E = (1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55)


def rk4_steps(t: float, step: float) -> tuple[int, float]:
    """Number of fixed steps and their common size for a span of t."""
    n = max(1, math.ceil(t / step - 1e-12))
    return n, t / n


def _rk4(field, y0, t, options):
    n, h = rk4_steps(t, options.step)
    if n > options.max_steps:
        raise IntegrationFailureError(
            f"rk4 would need {n} steps (> max_steps={options.max_steps})"
        )
    y = y0
    for _ in range(n):
        k1 = field(y)
        k2 = field(y + 0.5 * h * k1)
        k3 = field(y + 0.5 * h * k2)
        k4 = field(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _rkf45(field, y0, t, options):
    y = np.array(y0, dtype=float)
    x = 0.0
    h = min(t, max(options.step, 1e-6))
    hmin = 1e-14 * max(t, 1.0)
    k = [None] * 6
    for _ in range(options.max_steps):
        if x >= t:
            return y
        h = min(h, t - x)
        if h < hmin:
            raise IntegrationFailureError(f"step size underflow at t={x:.6g} (h={h:.3e})")
        k[0] = field(y)
        for s in range(1, 6):
            ys = y + h * sum(a * k[m] for m, a in enumerate(_A[s]))
            k[s] = field(ys)
        y5 = y + h * sum(b * k[m] for m, b in enumerate(_B5))
        err = h * sum(e * k[m] for m, e in enumerate(_E))
        scale = options.atol + options.rtol * np.maximum(np.abs(y), np.abs(y5))
        errnorm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if errnorm <= 1.0:
            x += h
            y = y5
        factor = 5.0 if errnorm == 0.0 else 0.9 * errnorm ** (-0.2)
        h *= min(5.0, max(0.2, factor))
    raise IntegrationFailureError(f"max_steps={options.max_steps} exceeded at t={x:.6g}")


def solve(field, y0: np.ndarray, t: float, options: IntegratorOptions | None = None) -> np.ndarray:
    """Integrate dy/dt = field(y) from 0 to t >= 0."""
    if t < 0:
        raise ValueError("integration time must be nonnegative")
    options = options or DEFAULT_OPTIONS
    y0 = np.asarray(y0, dtype=float)
    if t == 0.0:
        return y0.copy()
    if options.method == "rk4":
        return _rk4(field, y0, t, options)
    return _rkf45(field, y0, t, options)
