"""Time integrators for non-Hermitian Schrodinger dynamics.

Both methods renormalize the state after every accepted step and accumulate
the removed scale in a running log-norm, so exponentially growing solutions
never overflow: the physical state is always  exp(log_norm) * state  with the
stored state kept at unit norm.

``adaptive_embedded_rk45`` is a Dormand-Prince 5(4) pair with PI-free step
control; ``fixed_rk4`` is the classic fourth-order method with a constant
step (the step is ``max_step``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteStateError, StepSizeUnderflowError, ValidationError

ADAPTIVE_RK45 = "adaptive_embedded_rk45"
FIXED_RK4 = "fixed_rk4"
_METHODS = (ADAPTIVE_RK45, FIXED_RK4)

# Dormand-Prince RK5(4)7M tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],  # = b, FSAL
])
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - b_hat: weights of the embedded 4th-order error estimate
DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])

MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
SAFETY = 0.9


@dataclass(frozen=True)
class IntegratorConfig:
    """Error control and method selection for the propagators.

    ``fixed_rk4`` ignores the tolerances and advances with constant step
    ``max_step`` (which must then be finite).  ``initial_step`` = 0 lets the
    adaptive method pick its own starting step.
    """

    rel_tolerance: float = 1e-9
    abs_tolerance: float = 1e-12
    max_step: float = math.inf
    initial_step: float = 0.0
    method: str = ADAPTIVE_RK45

    def __post_init__(self):
        if not (self.rel_tolerance > 0 and self.abs_tolerance > 0):
            raise ValidationError("tolerances must be > 0")
        if not self.max_step > 0:
            raise ValidationError(f"max_step must be > 0, got {self.max_step}")
        if self.initial_step < 0 or not math.isfinite(self.initial_step):
            raise ValidationError(f"initial_step must be >= 0 and finite, got {self.initial_step}")
        if self.method not in _METHODS:
            raise ValidationError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.method == FIXED_RK4 and not math.isfinite(self.max_step):
            raise ValidationError("fixed_rk4 needs a finite max_step (used as the step)")


def _error_norm(err, y_old, y_new, atol, rtol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return math.sqrt(float(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs, t0, y0, t_span, config):
    if config.initial_step > 0:
        return min(config.initial_step, config.max_step, t_span)
    f0 = rhs(t0, y0)
    rate = float(np.linalg.norm(f0))
    h = 0.01 / max(rate, 1e-6)
    return min(h, config.max_step, t_span / 10.0)


def integrate_schrodinger(rhs, t0: float, t1: float, y0: np.ndarray,
                          config: IntegratorConfig,
                          sample_times=None):
    """Integrate dy/dt = rhs(t, y) from t0 to t1 with per-step renormalization.

    ``rhs`` must be linear in y (Schrodinger form, typically -i*H(t) @ y), since
    renormalization rescales the FSAL stage.  ``y0`` must have unit norm.

    Parameters
    ----------
    sample_times : array-like or None
        If given (sorted, inside [t0, t1]), the integrator lands on these
        times exactly and records only there.  If None, every accepted step
        is recorded, including t0.

    Returns
    -------
    (times, states, log_norms)
        times : (m,) float array; states : (m, n) complex array of unit-norm
        snapshots; log_norms : (m,) accumulated log of the removed scale.
    """
    if not (math.isfinite(t0) and math.isfinite(t1) and t1 > t0):
        raise ValidationError(f"need finite t1 > t0, got [{t0}, {t1}]")
    y = np.asarray(y0, dtype=complex).copy()
    nrm = np.linalg.norm(y)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-9:
        raise ValidationError("initial state must have unit norm")

    if sample_times is not None:
        landings = list(np.asarray(sample_times, dtype=float))
        if landings != sorted(landings):
            raise ValidationError("sample_times must be sorted")
        if landings and (landings[0] < t0 - 1e-12 or landings[-1] > t1 + 1e-12):
            raise ValidationError("sample_times must lie within [t0, t1]")
    else:
        landings = None

    if config.method == FIXED_RK4:
        return _fixed_rk4_loop(rhs, t0, t1, y, config, landings)

    # --- adaptive Dormand-Prince 5(4) ---
    times, states, log_norms = [], [], []
    log_norm = 0.0

    def record(t):
        times.append(t)
        states.append(y.copy())
        log_norms.append(log_norm)

    atol, rtol = config.abs_tolerance, config.rel_tolerance
    t = t0
    h_ctrl = _initial_step(rhs, t0, y, t1 - t0, config)
    k = np.empty((7,) + y.shape, dtype=complex)
    k[0] = rhs(t, y)
    next_landing = 0
    if landings is None:
        record(t)
    elif landings and landings[0] <= t0 + 1e-15:
        record(t)
        next_landing = 1

    while t < t1:
        h = min(h_ctrl, config.max_step, t1 - t)
        if landings is not None and next_landing < len(landings):
            h = min(h, landings[next_landing] - t)
        clamped = h < h_ctrl
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StepSizeUnderflowError(
                f"step size underflow at t={t} (h={h}); system too stiff for the tolerance")

        for s in range(1, 7):
            ys = y + h * (DP_A[s, :s] @ k[:s])
            k[s] = rhs(t + DP_C[s] * h, ys)
        y_new = ys  # stage 7 point equals the 5th-order solution (FSAL)
        err = h * (DP_E @ k.reshape(7, -1)).reshape(y.shape)

        if not np.all(np.isfinite(y_new.view(float))):
            h_ctrl = h * MIN_FACTOR
            if h_ctrl < 16 * np.finfo(float).eps * max(abs(t), 1.0):
                raise NonFiniteStateError(f"state became non-finite at t={t}")
            continue

        err_norm = _error_norm(err, y, y_new, atol, rtol)
        if err_norm <= 1.0:
            t = t + h
            factor = MAX_FACTOR if err_norm == 0.0 else min(
                MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
            h_prop = h * factor
            h_ctrl = max(h_ctrl, h_prop) if clamped else h_prop
            nrm = float(np.linalg.norm(y_new))
            log_norm += math.log(nrm)
            y = y_new / nrm
            k[0] = k[6] / nrm  # FSAL, rescaled with the state (rhs is linear)
            if landings is None:
                record(t)
            elif next_landing < len(landings) and t >= landings[next_landing] - 1e-15:
                record(t)
                next_landing += 1
        else:
            h_ctrl = h * max(MIN_FACTOR, SAFETY * err_norm ** -0.2)

    return (np.asarray(times), np.asarray(states), np.asarray(log_norms))


def _fixed_rk4_loop(rhs, t0, t1, y0, config, landings):
    """Classic RK4 with constant step config.max_step, renormalizing each step."""
    h_nom = config.max_step
    t = t0
    y = y0.copy()
    log_norm = 0.0
    times, states, log_norms = [], [], []

    def record(tt):
        times.append(tt)
        states.append(y.copy())
        log_norms.append(log_norm)

    next_landing = 0
    if landings is None:
        record(t)
    elif landings and landings[0] <= t0 + 1e-15:
        record(t)
        next_landing = 1

    while t < t1 - 1e-15 * max(abs(t1), 1.0):
        h = min(h_nom, t1 - t)
        if landings is not None and next_landing < len(landings):
            h = min(h, landings[next_landing] - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_new.view(float))):
            raise NonFiniteStateError(f"state became non-finite at t={t}")
        t += h
        nrm = float(np.linalg.norm(y_new))
        log_norm += math.log(nrm)
        y = y_new / nrm
        if landings is None:
            record(t)
        elif next_landing < len(landings) and t >= landings[next_landing] - 1e-15:
            record(t)
            next_landing += 1

    return (np.asarray(times), np.asarray(states), np.asarray(log_norms))
