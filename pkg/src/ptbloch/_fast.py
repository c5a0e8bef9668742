"""Compiled Dormand-Prince kernels for the driven two-level system.

Parameter scans integrate millions of 2-component steps; at that size the
cost is pure interpreter overhead, so the hot loop lives here.  The math is
the same scheme as ``integrate.integrate_schrodinger`` (renormalize every
accepted step, accumulate log-norm) specialized to the sweep Hamiltonian

    dy1/dt = i*alpha*t*y1 + kappa*y2
    dy2/dt = kappa*y1 - i*alpha*t*y2

with kappa = gamma for the PT (imaginary) coupling and kappa = -i*gamma for
the Hermitian control mode.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NONFINITE = 2

# Dormand-Prince RK5(4)7M coefficients
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9

_EPS = 2.220446049250313e-16


@njit(cache=True)
def _grow(ts, a1, a2, lns):
    cap = 2 * ts.shape[0]
    ts2 = np.empty(cap, np.float64)
    a1b = np.empty(cap, np.complex128)
    a2b = np.empty(cap, np.complex128)
    ln2 = np.empty(cap, np.float64)
    n = ts.shape[0]
    ts2[:n] = ts
    a1b[:n] = a1
    a2b[:n] = a2
    ln2[:n] = lns
    return ts2, a1b, a2b, ln2


@njit(cache=True)
def sweep_adaptive(alpha, kappa, t0, t1, y1, y2, rtol, atol, max_step, h0):
    """Adaptive RK5(4) sweep recording every accepted step.

    Returns (status, n, times, c1, c2, log_norms); only the first n entries
    of the arrays are valid.
    """
    cap = 4096
    ts = np.empty(cap, np.float64)
    a1 = np.empty(cap, np.complex128)
    a2 = np.empty(cap, np.complex128)
    lns = np.empty(cap, np.float64)

    t = t0
    log_norm = 0.0
    n = 0
    ts[n] = t
    a1[n] = y1
    a2[n] = y2
    lns[n] = log_norm
    n += 1

    # FSAL first stage
    k11 = 1j * alpha * t * y1 + kappa * y2
    k12 = kappa * y1 - 1j * alpha * t * y2
    if not (math.isfinite(k11.real) and math.isfinite(k11.imag)
            and math.isfinite(k12.real) and math.isfinite(k12.imag)):
        return STATUS_NONFINITE, n, ts, a1, a2, lns

    h_ctrl = h0
    while t < t1:
        h = h_ctrl
        if h > max_step:
            h = max_step
        if h > t1 - t:
            h = t1 - t
        if h < 16.0 * _EPS * max(abs(t), 1.0):
            return STATUS_STEP_UNDERFLOW, n, ts, a1, a2, lns

        tt = t + _C2 * h
        s1 = y1 + h * (_A21 * k11)
        s2 = y2 + h * (_A21 * k12)
        k21 = 1j * alpha * tt * s1 + kappa * s2
        k22 = kappa * s1 - 1j * alpha * tt * s2

        tt = t + _C3 * h
        s1 = y1 + h * (_A31 * k11 + _A32 * k21)
        s2 = y2 + h * (_A31 * k12 + _A32 * k22)
        k31 = 1j * alpha * tt * s1 + kappa * s2
        k32 = kappa * s1 - 1j * alpha * tt * s2

        tt = t + _C4 * h
        s1 = y1 + h * (_A41 * k11 + _A42 * k21 + _A43 * k31)
        s2 = y2 + h * (_A41 * k12 + _A42 * k22 + _A43 * k32)
        k41 = 1j * alpha * tt * s1 + kappa * s2
        k42 = kappa * s1 - 1j * alpha * tt * s2

        tt = t + _C5 * h
        s1 = y1 + h * (_A51 * k11 + _A52 * k21 + _A53 * k31 + _A54 * k41)
        s2 = y2 + h * (_A51 * k12 + _A52 * k22 + _A53 * k32 + _A54 * k42)
        k51 = 1j * alpha * tt * s1 + kappa * s2
        k52 = kappa * s1 - 1j * alpha * tt * s2

        tt = t + h
        s1 = y1 + h * (_A61 * k11 + _A62 * k21 + _A63 * k31 + _A64 * k41 + _A65 * k51)
        s2 = y2 + h * (_A61 * k12 + _A62 * k22 + _A63 * k32 + _A64 * k42 + _A65 * k52)
        k61 = 1j * alpha * tt * s1 + kappa * s2
        k62 = kappa * s1 - 1j * alpha * tt * s2

        w1 = y1 + h * (_B1 * k11 + _B3 * k31 + _B4 * k41 + _B5 * k51 + _B6 * k61)
        w2 = y2 + h * (_B1 * k12 + _B3 * k32 + _B4 * k42 + _B5 * k52 + _B6 * k62)
        k71 = 1j * alpha * tt * w1 + kappa * w2
        k72 = kappa * w1 - 1j * alpha * tt * w2

        finite = (math.isfinite(w1.real) and math.isfinite(w1.imag)
                  and math.isfinite(w2.real) and math.isfinite(w2.imag)
                  and math.isfinite(k71.real) and math.isfinite(k72.real))
        if not finite:
            h_ctrl = h * 0.2
            continue

        e1 = h * (_E1 * k11 + _E3 * k31 + _E4 * k41 + _E5 * k51 + _E6 * k61 + _E7 * k71)
        e2 = h * (_E1 * k12 + _E3 * k32 + _E4 * k42 + _E5 * k52 + _E6 * k62 + _E7 * k72)
        sc1 = atol + rtol * max(abs(y1), abs(w1))
        sc2 = atol + rtol * max(abs(y2), abs(w2))
        err = math.sqrt(0.5 * ((abs(e1) / sc1) ** 2 + (abs(e2) / sc2) ** 2))

        if err <= 1.0:
            t = t + h
            if err == 0.0:
                factor = 5.0
            else:
                factor = 0.9 * err ** -0.2
                if factor > 5.0:
                    factor = 5.0
                elif factor < 0.2:
                    factor = 0.2
            clamped = h < h_ctrl
            h_prop = h * factor
            if clamped:
                if h_prop > h_ctrl:
                    h_ctrl = h_prop
            else:
                h_ctrl = h_prop

            nrm = math.sqrt(abs(w1) ** 2 + abs(w2) ** 2)
            log_norm += math.log(nrm)
            y1 = w1 / nrm
            y2 = w2 / nrm
            k11 = k71 / nrm  # FSAL; rhs is linear in y
            k12 = k72 / nrm

            if n >= ts.shape[0]:
                ts, a1, a2, lns = _grow(ts, a1, a2, lns)
            ts[n] = t
            a1[n] = y1
            a2[n] = y2
            lns[n] = log_norm
            n += 1
        else:
            factor = 0.9 * err ** -0.2
            if factor < 0.2:
                factor = 0.2
            h_ctrl = h * factor

    return STATUS_OK, n, ts, a1, a2, lns


@njit(cache=True)
def sweep_fixed_rk4(alpha, kappa, t0, t1, y1, y2, h_nom):
    """Classic RK4 sweep with constant nominal step, recording every step."""
    n_total = int(math.ceil((t1 - t0) / h_nom)) + 1
    ts = np.empty(n_total + 1, np.float64)
    a1 = np.empty(n_total + 1, np.complex128)
    a2 = np.empty(n_total + 1, np.complex128)
    lns = np.empty(n_total + 1, np.float64)

    t = t0
    log_norm = 0.0
    n = 0
    ts[n] = t
    a1[n] = y1
    a2[n] = y2
    lns[n] = log_norm
    n += 1

    while t < t1 - 1e-15 * max(abs(t1), 1.0):
        h = h_nom
        if h > t1 - t:
            h = t1 - t

        k11 = 1j * alpha * t * y1 + kappa * y2
        k12 = kappa * y1 - 1j * alpha * t * y2
        tt = t + 0.5 * h
        s1 = y1 + 0.5 * h * k11
        s2 = y2 + 0.5 * h * k12
        k21 = 1j * alpha * tt * s1 + kappa * s2
        k22 = kappa * s1 - 1j * alpha * tt * s2
        s1 = y1 + 0.5 * h * k21
        s2 = y2 + 0.5 * h * k22
        k31 = 1j * alpha * tt * s1 + kappa * s2
        k32 = kappa * s1 - 1j * alpha * tt * s2
        tt = t + h
        s1 = y1 + h * k31
        s2 = y2 + h * k32
        k41 = 1j * alpha * tt * s1 + kappa * s2
        k42 = kappa * s1 - 1j * alpha * tt * s2

        w1 = y1 + (h / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        w2 = y2 + (h / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        if not (math.isfinite(w1.real) and math.isfinite(w1.imag)
                and math.isfinite(w2.real) and math.isfinite(w2.imag)):
            return STATUS_NONFINITE, n, ts, a1, a2, lns

        t = tt
        nrm = math.sqrt(abs(w1) ** 2 + abs(w2) ** 2)
        log_norm += math.log(nrm)
        y1 = w1 / nrm
        y2 = w2 / nrm
        ts[n] = t
        a1[n] = y1
        a2[n] = y2
        lns[n] = log_norm
        n += 1

    return STATUS_OK, n, ts, a1, a2, lns
