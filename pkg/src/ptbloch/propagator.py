"""Time integration of the driven two-level system with v(t) = alpha*t.

The sweep is integrated in a renormalized representation: the stored state is
always unit norm and the removed exponential scale is accumulated in
``log_norm``, so runs deep in the adiabatic regime (amplification e^{pi
gamma^2/alpha}) never overflow.  Populations of the instantaneous eigenstates
are attached to the trace at every accepted step and flagged undefined within
the exceptional-point tolerance, where the biorthogonal projection is
singular.

Two coupling modes share the machinery: ``pt_imaginary`` is the PT-symmetric
model itself, ``hermitian_real`` replaces the coupling i*gamma by a real gamma
and serves as a unitary control whose Landau-Zener asymptotics are known
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fast
from .errors import (NonFiniteStateError, NumericalError,
                     StepSizeUnderflowError, ValidationError)
from .integrate import ADAPTIVE_RK45, FIXED_RK4, IntegratorConfig
from .two_level import (DEFAULT_EP_TOLERANCE, TwoLevelParams,
                        analytic_transmission, spectrum)

PT_IMAGINARY = "pt_imaginary"
HERMITIAN_REAL = "hermitian_real"
_MODES = (PT_IMAGINARY, HERMITIAN_REAL)


@dataclass(frozen=True)
class StateVector2:
    """Two-component state in the renormalized representation.

    The physical amplitudes are (c1, c2) * e^{log_norm}; the stored pair is
    always unit norm.
    """

    c1: complex
    c2: complex
    log_norm: float = 0.0

    def __post_init__(self):
        vals = (self.c1.real, self.c1.imag, self.c2.real, self.c2.imag, self.log_norm)
        if not all(math.isfinite(x) for x in vals):
            raise ValidationError("state components and log_norm must be finite")
        nrm = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(nrm - 1.0) > 1e-9:
            raise ValidationError(
                f"internal amplitudes must be unit norm (|psi|^2 = {nrm}); "
                "use StateVector2.from_amplitudes for raw amplitudes")

    @classmethod
    def diabatic_2(cls) -> "StateVector2":
        """The (0, 1) basis state, the sweep boundary condition at t -> -inf."""
        return cls(0j, 1 + 0j, 0.0)

    @classmethod
    def from_amplitudes(cls, psi1: complex, psi2: complex,
                        log_scale: float = 0.0) -> "StateVector2":
        """Normalize raw amplitudes (psi1, psi2)*e^{log_scale} into internal form."""
        nrm = math.hypot(abs(psi1), abs(psi2))
        if nrm == 0.0 or not math.isfinite(nrm):
            raise ValidationError(f"amplitudes must have finite nonzero norm, got {nrm}")
        return cls(psi1 / nrm, psi2 / nrm, log_scale + math.log(nrm))

    @classmethod
    def random(cls, seed) -> "StateVector2":
        """Unit state with components drawn as independent standard complex Gaussians."""
        rng = np.random.default_rng(seed)
        re1, im1, re2, im2 = rng.standard_normal(4)
        return cls.from_amplitudes(complex(re1, im1), complex(re2, im2))

    @property
    def components(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)

    @property
    def log_mod_sq(self) -> tuple[float, float]:
        """Log of the physical squared moduli (2*log_norm + log|c_i|^2)."""
        base = 2.0 * self.log_norm
        l1 = base + 2.0 * math.log(abs(self.c1)) if self.c1 != 0 else -math.inf
        l2 = base + 2.0 * math.log(abs(self.c2)) if self.c2 != 0 else -math.inf
        return (l1, l2)


def eigenstate_initial(params: TwoLevelParams, branch: str = "plus") -> StateVector2:
    """Instantaneous right eigenstate at the start of the sweep (v = v_initial)."""
    spec = spectrum(params.v_initial, params.gamma)
    if spec.right_eigenvectors is None:
        raise ValidationError("sweep starts at an exceptional point")
    vec = spec.right_eigenvectors[0 if branch == "plus" else 1]
    return StateVector2.from_amplitudes(complex(vec[0]), complex(vec[1]))


def hermitian_eigenstate(v: float, gamma: float, branch: str = "plus") -> StateVector2:
    """Eigenstate of the Hermitian control Hamiltonian [[-v, gamma], [gamma, v]].

    Eigenvalues are +-sqrt(v^2 + gamma^2); there are no exceptional points in
    this mode, so the state is defined for every (v, gamma).
    """
    lam = math.hypot(v, gamma)
    eig = lam if branch == "plus" else -lam
    return StateVector2.from_amplitudes(complex(gamma), complex(v + eig))


@dataclass(frozen=True)
class SweepTrace:
    """Time series of a single sweep, recorded at every accepted step.

    ``populations`` holds the normalized instantaneous-eigenstate populations
    (p_plus, p_minus); entries within the exceptional-point tolerance are NaN
    with ``populations_defined`` False.  ``log_diabatic_mod_sq`` carries the
    physical squared moduli of (psi1, psi2) in log space.
    """

    params: TwoLevelParams
    coupling_mode: str
    times: np.ndarray
    v_values: np.ndarray
    amplitudes: np.ndarray
    log_norm: np.ndarray
    populations: np.ndarray
    populations_defined: np.ndarray
    log_diabatic_mod_sq: np.ndarray

    def __post_init__(self):
        for arr in (self.times, self.v_values, self.amplitudes, self.log_norm,
                    self.populations, self.populations_defined,
                    self.log_diabatic_mod_sq):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def final_state(self) -> StateVector2:
        c1, c2 = self.amplitudes[-1]
        return StateVector2(complex(c1), complex(c2), float(self.log_norm[-1]))


def _populations_hermitian(v, gamma, c1, c2):
    """Orthogonal eigenprojections for the Hermitian control Hamiltonian."""
    lam = np.sqrt(v * v + gamma * gamma)
    a_p = np.abs(gamma * c1 + (v + lam) * c2) ** 2 / (gamma * gamma + (v + lam) ** 2)
    a_m = np.abs(gamma * c1 + (v - lam) * c2) ** 2 / (gamma * gamma + (v - lam) ** 2)
    total = a_p + a_m
    return a_p / total, a_m / total, np.ones(v.shape, dtype=bool)


def _populations_along_sweep(v, gamma, c1, c2, ep_tolerance):
    """Vectorized biorthogonal populations along a sweep (closed-form 2x2)."""
    disc = v * v - gamma * gamma
    defined = np.abs(disc) >= ep_tolerance * ep_tolerance
    lam = np.sqrt(disc.astype(complex))
    # unnormalized right eigenvectors R+- = (i*gamma, v +- lam);
    # H is complex symmetric, so <L|psi> = (R^T psi) * ||R|| / (R^T R)
    proj_p = 1j * gamma * c1 + (v + lam) * c2
    proj_m = 1j * gamma * c1 + (v - lam) * c2
    bil_p = 2.0 * lam * (lam + v)
    bil_m = 2.0 * lam * (lam - v)
    norm_p_sq = gamma * gamma + np.abs(v + lam) ** 2
    norm_m_sq = gamma * gamma + np.abs(v - lam) ** 2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a_p = norm_p_sq * np.abs(proj_p / bil_p) ** 2
        a_m = norm_m_sq * np.abs(proj_m / bil_m) ** 2
        total = a_p + a_m
        p_p = np.where(defined, a_p / total, np.nan)
        p_m = np.where(defined, a_m / total, np.nan)
    return p_p, p_m, defined


def propagate_sweep(params: TwoLevelParams, initial: StateVector2,
                    config: IntegratorConfig | None = None,
                    coupling_mode: str = PT_IMAGINARY) -> SweepTrace:
    """Integrate the sweep from v_initial to v_final and return the full trace.

    In ``pt_imaginary`` mode the equations of motion are
    i*dpsi1/dt = -alpha*t*psi1 + i*gamma*psi2, i*dpsi2/dt = i*gamma*psi1 +
    alpha*t*psi2; in ``hermitian_real`` mode the coupling is real gamma and
    the dynamics are unitary.
    """
    if config is None:
        config = IntegratorConfig()
    if coupling_mode not in _MODES:
        raise ValidationError(f"coupling_mode must be one of {_MODES}, got {coupling_mode!r}")
    if not isinstance(initial, StateVector2):
        raise ValidationError("initial must be a StateVector2")

    gamma, alpha = params.gamma, params.alpha
    t0, t1 = params.t_initial, params.t_final
    kappa = complex(gamma) if coupling_mode == PT_IMAGINARY else -1j * gamma

    if config.method == ADAPTIVE_RK45:
        if config.initial_step > 0:
            h0 = min(config.initial_step, config.max_step, t1 - t0)
        else:
            d1 = 1j * alpha * t0 * initial.c1 + kappa * initial.c2
            d2 = kappa * initial.c1 - 1j * alpha * t0 * initial.c2
            rate = math.hypot(abs(d1), abs(d2))
            h0 = min(0.01 / max(rate, 1e-6), config.max_step, (t1 - t0) / 10.0)
        status, n, ts, c1s, c2s, lns = _fast.sweep_adaptive(
            alpha, kappa, t0, t1, complex(initial.c1), complex(initial.c2),
            config.rel_tolerance, config.abs_tolerance, config.max_step, h0)
    else:
        status, n, ts, c1s, c2s, lns = _fast.sweep_fixed_rk4(
            alpha, kappa, t0, t1, complex(initial.c1), complex(initial.c2),
            config.max_step)

    if status == _fast.STATUS_STEP_UNDERFLOW:
        raise StepSizeUnderflowError(
            f"step size underflow during sweep (gamma={gamma}, alpha={alpha})")
    if status == _fast.STATUS_NONFINITE:
        raise NonFiniteStateError(
            f"state became non-finite during sweep (gamma={gamma}, alpha={alpha})")

    ts = ts[:n].copy()
    c1s = c1s[:n].copy()
    c2s = c2s[:n].copy()
    lns = lns[:n] + initial.log_norm

    v = alpha * ts
    if coupling_mode == PT_IMAGINARY:
        p_p, p_m, defined = _populations_along_sweep(v, gamma, c1s, c2s,
                                                     DEFAULT_EP_TOLERANCE)
    else:
        p_p, p_m, defined = _populations_hermitian(v, gamma, c1s, c2s)
    with np.errstate(divide="ignore"):
        log_diab = 2.0 * lns[:, None] + 2.0 * np.log(
            np.abs(np.stack([c1s, c2s], axis=1)))

    return SweepTrace(params=params, coupling_mode=coupling_mode,
                      times=ts, v_values=v,
                      amplitudes=np.stack([c1s, c2s], axis=1),
                      log_norm=lns.copy(),
                      populations=np.stack([p_p, p_m], axis=1),
                      populations_defined=defined,
                      log_diabatic_mod_sq=log_diab)


def numerical_transmission(trace: SweepTrace) -> float:
    """Transmission probability |psi2|^2 / (|psi1|^2 + |psi2|^2) at the end of a sweep.

    Evaluated in log space from the final trace entry, so arbitrarily large
    amplification is fine.  Only traces from ``pt_imaginary`` sweeps are
    accepted; the Hermitian control mode measures a different quantity.
    """
    if len(trace) == 0:
        raise ValidationError("empty trace")
    if trace.coupling_mode != PT_IMAGINARY:
        raise ValidationError(
            f"transmission is defined for {PT_IMAGINARY} traces, got {trace.coupling_mode!r}")
    log_m1, log_m2 = trace.log_diabatic_mod_sq[-1]
    d = log_m1 - log_m2
    if math.isnan(d):
        raise NumericalError("both diabatic amplitudes vanished; transmission undefined")
    with np.errstate(over="ignore"):
        return float(1.0 / (1.0 + np.exp(d)))


def asymptotic_transmission_estimate(trace: SweepTrace) -> float:
    """Transmission extracted from the final instantaneous-eigenstate populations.

    ``numerical_transmission`` reads the diabatic amplitude ratio at the final
    time, which carries endpoint oscillations decaying only like gamma/v; this
    estimate projects on the instantaneous eigenbasis instead, which removes
    the slaved first-order admixture and converges to the t -> inf limit like
    (gamma/2v)^2.  Start the sweep from the incoming channel eigenstate
    (``eigenstate_initial(params, "minus")``) to get the same second-order
    convergence at the incoming end.
    """
    if len(trace) == 0:
        raise ValidationError("empty trace")
    if trace.coupling_mode != PT_IMAGINARY:
        raise ValidationError(
            f"transmission is defined for {PT_IMAGINARY} traces, got {trace.coupling_mode!r}")
    if not trace.populations_defined[-1]:
        raise NumericalError("final point is inside the exceptional-point tolerance")
    return float(trace.populations[-1][0])


def adiabatic_redistribution_check(params: TwoLevelParams, initial: StateVector2,
                                   config: IntegratorConfig | None = None
                                   ) -> tuple[float, float]:
    """Final instantaneous-eigenstate populations after a slow PT sweep.

    Requires pi*gamma^2/alpha > 5 so the sweep is in the adiabatic regime
    where the populations redistribute towards (1/2, 1/2).
    """
    adiabaticity = math.pi * params.gamma ** 2 / params.alpha
    if not adiabaticity > 5.0:
        raise ValidationError(
            f"sweep too fast for the redistribution check: pi*gamma^2/alpha = "
            f"{adiabaticity:.3g} <= 5")
    trace = propagate_sweep(params, initial, config, PT_IMAGINARY)
    if not trace.populations_defined[-1]:
        raise NumericalError("final point is inside the exceptional-point tolerance")
    p_plus, p_minus = trace.populations[-1]
    return (float(p_plus), float(p_minus))


def converged_transmission(gamma: float, alpha: float,
                           config: IntegratorConfig | None = None,
                           range_factor: float = 20.0,
                           rel_change: float = 1e-4,
                           max_doublings: int = 8) -> tuple[float, float]:
    """Numerical transmission with the v-range doubled until it stops mattering.

    Starts from v in [-range_factor*gamma, +range_factor*gamma] and doubles the
    window until the result changes by less than ``rel_change``.  Returns
    (p_tr, half_range_used).
    """
    half_range = range_factor * gamma
    initial = StateVector2.diabatic_2()
    params = TwoLevelParams(gamma, alpha, -half_range, half_range)
    p_prev = numerical_transmission(propagate_sweep(params, initial, config))
    for _ in range(max_doublings):
        half_range *= 2.0
        params = TwoLevelParams(gamma, alpha, -half_range, half_range)
        p_next = numerical_transmission(propagate_sweep(params, initial, config))
        if abs(p_next - p_prev) < rel_change:
            return (p_next, half_range)
        p_prev = p_next
    raise NumericalError(
        f"transmission did not converge within {max_doublings} range doublings")


__all__ = [
    "PT_IMAGINARY", "HERMITIAN_REAL", "StateVector2", "SweepTrace",
    "IntegratorConfig", "ADAPTIVE_RK45", "FIXED_RK4",
    "propagate_sweep", "numerical_transmission",
    "asymptotic_transmission_estimate", "adiabatic_redistribution_check",
    "converged_transmission", "eigenstate_initial", "hermitian_eigenstate",
    "analytic_transmission",
]
