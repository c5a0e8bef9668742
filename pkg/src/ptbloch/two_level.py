"""PT-symmetric two-level model: Hamiltonian, exact spectrum, closed-form transmission.

The model is H(v) = [[-v, i*gamma], [i*gamma, v]] with real detuning v and
gain-loss rate gamma > 0.  Its eigenvalues +-sqrt(v^2 - gamma^2) are real for
|v| > gamma and purely imaginary for |v| < gamma; the two regimes meet at the
exceptional points v = +-gamma where the eigenvectors coalesce and the matrix
becomes defective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DefectivePointError, ValidationError

DEFAULT_EP_TOLERANCE = 1e-8


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class TwoLevelParams:
    """Parameters of a linear sweep v(t) = alpha*t through the two-level model.

    The sweep window [v_initial, v_final] must bracket both exceptional
    points v = +-gamma, so every run crosses the broken-symmetry region.
    """

    gamma: float
    alpha: float
    v_initial: float
    v_final: float

    def __post_init__(self):
        _require_finite(gamma=self.gamma, alpha=self.alpha,
                        v_initial=self.v_initial, v_final=self.v_final)
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if self.alpha <= 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not (self.v_initial < -self.gamma and self.v_final > self.gamma):
            raise ValidationError(
                "sweep must bracket both exceptional points: need "
                f"v_initial < {-self.gamma} and v_final > {self.gamma}, "
                f"got [{self.v_initial}, {self.v_final}]")

    @property
    def t_initial(self) -> float:
        return self.v_initial / self.alpha

    @property
    def t_final(self) -> float:
        return self.v_final / self.alpha


@dataclass(frozen=True)
class SpectralData:
    """Spectral decomposition of the two-level Hamiltonian at one (v, gamma).

    Eigenvectors are ``None`` at an exceptional point, where the matrix is
    defective and a biorthogonal pair does not exist.  ``overlap`` is the
    modulus of the inner product of the two unit-norm right eigenvectors;
    it reaches 1 exactly at the exceptional points.
    """

    eigenvalues: tuple[complex, complex]
    right_eigenvectors: tuple[np.ndarray, np.ndarray] | None
    left_eigenvectors: tuple[np.ndarray, np.ndarray] | None
    overlap: float
    at_exceptional_point: bool


@dataclass(frozen=True)
class TransmissionResult:
    """Closed-form asymptotics of a sweep at rate alpha through both exceptional points.

    beta = gamma^2 / (2*alpha).  The asymptotic squared moduli of the diabatic
    amplitudes are e^{2*pi*beta} - 1 and e^{2*pi*beta}; both are also carried in
    log space (``log_mod_psi1_sq``, ``log_mod_psi2_sq``) because they overflow
    for beta >~ 113.  p_tr = 1/(2 - e^{-2*pi*beta}) never overflows and
    saturates to 1/2 in the adiabatic limit.
    """

    p_tr: float
    beta: float
    asymptotic_mod_psi1_sq: float
    asymptotic_mod_psi2_sq: float
    log_mod_psi1_sq: float
    log_mod_psi2_sq: float


def hamiltonian(v: float, gamma: float) -> np.ndarray:
    """Return the PT-symmetric two-level Hamiltonian [[-v, i*gamma], [i*gamma, v]]."""
    _require_finite(v=v, gamma=gamma)
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    return np.array([[-v, 1j * gamma], [1j * gamma, v]], dtype=complex)


def exceptional_points(gamma: float) -> tuple[float, float]:
    """Detunings (-gamma, +gamma) at which the two eigenvectors coalesce."""
    _require_finite(gamma=gamma)
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    return (-gamma, gamma)


def _eigenvalue_plus(v: float, gamma: float) -> complex:
    # Principal sqrt of the (possibly negative) discriminant gives the branch
    # with Re >= 0 when real and Im > 0 when imaginary.
    return complex(np.sqrt(complex(v * v - gamma * gamma)))


def spectrum(v: float, gamma: float,
             ep_tolerance: float = DEFAULT_EP_TOLERANCE) -> SpectralData:
    """Exact eigenvalues and biorthogonal eigenvectors at a single detuning.

    Parameters
    ----------
    v, gamma : float
        Detuning and gain-loss rate (gamma > 0).
    ep_tolerance : float
        The point counts as exceptional when |v^2 - gamma^2| < ep_tolerance^2;
        eigenvectors are then refused rather than returned ill-conditioned.

    Returns
    -------
    SpectralData
        lambda_+ = +sqrt(v^2 - gamma^2) (Re >= 0 branch, Im > 0 when complex),
        lambda_- = -lambda_+.  Right eigenvectors have unit Euclidean norm and
        real-positive first component; left eigenvectors satisfy
        <L_i|R_j> = delta_ij.
    """
    _require_finite(v=v, gamma=gamma)
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    if ep_tolerance <= 0:
        raise ValidationError(f"ep_tolerance must be > 0, got {ep_tolerance}")

    disc = v * v - gamma * gamma
    lam = _eigenvalue_plus(v, gamma)
    at_ep = abs(disc) < ep_tolerance * ep_tolerance

    # overlap of unit right eigenvectors: gamma/|v| outside, |v|/gamma inside
    if at_ep:
        overlap = 1.0
    elif disc > 0:
        overlap = gamma / abs(v)
    else:
        overlap = abs(v) / gamma

    if at_ep:
        return SpectralData(eigenvalues=(lam, -lam), right_eigenvectors=None,
                            left_eigenvectors=None, overlap=overlap,
                            at_exceptional_point=True)

    rights = []
    lefts = []
    for eig in (lam, -lam):
        # unnormalized right eigenvector (i*gamma, v + lambda); rotate the
        # first component (always nonzero since gamma > 0) to real positive
        vec = np.array([gamma, -1j * (v + eig)], dtype=complex)
        vec /= np.linalg.norm(vec)
        vec.setflags(write=False)
        rights.append(vec)
        # complex-symmetric H: left eigenvector is conj(R)/conj(R^T R)
        self_bilinear = vec @ vec  # R^T R, zero only at the EP
        left = np.conj(vec / self_bilinear)
        left.setflags(write=False)
        lefts.append(left)

    return SpectralData(eigenvalues=(lam, -lam),
                        right_eigenvectors=(rights[0], rights[1]),
                        left_eigenvectors=(lefts[0], lefts[1]),
                        overlap=overlap, at_exceptional_point=False)


def instantaneous_populations(state, spectral: SpectralData) -> tuple[float, float]:
    """Normalized populations of the two instantaneous eigenstates.

    ``state`` is a two-component complex amplitude (any object exposing
    ``components`` or an array-like pair).  Populations are the squared
    biorthogonal projections |<L_i|psi>|^2, normalized to sum to one; any
    overall scale of the state cancels.
    """
    if spectral.at_exceptional_point or spectral.left_eigenvectors is None:
        raise DefectivePointError(
            "instantaneous populations are undefined at an exceptional point")
    psi = np.asarray(getattr(state, "components", state), dtype=complex)
    if psi.shape != (2,):
        raise ValidationError(f"state must have two components, got shape {psi.shape}")
    if not np.all(np.isfinite(psi.view(float))):
        raise ValidationError("state has non-finite components")
    if psi[0] == 0 and psi[1] == 0:
        raise ValidationError("state has zero norm")

    l_plus, l_minus = spectral.left_eigenvectors
    a_plus = abs(np.vdot(l_plus, psi)) ** 2
    a_minus = abs(np.vdot(l_minus, psi)) ** 2
    total = a_plus + a_minus
    return (a_plus / total, a_minus / total)


def analytic_transmission(gamma: float, alpha: float) -> TransmissionResult:
    """Closed-form transmission probability for the PT-symmetric sweep.

    p_tr = (2 - e^{-pi*gamma^2/alpha})^{-1}, together with the asymptotic
    diabatic amplitudes e^{2*pi*beta} - 1 and e^{2*pi*beta}, beta = gamma^2/(2*alpha).
    The amplitudes are reported in log space as well; when 2*pi*beta exceeds the
    float exponent range the linear fields are inf and only the log fields are
    usable.
    """
    _require_finite(gamma=gamma, alpha=alpha)
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    if alpha <= 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")

    beta = gamma * gamma / (2.0 * alpha)
    two_pi_beta = 2.0 * math.pi * beta
    # log(e^x - 1), stable at both ends of the x range
    log_m2 = two_pi_beta
    if two_pi_beta >= 1.0:
        log_m1 = two_pi_beta + math.log1p(-math.exp(-two_pi_beta))
    else:
        log_m1 = math.log(math.expm1(two_pi_beta))
    p_tr = 1.0 / (2.0 - math.exp(-two_pi_beta))
    try:
        m2 = math.exp(two_pi_beta)
        m1 = m2 - 1.0
    except OverflowError:
        m2 = math.inf
        m1 = math.inf
    return TransmissionResult(p_tr=p_tr, beta=beta,
                              asymptotic_mod_psi1_sq=m1,
                              asymptotic_mod_psi2_sq=m2,
                              log_mod_psi1_sq=log_m1,
                              log_mod_psi2_sq=log_m2)
