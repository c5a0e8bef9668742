"""Quasimomentum-space analysis of the PT-symmetric chain.

Bloch transform with the <j|k> = e^{ikj}/sqrt(2 pi) convention, the reduced
zone [-pi/2, pi/2) two-component representation Psi = (psi(k), psi(k+pi)),
the Bloch Hamiltonian h(k) = [[-2 cos k, i*Gamma], [i*Gamma, 2 cos k]] and its
dispersion, Jacobi theta functions for the exact quasimomentum form of a
site-sampled Gaussian, the acceleration-theorem diagnostic <k>_t, and the
mapping of the driven band transit onto the two-level sweep.

Theta-function note: the nome here is e^{nome_log} with nome_log =
-2 pi^2 sigma^2, far below the underflow threshold for realistic beam widths,
while theta values themselves reach e^{sigma^2 (k-k0)^2 / 2}.  Every product
is therefore assembled in log space and exponentiated last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnwrapAmbiguityError, ValidationError
from .lattice import GaussianBeam
from .two_level import analytic_transmission

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform grid of n_k quasimomenta covering the full zone [-pi, pi).

    n_k must be a multiple of 4 so the reduced zone [-pi/2, pi/2) and its
    pi-shifted partner align with grid points.
    """

    n_k: int

    def __post_init__(self):
        if self.n_k < 4 or self.n_k % 4 != 0:
            raise ValidationError(
                f"n_k must be a positive multiple of 4, got {self.n_k}")

    @classmethod
    def for_sites(cls, n_sites: int) -> "MomentumGrid":
        """Smallest grid (multiple of 4) resolving an n_sites chain."""
        return cls(n_k=4 * ((n_sites + 3) // 4))

    @property
    def k_values(self) -> np.ndarray:
        return -math.pi + 2.0 * math.pi * np.arange(self.n_k) / self.n_k

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.n_k


@dataclass(frozen=True)
class TwoComponentMomentumState:
    """Reduced-zone pair Psi(k) = (psi(k), psi(k+pi)) on k in [-pi/2, pi/2)."""

    k_reduced: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray

    def __post_init__(self):
        if not (self.k_reduced.shape == self.psi1.shape == self.psi2.shape):
            raise ValidationError("component grids must have equal length")


def to_quasimomentum(state, grid: MomentumGrid) -> np.ndarray:
    """Bloch transform psi(k) = (1/sqrt(2 pi)) sum_j e^{-ikj} psi(j) on the grid.

    ``state`` is anything with ``amplitudes`` and ``sites`` (LatticeState or
    EvolutionSample).  Normalization satisfies
    (2 pi / n_k) sum_k |psi(k)|^2 = sum_j |psi(j)|^2 exactly for n_k >= n_sites.
    """
    sites = state.sites
    amps = state.amplitudes
    if grid.n_k < sites.size:
        raise ValidationError(
            f"grid too coarse: n_k = {grid.n_k} < n_sites = {sites.size}")
    phases = np.exp(-1j * np.outer(grid.k_values, sites))
    return (phases @ amps) / SQRT_2PI


def split_two_component(psi_k: np.ndarray, grid: MomentumGrid) -> TwoComponentMomentumState:
    """Partition full-zone psi(k) into (Psi1, Psi2)(k) = (psi(k), psi(k+pi))."""
    psi_k = np.asarray(psi_k)
    if psi_k.shape != (grid.n_k,):
        raise ValidationError(
            f"psi_k has shape {psi_k.shape}, expected ({grid.n_k},)")
    quarter = grid.n_k // 4
    idx = np.arange(quarter, 3 * quarter)
    shifted = (idx + grid.n_k // 2) % grid.n_k
    return TwoComponentMomentumState(k_reduced=grid.k_values[idx],
                                     psi1=psi_k[idx], psi2=psi_k[shifted])


def reassemble_full_zone(two: TwoComponentMomentumState, grid: MomentumGrid) -> np.ndarray:
    """Inverse of split_two_component; exact partition round trip."""
    if two.psi1.shape != (grid.n_k // 2,):
        raise ValidationError("component length does not match the grid")
    quarter = grid.n_k // 4
    idx = np.arange(quarter, 3 * quarter)
    shifted = (idx + grid.n_k // 2) % grid.n_k
    full = np.empty(grid.n_k, dtype=complex)
    full[idx] = two.psi1
    full[shifted] = two.psi2
    return full


def bloch_hamiltonian(k: float, gamma_lattice: float) -> np.ndarray:
    """Bloch Hamiltonian [[-2 cos k, i*Gamma], [i*Gamma, 2 cos k]].

    Structurally identical to the two-level model at detuning v = 2 cos k.
    """
    c = 2.0 * math.cos(k)
    return np.array([[-c, 1j * gamma_lattice], [1j * gamma_lattice, c]], dtype=complex)


def dispersion(k, gamma_lattice: float):
    """Band energies E+-(k) = +-sqrt(4 cos^2 k - Gamma^2).

    Same branch convention as the two-level spectrum: E+ has Re >= 0 when
    real, Im > 0 when imaginary.  Accepts scalar or array k.
    """
    k = np.asarray(k, dtype=float)
    disc = 4.0 * np.cos(k) ** 2 - gamma_lattice ** 2
    e_plus = np.sqrt(disc.astype(complex))
    return e_plus, -e_plus


def band_exceptional_momenta(gamma_lattice: float) -> tuple[float, float]:
    """Reduced-zone momenta +-arccos(Gamma/2) where the bands touch (Gamma < 2)."""
    if not 0 < gamma_lattice < 2:
        raise ValidationError(
            f"band exceptional points require 0 < Gamma < 2, got {gamma_lattice}")
    k_star = math.acos(gamma_lattice / 2.0)
    return (-k_star, k_star)


@dataclass(frozen=True)
class ThetaArguments:
    """Argument pair for the theta series: value z and log of the nome.

    For a width-sigma^2 beam the nome is e^{i pi tau} with tau = 2i sigma^2 pi,
    i.e. nome_log = -2 pi^2 sigma^2 < 0.
    """

    z: complex
    nome_log: float

    def __post_init__(self):
        if not (math.isfinite(self.nome_log) and self.nome_log < 0):
            raise ValidationError(f"nome_log must be < 0, got {self.nome_log}")

    @classmethod
    def for_beam(cls, beam: GaussianBeam, k: float) -> "ThetaArguments":
        z = 1j * beam.sigma_sq * math.pi * (k - beam.k0) - beam.q0 * math.pi
        return cls(z=z, nome_log=-2.0 * math.pi ** 2 * beam.sigma_sq)


def _theta_sum_scaled(z: complex, nome_log: float, tolerance: float,
                      half_integer: bool) -> tuple[complex, float]:
    """Evaluate sum_n q^{a_n} e^{i b_n z} as (mantissa, log_scale).

    theta3: a_n = n^2,        b_n = 2n,   n over all integers;
    theta2: a_n = (n+1/2)^2,  b_n = 2n+1  (half_integer=True).

    Real exponents E_n = a_n*nome_log - b_n*Im(z) form an exact downward
    parabola in n, so the kept window around its peak is computed in closed
    form; this is the "peak detector" truncation: terms may grow before they
    shrink when Im(z) is large, and the window always brackets the maximum.
    Terms below ``tolerance`` relative to the peak term are dropped.
    """
    if not tolerance > 0:
        raise ValidationError(f"tolerance must be > 0, got {tolerance}")
    shift = 0.5 if half_integer else 0.0
    # peak of E(n) = (n+shift)^2 * nome_log - (2(n+shift)) * Im z over real n
    center = z.imag / nome_log - shift
    half_width = math.sqrt(max(-math.log(tolerance * 1e-3), 1.0) / -nome_log)
    n_lo = math.floor(center - half_width) - 1
    n_hi = math.ceil(center + half_width) + 1
    n = np.arange(n_lo, n_hi + 1, dtype=float) + shift
    exponents = n * n * nome_log + 2.0 * n * (1j * z)
    peak = float(np.max(exponents.real))
    mantissa = complex(np.sum(np.exp(exponents - peak)))
    return mantissa, peak


def _scaled_to_complex(mantissa: complex, log_scale: float) -> complex:
    if log_scale > 709.0:  # exp overflow: the value genuinely exceeds float range
        return mantissa * math.inf
    return mantissa * math.exp(log_scale)


def theta3(args: ThetaArguments, tolerance: float = 1e-14) -> complex:
    """Jacobi theta_3(z, q) = 1 + 2 sum_{n>=1} q^{n^2} cos(2nz), q = e^{nome_log}.

    May overflow to inf for large |Im z|; the log-space machinery in
    gaussian_momentum_analytic composes theta values with the other factors
    before exponentiating, which is where such arguments belong.
    """
    return _scaled_to_complex(*_theta_sum_scaled(args.z, args.nome_log, tolerance, False))


def theta2(args: ThetaArguments, tolerance: float = 1e-14) -> complex:
    """Jacobi theta_2(z, q) = 2 q^{1/4} sum_{n>=0} q^{n(n+1)} cos((2n+1)z)."""
    return _scaled_to_complex(*_theta_sum_scaled(args.z, args.nome_log, tolerance, True))


def _log_theta(z: complex, nome_log: float, tolerance: float,
               half_integer: bool) -> complex:
    mantissa, log_scale = _theta_sum_scaled(z, nome_log, tolerance, half_integer)
    if mantissa == 0:
        return complex(-math.inf, 0.0)
    return np.log(complex(mantissa)) + log_scale


def gaussian_momentum_analytic(beam: GaussianBeam, k, tolerance: float = 1e-14):
    """Exact quasimomentum representation of a site-sampled Gaussian beam.

    Returns the two-component pair (Psi1(k), Psi2(k)) =
    (sqrt(sigma)/pi^{1/4}) * e^{-sigma^2 (k-k0)^2/2 - i q0 k}
    / sqrt(theta3(-q0 pi, e^{i pi tau/2})) * (theta3(z, q), theta2(z, q))
    with z = i sigma^2 pi (k - k0) - q0 pi and tau = 2 i sigma^2 pi.  Accepts
    scalar or array k; everything is assembled in log space, so the huge
    theta values cancel the Gaussian underflow exactly.
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    nome_log = -2.0 * math.pi ** 2 * beam.sigma_sq

    log_pref = 0.25 * math.log(beam.sigma_sq / math.pi)
    log_norm_denom = _log_theta(complex(-beam.q0 * math.pi), nome_log / 2.0,
                                tolerance, False)

    psi1 = np.empty(k_arr.shape, dtype=complex)
    psi2 = np.empty(k_arr.shape, dtype=complex)
    for i, kv in enumerate(k_arr):
        z = 1j * beam.sigma_sq * math.pi * (kv - beam.k0) - beam.q0 * math.pi
        gauss = -0.5 * beam.sigma_sq * (kv - beam.k0) ** 2 - 1j * beam.q0 * kv
        base = log_pref + gauss - 0.5 * log_norm_denom
        for out, half in ((psi1, False), (psi2, True)):
            log_theta_val = _log_theta(z, nome_log, tolerance, half)
            exponent = base + log_theta_val
            out[i] = 0.0 if exponent.real == -math.inf else np.exp(exponent)
    if np.isscalar(k) or np.asarray(k).ndim == 0:
        return complex(psi1[0]), complex(psi2[0])
    return psi1, psi2


def k_expectation_series(samples, grid: MomentumGrid,
                         min_concentration: float = 0.5):
    """Mean quasimomentum <k>_t on the reduced zone along an evolution run.

    The mean is the period-pi circular first moment of the weight
    |Psi1(k)|^2 + |Psi2(k)|^2 (equal to the plain integral away from the zone
    edge) and is unwrapped against the previous sample, so Bloch drift
    produces a continuous series.  Raises UnwrapAmbiguityError when the
    distribution is too broad for the mean to be meaningful (resultant length
    below ``min_concentration``).

    Returns (times, k_mean) arrays.
    """
    if len(samples) == 0:
        raise ValidationError("empty sample sequence")
    sites = samples[0].sites
    if grid.n_k < sites.size:
        raise ValidationError(
            f"grid too coarse: n_k = {grid.n_k} < n_sites = {sites.size}")
    phases = np.exp(-1j * np.outer(grid.k_values, sites)) / SQRT_2PI
    rotor = np.exp(2j * grid.k_values)

    times = np.empty(len(samples))
    k_mean = np.empty(len(samples))
    previous = None
    for i, sample in enumerate(samples):
        weight = np.abs(phases @ sample.amplitudes) ** 2
        total = float(weight.sum())
        order = complex(np.sum(weight * rotor)) / total
        if abs(order) < min_concentration:
            raise UnwrapAmbiguityError(
                f"momentum distribution too broad at t = {sample.time:.4g} "
                f"(resultant {abs(order):.3f} < {min_concentration})")
        raw = 0.5 * math.atan2(order.imag, order.real)
        if previous is not None:
            raw += math.pi * round((previous - raw) / math.pi)
        times[i] = sample.time
        k_mean[i] = raw
        previous = raw
    return times, k_mean


def effective_lz_params(gamma_lattice: float, force: float
                        ) -> tuple[float, float, float]:
    """Map the driven band transit onto the two-level sweep.

    Returns (gamma_eff, alpha_eff, p_tr) = (Gamma/F, 2/F, (2 - e^{-pi
    Gamma^2/(2F)})^{-1}); p_tr is evaluated through the two-level closed form
    so the identity pi*gamma_eff^2/alpha_eff = pi*Gamma^2/(2F) holds exactly.
    """
    if not (math.isfinite(force) and force > 0):
        raise ValidationError(f"force must be > 0, got {force}")
    if not (math.isfinite(gamma_lattice) and gamma_lattice >= 0):
        raise ValidationError(f"gamma_lattice must be >= 0, got {gamma_lattice}")
    gamma_eff = gamma_lattice / force
    alpha_eff = 2.0 / force
    if gamma_lattice == 0.0:
        return (gamma_eff, alpha_eff, 1.0)
    p_tr = analytic_transmission(gamma_eff, alpha_eff).p_tr
    return (gamma_eff, alpha_eff, p_tr)
