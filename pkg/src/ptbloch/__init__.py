"""Non-Hermitian Landau-Zener sweeps through exceptional points, and their
realization as beam splitting in a PT-symmetric tight-binding lattice under
Bloch oscillations."""

from .errors import (DefectivePointError, EdgeDensityError, NonFiniteStateError,
                     NumericalError, PeakDetectionError, PtblochError,
                     StepSizeUnderflowError, UnwrapAmbiguityError,
                     ValidationError)
from .integrate import ADAPTIVE_RK45, FIXED_RK4, IntegratorConfig
from .two_level import (SpectralData, TransmissionResult, TwoLevelParams,
                        analytic_transmission, exceptional_points, hamiltonian,
                        instantaneous_populations, spectrum)
from .propagator import (HERMITIAN_REAL, PT_IMAGINARY, StateVector2, SweepTrace,
                         adiabatic_redistribution_check,
                         asymptotic_transmission_estimate,
                         converged_transmission, eigenstate_initial,
                         hermitian_eigenstate, numerical_transmission,
                         propagate_sweep)
from .lattice import (BranchPopulations, EvolutionSample, GaussianBeam,
                      LatticeParams, LatticeState, auto_chain_params,
                      bloch_period, branch_populations, branch_separation_hint,
                      build_hamiltonian_action, drive_beam, evolve,
                      gaussian_beam_state)
from .bloch import (MomentumGrid, ThetaArguments, TwoComponentMomentumState,
                    band_exceptional_momenta, bloch_hamiltonian, dispersion,
                    effective_lz_params, gaussian_momentum_analytic,
                    k_expectation_series, reassemble_full_zone,
                    split_two_component, theta2, theta3, to_quasimomentum)

__version__ = "0.1.0"
