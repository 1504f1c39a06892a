"""Back-reaction of a 1D cavity field on a moving mirror.

Mode basis and coupling matrix of the equilibrium cavity, thermal occupation
factors, the mirror's fluctuation/dissipation kernels with their discrete
spectral decomposition, renormalized static (Casimir) energy density, memory
forces and semiclassical evolution, and the energy balance between mechanical
dissipation and photon-pair emission.

Natural units throughout: c = hbar = k_B = 1.
"""

from .cavity import (CavitySpec, CouplingMatrix, completeness_residual,
                     coupling_coefficient, coupling_matrix, mode_frequency,
                     mode_overlap_integral)
from .casimir import EnergyDensityResult, freespace_density, regularized_density, \
    renormalized_density
from .dynamics import (EvolutionResult, MirrorSpec, coupling_parameter, evolve,
                       force_histories, force_x, force_xdot)
from .energetics import (EnergyReport, balance_report, dissipated_energy_freq,
                         dissipated_energy_time, pair_concentration,
                         radiated_energy, transition_probability)
from .errors import DomainError, NumericalError
from .kernels import MirrorKernels
from .thermal import ThermalSpectrum
from .trajectory import (Spectrum, TimeGrid, Trajectory, finite_difference_velocity,
                         gaussian_pulse, inverse_spectrum, parseval_residual,
                         spectrum_of, windowed_sine)

__all__ = [
    "CavitySpec", "CouplingMatrix", "completeness_residual", "coupling_coefficient",
    "coupling_matrix", "mode_frequency", "mode_overlap_integral",
    "EnergyDensityResult", "freespace_density", "regularized_density",
    "renormalized_density",
    "EvolutionResult", "MirrorSpec", "coupling_parameter", "evolve",
    "force_histories", "force_x", "force_xdot",
    "EnergyReport", "balance_report", "dissipated_energy_freq",
    "dissipated_energy_time", "pair_concentration", "radiated_energy",
    "transition_probability",
    "DomainError", "NumericalError",
    "MirrorKernels", "ThermalSpectrum",
    "Spectrum", "TimeGrid", "Trajectory", "finite_difference_velocity",
    "gaussian_pulse", "inverse_spectrum", "parseval_residual", "spectrum_of",
    "windowed_sine",
]

__version__ = "0.1.0"
