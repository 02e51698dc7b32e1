#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#

from .bath import DrudeBath, MatsubaraExpansion, SpectralFunction, correlation_modes, phi_tilde, reorganization_energy
from .response import ModelParams, characteristic_roots, chi_tilde, chi_tilde_imaginary, propagator
from .stability import Classification, StabilityReport, classify, require_stable
from .equilibrium import (
    EquilibriumState,
    effective_frequency,
    entanglement_entropy,
    equilibrium_variances,
    mean_force_hamiltonian,
)
from .thermo import (
    ThermoReport,
    hybridization_free_energy_quadrature,
    hybridization_free_energy_spectral,
    subdivision_potential,
    vartheta,
)
from .dynamics import CovarianceTrajectory, GaussianState, discretized_bath_oracle, evolve_covariance, evolve_mean
from .errors import HmfError
import logging

logger = logging.getLogger(__name__)
del logging

try:
    from ._version import version as __version__
except ImportError:
    pass


__all__ = [
    "__version__",
    "logger",
    "HmfError",
    "SpectralFunction",
    "DrudeBath",
    "MatsubaraExpansion",
    "correlation_modes",
    "phi_tilde",
    "reorganization_energy",
    "ModelParams",
    "chi_tilde",
    "chi_tilde_imaginary",
    "characteristic_roots",
    "propagator",
    "Classification",
    "StabilityReport",
    "classify",
    "require_stable",
    "EquilibriumState",
    "equilibrium_variances",
    "effective_frequency",
    "entanglement_entropy",
    "mean_force_hamiltonian",
    "ThermoReport",
    "vartheta",
    "hybridization_free_energy_spectral",
    "hybridization_free_energy_quadrature",
    "subdivision_potential",
    "GaussianState",
    "CovarianceTrajectory",
    "evolve_mean",
    "evolve_covariance",
    "discretized_bath_oracle",
]
