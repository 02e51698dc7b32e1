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
"""
Reduced equilibrium state of the oscillator.

The variances follow from the fluctuation-dissipation theorem as Matsubara sums over χ̃(iϖ_n). The reduced state is
Gaussian with zero position-momentum covariance, so it is fixed by its symplectic eigenvalue ν = √(var_q·var_p) and
the ratio var_q/var_p. ν defines the effective frequency Ω_eff and the entanglement entropy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

from scipy.special import xlogy

from hmftools.errors import DomainError
from hmftools.response import ModelParams, chi_tilde_imaginary
from hmftools.stability import require_stable
from hmftools.utils.matsubara import DEFAULT_TOL, MAX_TERMS, matsubara_frequencies, matsubara_sum

logger = logging.getLogger(__name__)

UNCERTAINTY_SLACK = 1e-12


def log_two_sinh_half(x: float) -> float:
    """ln(2 sinh(x/2)) for x > 0 without overflow."""
    return 0.5 * x + math.log1p(-math.exp(-x))


def bose_occupation(x: float) -> float:
    """1/(e^x − 1) for x > 0, zero once e^{−x} underflows."""
    return math.exp(-x) / -math.expm1(-x)


def thermal_variance(beta: float, omega_s: float = 1.0) -> float:
    """(1/2)coth(βΩ_S/2), the quadrature variance of a bare thermal oscillator."""
    return 0.5 + bose_occupation(beta * omega_s)


def _frequency_from_occupation(occupation: float, beta: float) -> float:
    if occupation <= 0.0:
        return math.inf
    return math.log1p(1.0 / occupation) / beta


@dataclass(frozen=True)
class EquilibriumState:
    """
    Gaussian reduced equilibrium state.

    ``occupation`` is ν − 1/2, kept separately because it is the numerically delicate part of ν at low temperature.
    """

    var_q: float
    var_p: float
    nu: float
    omega_eff: float
    occupation: float
    beta: float
    error_bound: float = 0.0

    def __post_init__(self):
        if not (self.var_q > 0 and self.var_p > 0):
            raise ValueError(f"Variances must be positive, got var_q={self.var_q}, var_p={self.var_p}")

    @classmethod
    def from_variances(
        cls, var_q: float, var_p: float, beta: float, occupation: Optional[float] = None, error_bound: float = 0.0
    ) -> "EquilibriumState":
        nu = math.sqrt(var_q * var_p)
        if occupation is None:
            occupation = (var_q * var_p - 0.25) / (nu + 0.5)
        if occupation < -UNCERTAINTY_SLACK:
            raise DomainError(f"Symplectic eigenvalue ν={nu} violates the uncertainty bound ν ≥ 1/2")
        occupation = max(occupation, 0.0)
        return cls(
            var_q=var_q,
            var_p=var_p,
            nu=nu,
            omega_eff=_frequency_from_occupation(occupation, beta),
            occupation=occupation,
            beta=beta,
            error_bound=error_bound,
        )

    @property
    def cov_qp(self) -> float:
        """Symmetrized position-momentum covariance, zero by time-reversal symmetry."""
        return 0.0


@dataclass(frozen=True)
class MeanForceHamiltonian:
    """
    Quadratic Hamiltonian of mean force H_S^⋆ = a_q q̂² + a_p p̂² + c whose Gibbs state at β is the reduced state.

    ``offset`` c carries the normalization, so that e^{−βH_S^⋆}/𝒵_S is the reduced state when the free energy passed
    at construction is −β⁻¹ln𝒵_S.
    """

    omega_eff: float
    q_coefficient: float
    p_coefficient: float
    offset: float

    @property
    def symmetric_coefficient(self) -> float:
        """Ω_eff/2, the coefficient of the symmetric form (Ω_eff/2)(p̂² + q̂²)."""
        return 0.5 * self.omega_eff

    def expectation(self, state: EquilibriumState) -> float:
        return self.q_coefficient * state.var_q + self.p_coefficient * state.var_p + self.offset

    def symmetric_expectation(self, state: EquilibriumState) -> float:
        return self.symmetric_coefficient * (state.var_q + state.var_p)


def equilibrium_variances(
    params: ModelParams, tol: float = DEFAULT_TOL, counterterm: bool = False, max_terms: int = MAX_TERMS
) -> EquilibriumState:
    """
    Equilibrium variances of the reduced state from the fluctuation-dissipation theorem.

    var_q = (1/β)χ̃(0) + (2/β)Σ_{n≥1} χ̃(iϖ_n) and
    var_p = 1/(βΩ_S) + (2/(βΩ_S))Σ_{n≥1}[1 − ϖ_n²χ̃(iϖ_n)/Ω_S], summed with tail acceleration.

    :param params: model parameters, stable region 0 ≤ λ²η < Ω_S/2 unless ``counterterm`` is set.
    :param tol: relative tolerance of both sums.
    :param counterterm: include the reorganization counter-term λ²ηq̂².
    :param max_terms: cap on explicit Matsubara terms.
    :raises StabilityError: outside the stable region.
    :raises ConvergenceError: when ``tol`` cannot be met within ``max_terms``.
    """
    require_stable(params, counterterm=counterterm)
    beta, omega = params.beta, params.omega_s
    eta, gamma = params.eta_eff, params.gamma

    if eta == 0.0:
        occupation = bose_occupation(beta * omega)
        var = 0.5 + occupation
        return EquilibriumState.from_variances(var, var, beta, occupation=occupation)

    stiffness = omega**2 + (2.0 * eta * omega if counterterm else 0.0)
    chi0 = float(chi_tilde_imaginary(params, 0.0, counterterm))

    def q_terms(n):
        return chi_tilde_imaginary(params, matsubara_frequencies(n, beta), counterterm)

    def p_terms(n):
        w = matsubara_frequencies(n, beta)
        static = stiffness - omega * params.lam**2 * params.bath.phi_tilde_imaginary(w)
        return static / (static + w**2)

    sum_q = matsubara_sum(
        q_terms,
        beta,
        leading=[(omega, 2), (-omega * stiffness, 4), (2.0 * omega**2 * eta * gamma, 5)],
        tol=tol,
        atol=tol * 0.5 * chi0,
        max_terms=max_terms,
    )
    sum_p = matsubara_sum(
        p_terms,
        beta,
        leading=[
            (stiffness, 2),
            (-2.0 * omega * eta * gamma, 3),
            (2.0 * omega * eta * gamma**2 - stiffness**2, 4),
        ],
        tol=tol,
        atol=tol * 0.5,
        max_terms=max_terms,
    )

    var_q = (chi0 + 2.0 * sum_q.value) / beta
    var_p = (1.0 + 2.0 * sum_p.value) / (beta * omega)
    error_bound = max(2.0 * sum_q.error_bound / (beta * var_q), 2.0 * sum_p.error_bound / (beta * omega * var_p))
    logger.debug(
        f"Equilibrium variances at {params}: var_q={var_q}, var_p={var_p} "
        f"({sum_q.n_terms}/{sum_p.n_terms} terms, relative error ≤ {error_bound:.2g})"
    )
    return EquilibriumState.from_variances(var_q, var_p, beta, error_bound=error_bound)


def effective_frequency(state: EquilibriumState, beta: float) -> float:
    """
    Effective frequency Ω_eff = (2/β)arcoth(2ν) of the mean-force Hamiltonian.

    :raises DomainError: for ν ≤ 1/2 where arcoth(2ν) is undefined.
    """
    if state.occupation <= 0.0:
        raise DomainError(f"Effective frequency needs ν > 1/2, got ν={state.nu}", location=state.nu)
    return math.log1p(1.0 / state.occupation) / beta


def entanglement_entropy(state: EquilibriumState) -> float:
    """Von Neumann entropy (ν+1/2)ln(ν+1/2) − (ν−1/2)ln(ν−1/2) of the reduced state, zero for ν = 1/2."""
    n = state.occupation
    return float(xlogy(n + 1.0, n + 1.0) - xlogy(n, n))


def mean_force_hamiltonian(state: EquilibriumState, beta: float, free_energy: float = 0.0) -> MeanForceHamiltonian:
    """
    Hamiltonian of mean force of a Gaussian reduced state.

    The quadratic part is (Ω_eff/2)(r p̂² + q̂²/r) with r = √(var_q/var_p), whose thermal state at β reproduces both
    variances. With ``free_energy`` = −β⁻¹ln𝒵_S the offset makes H_S^⋆ = −β⁻¹ln(𝒵_S ρ_S) exactly.
    """
    omega_eff = effective_frequency(state, beta)
    ratio = math.sqrt(state.var_q / state.var_p)
    offset = free_energy - log_two_sinh_half(beta * omega_eff) / beta
    return MeanForceHamiltonian(
        omega_eff=omega_eff,
        q_coefficient=0.5 * omega_eff / ratio,
        p_coefficient=0.5 * omega_eff * ratio,
        offset=offset,
    )
