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
Strong-coupling thermodynamics of the oscillator.

Only ln𝒵_S − ln Z_β = −βA_hyb is ever computed. The bath partition function cancels from 𝒵_S = Z_{S+E}/Z_E and is
never needed.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate

from hmftools.equilibrium import (
    entanglement_entropy,
    equilibrium_variances,
    bose_occupation,
    log_two_sinh_half,
    mean_force_hamiltonian,
)
from hmftools.errors import ConvergenceError, CriticalPointError
from hmftools.response import ModelParams, chi_tilde_imaginary
from hmftools.stability import CRITICAL_BAND, require_stable
from hmftools.utils.matsubara import DEFAULT_TOL, MAX_TERMS, matsubara_frequencies, matsubara_sum
from hmftools.utils.numdiff import richardson_derivative

logger = logging.getLogger(__name__)

DERIVATIVE_TOL = 1e-13
DEFAULT_STEP = 1e-3
DERIVATIVE_ATOL = 1e-8
IDENTITY_TOL = 1e-6


class CanonicalReference(NamedTuple):
    z_beta: float
    a_beta: float
    s_beta: float
    e_beta: float
    log_z: float


@dataclass(frozen=True)
class ThermoReport:
    beta: float
    a_hyb: float
    a_therm: float
    a_beta: float
    e_s: float
    e_beta: float
    s_therm: float
    s_ent: float
    s_beta: float
    mean_h_star: float
    mean_h_star_symmetric: float
    subdivision: float
    subdivision_energy_route: float
    route_disagreement: float
    omega_eff: float
    nu: float

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    @property
    def delta_s_therm(self) -> float:
        """S_therm − S_β."""
        return self.s_therm - self.s_beta

    @property
    def delta_s_ent(self) -> float:
        """S_ent − S_β."""
        return self.s_ent - self.s_beta


def canonical_reference(beta: float, omega_s: float = 1.0) -> CanonicalReference:
    """
    Partition function, free energy, entropy and energy of the bare oscillator H_S = (Ω_S/2)(p̂² + q̂²).

    Uses ln(2 sinh(x/2)) = x/2 + ln(1 − e^{−x}) so that large βΩ_S does not overflow.
    """
    if not beta > 0:
        raise ValueError(f"Inverse temperature must be positive, got {beta}")
    x = beta * omega_s
    log_z = -log_two_sinh_half(x)
    occupation = bose_occupation(x)
    return CanonicalReference(
        z_beta=math.exp(log_z),
        a_beta=-log_z / beta,
        s_beta=x * occupation - math.log1p(-math.exp(-x)),
        e_beta=omega_s * (0.5 + occupation),
        log_z=log_z,
    )


def vartheta(params: ModelParams, omega: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Free-energy spectral function ϑ(ω) = (1/2)ln|(Ω_S² + ω²)/(Ω_S² + ω² − Ω_S λ² φ̃_E(iω))|.

    Returns +inf at the exact critical divergence ω = 0, λ²η = Ω_S/2.
    """
    omega = np.asarray(omega, dtype=float)
    a = params.omega_s**2 + omega**2
    x = params.omega_s * params.lam**2 * params.bath.phi_tilde_imaginary(omega) / a
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(x < 1.0, -0.5 * np.log1p(-np.minimum(x, 1.0)), -0.5 * np.log(np.abs(x - 1.0)))
    if np.any(np.isinf(value)):
        logger.warning("ϑ diverges at the critical point λ²η = Ω_S/2, ω = 0")
    return value.item() if value.ndim == 0 else value


def _vartheta_leading(params: ModelParams):
    weight = params.omega_s * params.eta_eff * params.gamma
    return [(weight, 3), (-weight * params.gamma, 4)]


def _require_noncritical(params: ModelParams):
    if abs(params.omega_s - 2.0 * params.eta_eff) < CRITICAL_BAND * params.omega_s:
        raise CriticalPointError(
            f"ϑ(0) = (1/2)ln|Ω_S/(Ω_S − 2λ²η)| diverges at λ²η = Ω_S/2 (λ²η={params.eta_eff})"
        )


def hybridization_free_energy_spectral(
    params: ModelParams, tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS
) -> float:
    """
    Hybridization free energy A_hyb = −(1/β)ϑ(0) − (2/β)Σ_{n≥1} ϑ(ϖ_n).

    Defined on both sides of the critical point; the absolute value inside ϑ selects the second branch for
    λ²η > Ω_S/2.

    :raises CriticalPointError: within the critical band, where ϑ(0) diverges.
    """
    _require_noncritical(params)
    if params.eta_eff == 0.0:
        return 0.0
    beta = params.beta
    theta0 = float(vartheta(params, 0.0))
    total = matsubara_sum(
        lambda n: vartheta(params, matsubara_frequencies(n, beta)),
        beta,
        leading=_vartheta_leading(params),
        tol=tol,
        atol=0.5 * tol * abs(theta0),
        max_terms=max_terms,
    )
    return -(theta0 + 2.0 * total.value) / beta


def _lambda_integrand(params: ModelParams, omega: np.ndarray, lam: float) -> np.ndarray:
    coupled = params.replace(lam=lam)
    return lam * params.bath.phi_tilde_imaginary(omega) * chi_tilde_imaginary(coupled, omega)


def hybridization_free_energy_quadrature(
    params: ModelParams, tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS
) -> float:
    """
    Hybridization free energy by integrating the reversible work over the coupling scale.

    A_hyb = −(1/β)Σ′_n ∫₀^λ dλ′ λ′φ̃_E(iϖ_n)χ̃(iϖ_n; λ′), where Σ′ weighs n = 0 by one and n ≥ 1 by two. The
    λ′-integrals are done by adaptive quadrature, vectorized over blocks of Matsubara frequencies, and do not use
    the closed form ϑ.

    :raises StabilityError: unless λ²η < Ω_S/2, since the λ′ path would cross the critical point.
    """
    require_stable(params)
    if params.eta_eff == 0.0:
        return 0.0
    beta, omega_s, lam = params.beta, params.omega_s, params.lam
    epsrel = 1e-2 * tol

    zero, zero_error = integrate.quad(
        lambda l: float(_lambda_integrand(params, np.asarray(0.0), l)), 0.0, lam, epsabs=0.0, epsrel=epsrel
    )

    def terms(n):
        w = matsubara_frequencies(n, beta)
        # normalise by the first-order term so every component of the vector is of order one
        scale = 0.5 * omega_s * lam**2 * params.bath.phi_tilde_imaginary(w) / (omega_s**2 + w**2)
        values, error = integrate.quad_vec(
            lambda l: _lambda_integrand(params, w, l) / scale, 0.0, lam, epsabs=1e-15, epsrel=epsrel, norm="max"
        )
        return values * scale

    total = matsubara_sum(
        terms, beta, leading=_vartheta_leading(params), tol=tol, atol=0.5 * tol * abs(zero), max_terms=max_terms
    )
    logger.debug(f"Quadrature route: n=0 integral {zero} ± {zero_error:.2g}, {total.n_terms} Matsubara terms")
    return -(zero + 2.0 * total.value) / beta


def hybridization_free_energy_reorg(params: ModelParams, tol: float = 1e-8) -> float:
    """
    Additional hybridization free energy A_hyb^re = 2∫₀^λ dλ′ λ′η⟨q̂²⟩_λ′ of the reorganization counter-term.

    ⟨q̂²⟩_λ′ is the equilibrium variance of the model with H_re = λ′²ηq̂² included, which is stable for every η.
    """
    eta = params.eta
    if eta == 0.0 or params.lam == 0.0:
        return 0.0

    def integrand(lam):
        state = equilibrium_variances(params.replace(lam=lam), tol=1e-2 * tol, counterterm=True)
        return 2.0 * lam * eta * state.var_q

    value, error = integrate.quad(integrand, 0.0, params.lam, epsabs=0.0, epsrel=tol, limit=200)
    if error > 10 * tol * abs(value):
        raise ConvergenceError(f"Counter-term free energy quadrature error {error:.3g} exceeds tolerance", error)
    return value


def _a_hyb_at(params: ModelParams, beta: float) -> float:
    return hybridization_free_energy_spectral(params.replace(beta=beta), tol=DERIVATIVE_TOL)


def internal_energy(params: ModelParams, h: float = DEFAULT_STEP) -> float:
    """
    E_S = −∂_β ln𝒵_S = E_β + ∂_β(βA_hyb), with the derivative from central differences and Richardson
    extrapolation at relative step ``h``.

    :raises DifferentiationError: if the extrapolation table does not converge.
    """
    require_stable(params)
    reference = canonical_reference(params.beta, params.omega_s)
    if params.eta_eff == 0.0:
        return reference.e_beta
    derivative = richardson_derivative(
        lambda b: b * _a_hyb_at(params, b), params.beta, rel_step=h, atol=DERIVATIVE_ATOL
    )
    return reference.e_beta + derivative.value


def thermodynamic_entropy(params: ModelParams, h: float = DEFAULT_STEP) -> float:
    """S_therm = −∂A_therm/∂T = S_β − ∂A_hyb/∂T."""
    require_stable(params)
    reference = canonical_reference(params.beta, params.omega_s)
    if params.eta_eff == 0.0:
        return reference.s_beta
    derivative = richardson_derivative(
        lambda t: _a_hyb_at(params, 1.0 / t), 1.0 / params.beta, rel_step=h, atol=DERIVATIVE_ATOL
    )
    return reference.s_beta - derivative.value


def subdivision_potential(params: ModelParams, h: float = DEFAULT_STEP, tol: float = IDENTITY_TOL) -> ThermoReport:
    """
    Thermodynamic report for one parameter point, including the subdivision potential ℰ.

    ℰ is computed twice: as E_S − ⟨H_S^⋆⟩ with the normalized mean-force Hamiltonian, and as T(S_therm − S_ent).
    The two routes use independent numerical derivatives (in β and in T). The entropy route is reported as
    ``subdivision`` and their difference as ``route_disagreement``.

    :param params: stable model parameters.
    :param h: relative step of the numerical derivatives.
    :param tol: tolerance on the route disagreement, relative to max(1, |ℰ|); exceeding it is logged.
    """
    require_stable(params)
    beta = params.beta
    reference = canonical_reference(beta, params.omega_s)
    state = equilibrium_variances(params)

    if params.eta_eff == 0.0:
        return ThermoReport(
            beta=beta,
            a_hyb=0.0,
            a_therm=reference.a_beta,
            a_beta=reference.a_beta,
            e_s=reference.e_beta,
            e_beta=reference.e_beta,
            s_therm=reference.s_beta,
            s_ent=reference.s_beta,
            s_beta=reference.s_beta,
            mean_h_star=reference.e_beta,
            mean_h_star_symmetric=reference.e_beta,
            subdivision=0.0,
            subdivision_energy_route=0.0,
            route_disagreement=0.0,
            omega_eff=params.omega_s,
            nu=state.nu,
        )

    a_hyb = hybridization_free_energy_spectral(params, tol=DERIVATIVE_TOL)
    a_therm = reference.a_beta + a_hyb
    e_s = internal_energy(params, h)
    s_therm = thermodynamic_entropy(params, h)
    s_ent = entanglement_entropy(state)

    hamiltonian = mean_force_hamiltonian(state, beta, free_energy=a_therm)
    mean_h_star = hamiltonian.expectation(state)
    energy_route = e_s - mean_h_star
    entropy_route = (s_therm - s_ent) / beta
    disagreement = abs(energy_route - entropy_route)
    if disagreement > tol * max(1.0, abs(entropy_route)):
        logger.warning(f"Subdivision potential routes disagree by {disagreement:.3g} at {params}")

    return ThermoReport(
        beta=beta,
        a_hyb=a_hyb,
        a_therm=a_therm,
        a_beta=reference.a_beta,
        e_s=e_s,
        e_beta=reference.e_beta,
        s_therm=s_therm,
        s_ent=s_ent,
        s_beta=reference.s_beta,
        mean_h_star=mean_h_star,
        mean_h_star_symmetric=hamiltonian.symmetric_expectation(state),
        subdivision=entropy_route,
        subdivision_energy_route=energy_route,
        route_disagreement=disagreement,
        omega_eff=hamiltonian.omega_eff,
        nu=state.nu,
    )
