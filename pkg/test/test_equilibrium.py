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
import math

import numpy as np
import pytest
from pytest import approx
from scipy import integrate

from hmftools.equilibrium import (
    EquilibriumState,
    effective_frequency,
    entanglement_entropy,
    equilibrium_variances,
    bose_occupation,
    log_two_sinh_half,
    mean_force_hamiltonian,
    thermal_variance,
)
from hmftools.errors import CriticalPointError, DomainError, StabilityError
from hmftools.response import ModelParams, chi_tilde
from hmftools.thermo import canonical_reference


def _spectral_variances(params):
    """Direct quadrature of the fluctuation-dissipation integrals over real frequencies."""

    def weight(w):
        # Im χ̃(ω) coth(βω/2)/π, finite at ω → 0
        x = 0.5 * params.beta * w
        return float(np.imag(chi_tilde(params, w))) / w * (x / math.tanh(x)) * 2.0 / (params.beta * math.pi)

    var_q, _ = integrate.quad(weight, 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=500)
    var_p, _ = integrate.quad(
        lambda w: weight(w) * w**2 / params.omega_s**2, 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=500
    )
    return var_q, var_p


def _partial_sum_variances(params, n_max=10_000_000, chunk=1_000_000):
    """Plain Matsubara partial sums up to n_max, with χ̃(iϖ) = Ω/(ϖ² + Ω² − 2ηγΩ/(γ + ϖ)) written out."""
    beta, omega, eta, gamma = params.beta, params.omega_s, params.eta_eff, params.gamma
    sum_q = sum_p = 0.0
    for start in range(1, n_max + 1, chunk):
        w = 2.0 * np.pi * np.arange(start, min(start + chunk, n_max + 1), dtype=float) / beta
        static = omega**2 - 2.0 * eta * gamma * omega / (gamma + w)
        sum_q += float(np.sum(omega / (w**2 + static)))
        sum_p += float(np.sum(static / (w**2 + static)))
    var_q = (1.0 / (omega - 2.0 * eta) + 2.0 * sum_q) / beta
    var_p = (1.0 + 2.0 * sum_p) / (beta * omega)
    return var_q, var_p


def test_thermal_variance():
    assert thermal_variance(2.0) == approx(0.5 / math.tanh(1.0), rel=1e-14)
    assert thermal_variance(800.0) == 0.5
    assert bose_occupation(1e-3) == approx(1.0 / math.expm1(1e-3), rel=1e-14)
    assert log_two_sinh_half(3.0) == approx(math.log(2.0 * math.sinh(1.5)), rel=1e-14)
    assert log_two_sinh_half(2000.0) == approx(1000.0)


def test_uncoupled_exact(uncoupled_params):
    beta = uncoupled_params.beta
    state = equilibrium_variances(uncoupled_params)
    expected = 0.5 / math.tanh(0.5 * beta)
    assert state.var_q == approx(expected, rel=1e-9)
    assert state.var_p == approx(expected, rel=1e-9)
    assert state.nu == approx(expected, rel=1e-9)
    assert state.cov_qp == 0.0
    assert effective_frequency(state, beta) == approx(1.0, rel=1e-9)
    assert entanglement_entropy(state) == approx(canonical_reference(beta).s_beta, rel=1e-9)


@pytest.mark.parametrize(
    "model_params", [(0.2, 2.0, 5.0), (0.05, 1.0, 1.0), (0.45, 10.0, 1.0), (0.3, 2.0, 20.0)], indirect=True
)
def test_variances_against_spectral_quadrature(model_params):
    state = equilibrium_variances(model_params)
    var_q, var_p = _spectral_variances(model_params)
    assert state.var_q == approx(var_q, rel=1e-6)
    assert state.var_p == approx(var_p, rel=1e-6)
    assert state.error_bound < 1e-8


@pytest.mark.parametrize("eta", [0.1, 0.3, 0.45])
@pytest.mark.parametrize("beta", [0.5, 5.0, 20.0])
def test_variances_against_partial_sums(eta, beta):
    params = ModelParams.drude(eta=eta, gamma=2.0, beta=beta)
    state = equilibrium_variances(params)
    var_q, var_p = _partial_sum_variances(params)
    assert state.var_q == approx(var_q, rel=1e-6)
    assert state.var_p == approx(var_p, rel=1e-6)
    assert state.nu >= 0.5


def test_variances_physical(stable_params):
    state = equilibrium_variances(stable_params)
    assert state.nu > 0.5
    assert state.var_q > thermal_variance(stable_params.beta)
    omega_eff = effective_frequency(state, stable_params.beta)
    assert omega_eff > 0.0
    assert state.omega_eff == approx(omega_eff)
    assert 0.5 / math.tanh(0.5 * stable_params.beta * omega_eff) == approx(state.nu, rel=1e-12)


def test_position_variance_grows_towards_critical_point():
    values = [equilibrium_variances(ModelParams.drude(eta=eta, gamma=2.0)).var_q for eta in (0.1, 0.3, 0.45, 0.49)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_variances_require_stability(critical_params, unstable_params):
    with pytest.raises(CriticalPointError):
        equilibrium_variances(critical_params)
    with pytest.raises(StabilityError):
        equilibrium_variances(unstable_params)


@pytest.mark.parametrize("eta", [0.2, 0.8, 3.0])
def test_counterterm_variances(eta):
    params = ModelParams.drude(eta=eta, gamma=2.0)
    state = equilibrium_variances(params, counterterm=True)
    assert state.nu > 0.5
    # the counter-term restores the bare static stiffness, so χ̃(0) = 1/Ω_S
    assert state.var_q < equilibrium_variances(ModelParams.drude(eta=0.45, gamma=2.0)).var_q


def test_counterterm_against_spectral_quadrature():
    params = ModelParams.drude(eta=0.8, gamma=2.0)
    state = equilibrium_variances(params, counterterm=True)

    def weight(w):
        x = 0.5 * params.beta * w
        chi = chi_tilde(params, w, counterterm=True)
        return float(np.imag(chi)) / w * (x / math.tanh(x)) * 2.0 / (params.beta * math.pi)

    var_q, _ = integrate.quad(weight, 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=500)
    assert state.var_q == approx(var_q, rel=1e-6)


def test_effective_frequency_domain():
    state = EquilibriumState.from_variances(0.5, 0.5, beta=5.0, occupation=0.0)
    with pytest.raises(DomainError):
        effective_frequency(state, 5.0)
    assert entanglement_entropy(state) == 0.0
    with pytest.raises(DomainError):
        EquilibriumState.from_variances(0.4, 0.4, beta=5.0)


def test_mean_force_hamiltonian(stable_params):
    beta = stable_params.beta
    state = equilibrium_variances(stable_params)
    hamiltonian = mean_force_hamiltonian(state, beta)
    a, b = hamiltonian.q_coefficient, hamiltonian.p_coefficient
    # thermal state of a q̂² + b p̂² reproduces both variances
    frequency = 2.0 * math.sqrt(a * b)
    assert frequency == approx(hamiltonian.omega_eff)
    coth = 1.0 / math.tanh(0.5 * beta * frequency)
    assert 0.5 * math.sqrt(b / a) * coth == approx(state.var_q, rel=1e-12)
    assert 0.5 * math.sqrt(a / b) * coth == approx(state.var_p, rel=1e-12)
    assert hamiltonian.symmetric_coefficient == approx(0.5 * hamiltonian.omega_eff)


def test_mean_force_hamiltonian_normalization(stable_params):
    beta = stable_params.beta
    state = equilibrium_variances(stable_params)
    hamiltonian = mean_force_hamiltonian(state, beta, free_energy=0.0)
    # with zero free energy Tr e^{−βH*} = 1
    log_trace = -beta * hamiltonian.offset - log_two_sinh_half(beta * hamiltonian.omega_eff)
    assert log_trace == approx(0.0, abs=1e-12)
    # ⟨H*⟩ = Ω_eff ν + offset
    assert hamiltonian.expectation(state) == approx(hamiltonian.omega_eff * state.nu + hamiltonian.offset)
