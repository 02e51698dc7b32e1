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

from hmftools.bath import (
    DrudeBath,
    SpectralFunction,
    correlation_function_quadrature,
    correlation_modes,
    phi_tilde,
    phi_tilde_imaginary,
    reorganization_energy,
    validate_modes,
)
from hmftools.errors import ConvergenceError, DomainError, PoleCollisionError


@pytest.fixture(scope="module")
def bath():
    return DrudeBath(eta=0.2, gamma=2.0)


@pytest.mark.parametrize("eta, gamma", [(-0.1, 1.0), (0.1, 0.0), (0.1, -2.0), (math.inf, 1.0), (0.1, math.nan)])
def test_drude_bath_invalid(eta, gamma):
    with pytest.raises(ValueError):
        DrudeBath(eta=eta, gamma=gamma)


def test_phi_tilde(bath):
    assert phi_tilde(bath, 0.0) == approx(0.4)
    assert reorganization_energy(bath) == approx(0.2)
    assert phi_tilde(bath, 1.0) == approx(0.8 / (2.0 - 1.0j))
    assert bath.scaled(0.5).eta == approx(0.05)


def test_phi_tilde_imaginary_axis(bath):
    omega = np.array([0.0, 0.5, 3.0, 40.0])
    assert phi_tilde_imaginary(bath, omega) == approx(np.real(phi_tilde(bath, 1j * omega)))
    assert phi_tilde_imaginary(bath, omega) == approx(0.8 / (2.0 + omega))


def test_phi_tilde_pole(bath):
    with pytest.raises(DomainError) as excinfo:
        phi_tilde(bath, -2.0j)
    assert excinfo.value.location == approx(-2.0j)
    with pytest.raises(DomainError):
        phi_tilde_imaginary(bath, -2.0)


def test_spectral_density(bath):
    omega = np.linspace(0.0, 10.0, 11)
    assert bath.spectral_density(omega) == approx(np.imag(phi_tilde(bath, omega)))
    assert bath.spectral_density(0.0) == 0.0
    # (1/π)∫ J(ω)/ω dω is the reorganization energy
    value, _ = integrate.quad(lambda w: bath.spectral_density(w) / w, 0.0, np.inf)
    assert value / np.pi == approx(0.2, rel=1e-8)


def test_response_function(bath):
    # φ̃(ω) = ∫₀^∞ φ(t) e^{iωt} dt
    re, _ = integrate.quad(lambda t: bath.response_function(t) * math.cos(t), 0.0, np.inf)
    im, _ = integrate.quad(lambda t: bath.response_function(t) * math.sin(t), 0.0, np.inf)
    assert complex(re, im) == approx(phi_tilde(bath, 1.0), rel=1e-8)


def test_integrated_density(bath):
    generic = SpectralFunction.integrated_density(bath, 0.3, 7.0)
    assert bath.integrated_density(0.3, 7.0) == approx(generic, rel=1e-10)
    assert bath.integrated_density(np.array([0.0, 1.0]), np.array([1.0, 2.0])).shape == (2,)


def test_correlation_modes_coefficients(bath):
    beta = 5.0
    expansion = correlation_modes(bath, beta, n_modes=4)
    assert expansion.n_modes == 4
    assert expansion.n_matsubara == 3
    assert expansion.rates[0] == approx(2.0)
    assert expansion.amplitudes[0] == approx(0.4 * (1.0 / math.tan(5.0) - 1.0j))
    nu1 = 2.0 * math.pi / beta
    assert expansion.rates[1] == approx(nu1)
    assert expansion.amplitudes[1] == approx(4.0 * 0.4 * nu1 / ((nu1**2 - 4.0) * beta))
    # Im C(t) = −ηγe^{−γt} is carried by mode 0 alone
    assert np.imag(expansion.correlation(np.array([0.0, 1.0]))) == approx([-0.4, -0.4 * math.exp(-2.0)])
    assert expansion.warnings


def test_correlation_modes_adaptive(bath):
    expansion = correlation_modes(bath, 5.0)
    assert not expansion.warnings
    assert expansion.n_matsubara > 100
    assert len(expansion.modes) == expansion.n_modes


def test_correlation_modes_uncoupled():
    expansion = correlation_modes(DrudeBath(eta=0.0, gamma=1.0), 2.0)
    assert expansion.n_modes == 1
    assert expansion.correlation(1.0) == 0.0


def test_pole_collision(bath):
    # βγ = 2π
    with pytest.raises(PoleCollisionError):
        correlation_modes(bath, math.pi)
    correlation_modes(bath, math.pi * (1.0 + 1e-6), n_modes=8)


def test_correlation_negative_time(bath):
    with pytest.raises(DomainError):
        correlation_modes(bath, 5.0, n_modes=4).correlation(-1.0)


@pytest.mark.parametrize("beta", [1.0, 5.0])
def test_modes_against_quadrature(bath, beta):
    expansion = correlation_modes(bath, beta)
    assert validate_modes(expansion, bath, [0.25, 1.0, 3.0], atol=1e-6) < 1e-6


def test_modes_too_few(bath):
    expansion = correlation_modes(bath, 5.0, n_modes=2)
    with pytest.raises(ConvergenceError):
        validate_modes(expansion, bath, [0.05], atol=1e-8)


def test_quadrature_requires_positive_time(bath):
    with pytest.raises(DomainError):
        correlation_function_quadrature(bath, 5.0, 0.0)


@pytest.mark.parametrize("beta, n_matsubara", [(5.0, 4), (5.0, 40), (50.0, 20)])
def test_matsubara_tail(bath, beta, n_matsubara):
    k = np.arange(n_matsubara + 1, 2_000_001)
    nu = 2.0 * np.pi * k / beta
    ck = 4.0 * bath.eta * bath.gamma * nu / ((nu**2 - bath.gamma**2) * beta)
    tail = bath.matsubara_tail(beta, n_matsubara)
    # the explicit δ weight sum stops at 2e6 terms and misses a remainder of relative order 1e-5
    assert tail.delta_weight == approx(np.sum(2.0 * ck / nu), rel=1e-4)
    assert tail.boundary_weight == approx(np.sum(ck / nu**2), rel=1e-9)


def test_matsubara_tail_requires_modes_above_cutoff(bath):
    with pytest.raises(ValueError):
        bath.matsubara_tail(50.0, 10)
