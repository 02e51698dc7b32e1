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
Bath spectral functions and the exponential decomposition of the bath correlation function.

Units are ħ = k_B = 1 with energies measured in units of the system frequency. The Drude response transform is
φ̃_E(ω) = 2ηγ/(γ − iω), so that φ̃_E(0) = 2η defines the reorganization energy η.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import psi, zeta

from hmftools.errors import ConvergenceError, DomainError, PoleCollisionError
from hmftools.utils.matsubara import matsubara_frequencies

logger = logging.getLogger(__name__)

POLE_RTOL = 1e-12
MODE_RTOL = 1e-10
MAX_MODES = 1_000_000
POLE_COLLISION_RTOL = 1e-8

ArrayLike = Union[float, complex, np.ndarray]


class SpectralFunction(ABC):
    """Interface of a bosonic bath characterised by its response transform φ̃_E(ω)."""

    @abstractmethod
    def phi_tilde(self, omega: ArrayLike) -> ArrayLike:
        """Response transform φ̃_E(ω) for real or complex frequency ω."""
        pass

    @abstractmethod
    def phi_tilde_imaginary(self, omega: ArrayLike) -> ArrayLike:
        """Response transform on the imaginary axis, φ̃_E(iω), which is real for real ω."""
        pass

    @abstractmethod
    def spectral_density(self, omega: ArrayLike) -> ArrayLike:
        """J(ω) = Im φ̃_E(ω) for real ω."""
        pass

    @abstractmethod
    def response_function(self, t: ArrayLike) -> ArrayLike:
        """Time-domain response φ_E(t) = i⟨[F̂_E(t), F̂_E(0)]⟩ for t ≥ 0."""
        pass

    def reorganization_energy(self) -> float:
        return 0.5 * float(np.real(self.phi_tilde(0.0)))

    def integrated_density(self, lower: float, upper: float) -> float:
        """∫ J(ω) dω over [lower, upper]."""
        value, _ = integrate.quad(lambda w: float(self.spectral_density(w)), lower, upper)
        return value


@dataclass(frozen=True)
class DrudeBath(SpectralFunction):
    """Drude (Debye) bath with reorganization energy ``eta`` and cutoff rate ``gamma``."""

    eta: float
    gamma: float

    def __post_init__(self):
        if not (self.eta >= 0.0 and math.isfinite(self.eta)):
            raise ValueError(f"Reorganization energy eta must be finite and non-negative, got {self.eta}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"Drude cutoff gamma must be finite and positive, got {self.gamma}")

    def scaled(self, lam: float) -> "DrudeBath":
        """The bath seen through the coupling λV_SE, φ̃_E → λ²φ̃_E."""
        return DrudeBath(eta=lam**2 * self.eta, gamma=self.gamma)

    def phi_tilde(self, omega: ArrayLike) -> ArrayLike:
        omega = np.asarray(omega, dtype=complex)
        denominator = self.gamma - 1j * omega
        if np.any(np.abs(denominator) < POLE_RTOL * self.gamma):
            raise DomainError(f"phi_tilde evaluated at its pole ω = {-1j * self.gamma}", location=-1j * self.gamma)
        return _squeeze(2.0 * self.eta * self.gamma / denominator)

    def phi_tilde_imaginary(self, omega: ArrayLike) -> ArrayLike:
        omega = np.asarray(omega, dtype=float)
        denominator = self.gamma + omega
        if np.any(np.abs(denominator) < POLE_RTOL * self.gamma):
            raise DomainError(f"phi_tilde evaluated at its pole iω with ω = {-self.gamma}", location=-self.gamma)
        return _squeeze(2.0 * self.eta * self.gamma / denominator)

    def spectral_density(self, omega: ArrayLike) -> ArrayLike:
        omega = np.asarray(omega, dtype=float)
        return _squeeze(2.0 * self.eta * self.gamma * omega / (self.gamma**2 + omega**2))

    def response_function(self, t: ArrayLike) -> ArrayLike:
        t = np.asarray(t, dtype=float)
        return _squeeze(2.0 * self.eta * self.gamma * np.exp(-self.gamma * t))

    def integrated_density(self, lower: ArrayLike, upper: ArrayLike) -> ArrayLike:
        lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
        return _squeeze(self.eta * self.gamma * np.log((self.gamma**2 + upper**2) / (self.gamma**2 + lower**2)))

    def matsubara_tail(self, beta: float, n_matsubara: int) -> "MarkovTail":
        """
        Markovian weights of the Matsubara modes k > n_matsubara dropped from the correlation function.

        For ν_k ≫ all other rates a dropped mode acts as c_k e^{−ν_k|τ|} ≈ (2c_k/ν_k)δ(τ) with a boundary correction
        −c_k/ν_k² at each end of a finite time interval. The sums over k are evaluated in closed form.

        :param beta: inverse temperature.
        :param n_matsubara: index of the last retained Matsubara mode; must satisfy 2π(n+1)/β > γ.
        :returns: the δ-function weight Σ 2c_k/ν_k and the boundary weight Σ c_k/ν_k².
        """
        a = beta * self.gamma / (2.0 * np.pi)
        first = n_matsubara + 1
        if first <= a:
            raise ValueError(
                f"Tail closure needs the dropped modes above the Drude cutoff: n_matsubara={n_matsubara}, "
                f"βγ/2π={a:.6g}"
            )
        scale = beta / (2.0 * np.pi)
        # Σ_{k≥first} 1/(k² − a²) and Σ_{k≥first} 1/(k(k² − a²))
        if a < 0.5 * first:
            s2, s3 = 0.0, 0.0
            m = 0
            while True:
                t2 = a ** (2 * m) * zeta(2 * m + 2, first)
                t3 = a ** (2 * m) * zeta(2 * m + 3, first)
                s2 += t2
                s3 += t3
                if t2 <= 1e-17 * s2 and t3 <= 1e-17 * s3:
                    break
                m += 1
        else:
            s2 = (psi(first + a) - psi(first - a)) / (2.0 * a)
            s3 = (2.0 * psi(first) - psi(first - a) - psi(first + a)) / (2.0 * a**2)

        delta_weight = 8.0 * self.eta * self.gamma / beta * scale**2 * s2
        boundary_weight = 4.0 * self.eta * self.gamma / beta * scale**3 * s3
        return MarkovTail(float(delta_weight), float(boundary_weight))


class MarkovTail(NamedTuple):
    delta_weight: float
    boundary_weight: float


@dataclass(frozen=True, eq=False)
class MatsubaraExpansion:
    """
    Exponential decomposition C(t) = Σ_k c_k e^{−ν_k t} of the bath correlation function for t ≥ 0.

    Mode 0 is the Drude pole ν_0 = γ, modes k ≥ 1 are the Matsubara poles ν_k = 2πk/β.
    """

    amplitudes: np.ndarray
    rates: np.ndarray
    beta: float
    n_matsubara: int
    warnings: Tuple[str, ...] = field(default=())

    @property
    def modes(self) -> List[Tuple[complex, float]]:
        return list(zip(self.amplitudes.tolist(), self.rates.tolist()))

    @property
    def n_modes(self) -> int:
        return len(self.rates)

    def correlation(self, t: ArrayLike) -> ArrayLike:
        """Reconstructed C(t) for t ≥ 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("The mode expansion is valid for t ≥ 0 only")
        values = np.exp(-np.multiply.outer(t, self.rates)) @ self.amplitudes
        return _squeeze(values)


def phi_tilde(bath: SpectralFunction, s: ArrayLike) -> ArrayLike:
    """
    Bath response transform φ̃_E(s) at real-frequency argument s.

    For the Drude bath this is 2ηγ/(γ − is). Complex arguments are accepted, so φ̃_E(iω) = 2ηγ/(γ + ω).

    :raises DomainError: at the pole s = −iγ.
    """
    return bath.phi_tilde(s)


def phi_tilde_imaginary(bath: SpectralFunction, omega: ArrayLike) -> ArrayLike:
    """Real-valued φ̃_E(iω) for real ω ≠ −γ."""
    return bath.phi_tilde_imaginary(omega)


def reorganization_energy(bath: SpectralFunction) -> float:
    """η = φ̃_E(0)/2."""
    eta = bath.reorganization_energy()
    if isinstance(bath, DrudeBath) and not math.isclose(eta, bath.eta, rel_tol=1e-14, abs_tol=0.0):
        raise ValueError(f"Reorganization energy {eta} disagrees with the stored value {bath.eta}")
    return eta


def _check_pole_collision(bath: DrudeBath, beta: float):
    a = beta * bath.gamma / (2.0 * np.pi)
    k = round(a)
    if k >= 1 and abs(a - k) < POLE_COLLISION_RTOL * max(1.0, a):
        raise PoleCollisionError(
            f"Drude cutoff γ={bath.gamma} coincides with Matsubara frequency ϖ_{k} at β={beta}; "
            f"shift γ by a small amount (e.g. γ·(1 + 1e-6))",
            location=bath.gamma,
        )


def _drude_matsubara_amplitudes(bath: DrudeBath, beta: float, k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    nu = matsubara_frequencies(k, beta)
    return 4.0 * bath.eta * bath.gamma * nu / ((nu**2 - bath.gamma**2) * beta), nu


def correlation_modes(
    bath: DrudeBath, beta: float, n_modes: Optional[int] = None, rtol: float = MODE_RTOL
) -> MatsubaraExpansion:
    """
    Exponential mode decomposition of ⟨F̂_E(t)F̂_E(0)⟩ for the Drude bath.

    The amplitudes are the residues of the fluctuation-dissipation integral
    C(t) = (1/π)∫₀^∞ dω J(ω)[coth(βω/2) cos ωt − i sin ωt] at the Drude pole and at the Matsubara poles:
    c_0 = ηγ(cot(βγ/2) − i) and c_k = 4ηγν_k/((ν_k² − γ²)β).

    :param bath: Drude bath.
    :param beta: inverse temperature.
    :param n_modes: total number of modes including mode 0. By default Matsubara modes are added until the next
        mode's weight |c_k|/ν_k falls below ``rtol`` times the running sum of weights.
    :param rtol: relative weight threshold of the adaptive rule.
    :returns: the mode expansion, with a warning entry if the retained modes do not meet ``rtol``.
    """
    if not beta > 0:
        raise ValueError(f"Inverse temperature must be positive, got {beta}")
    if n_modes is not None and n_modes < 1:
        raise ValueError(f"n_modes must be at least 1, got {n_modes}")
    _check_pole_collision(bath, beta)

    c0 = bath.eta * bath.gamma * (1.0 / math.tan(0.5 * beta * bath.gamma) - 1j)
    warnings = []

    if n_modes is not None:
        n_matsubara = n_modes - 1
        ck, nu = _drude_matsubara_amplitudes(bath, beta, np.arange(1, n_matsubara + 1))
        weights = np.abs(ck) / nu
        if bath.eta > 0:
            following_c, following_nu = _drude_matsubara_amplitudes(bath, beta, np.array([n_matsubara + 1]))
            following = float(np.abs(following_c[0]) / following_nu[0])
            running = abs(c0) / bath.gamma + float(np.sum(weights))
            if following >= rtol * running:
                warnings.append(
                    f"n_modes={n_modes} drops modes with relative weight {following / running:.3g} above {rtol:g}"
                )
    elif bath.eta == 0.0:
        n_matsubara = 0
        ck, nu = np.zeros(0), np.zeros(0)
    else:
        n_matsubara = None
        block = 64
        while block <= 2 * MAX_MODES:
            k = np.arange(1, min(block, MAX_MODES) + 1)
            ck, nu = _drude_matsubara_amplitudes(bath, beta, k)
            weights = np.abs(ck) / nu
            running = abs(c0) / bath.gamma + np.concatenate(([0.0], np.cumsum(weights)[:-1]))
            below = np.nonzero((weights < rtol * running) & (nu > bath.gamma))[0]
            if below.size:
                n_matsubara = int(below[0])
                break
            if block >= MAX_MODES:
                break
            block *= 2
        if n_matsubara is None:
            n_matsubara = MAX_MODES
            warnings.append(f"mode count capped at {MAX_MODES} before reaching relative weight {rtol:g}")
        ck, nu = ck[:n_matsubara], nu[:n_matsubara]

    for message in warnings:
        logger.warning(message)
    logger.debug(f"Correlation expansion at β={beta}: {n_matsubara} Matsubara modes")

    return MatsubaraExpansion(
        amplitudes=np.concatenate(([c0], ck.astype(complex))),
        rates=np.concatenate(([bath.gamma], nu)),
        beta=beta,
        n_matsubara=n_matsubara,
        warnings=tuple(warnings),
    )


def _x_coth_x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x**2 / 3.0, safe / np.tanh(safe))


def correlation_function_quadrature(bath: SpectralFunction, beta: float, t: float) -> complex:
    """
    Direct Fourier quadrature of the fluctuation-dissipation integral for C(t), t > 0.

    Independent of the residue expansion and used to validate it. Re C(0) diverges for the Drude bath, so t must be
    strictly positive.
    """
    if not t > 0:
        raise DomainError(f"Quadrature of the bath correlation requires t > 0, got {t}", location=t)

    def symmetric(w):
        # J(ω)coth(βω/2) written to stay finite at ω = 0
        w = max(w, np.finfo(float).tiny)
        return float(bath.spectral_density(w)) / w * float(_x_coth_x(0.5 * beta * w)) * 2.0 / beta

    real, real_err = integrate.quad(symmetric, 0.0, np.inf, weight="cos", wvar=t, limlst=200)
    imag, imag_err = integrate.quad(lambda w: bath.spectral_density(w), 0.0, np.inf, weight="sin", wvar=t, limlst=200)
    logger.debug(f"FDT quadrature at t={t}: errors {real_err:.2g}, {imag_err:.2g}")
    return complex(real / np.pi, -imag / np.pi)


def validate_modes(
    expansion: MatsubaraExpansion, bath: SpectralFunction, times: Sequence[float], atol: float = 1e-6
) -> float:
    """
    Compares the mode sum with direct quadrature at ``times`` and returns the largest absolute deviation.

    :raises ConvergenceError: if the deviation exceeds ``atol``.
    """
    deviation = 0.0
    for t in times:
        exact = correlation_function_quadrature(bath, expansion.beta, t)
        deviation = max(deviation, abs(complex(expansion.correlation(t)) - exact))
    if deviation > atol:
        raise ConvergenceError(
            f"Mode expansion deviates from quadrature by {deviation:.3g} (limit {atol:g})", error_bound=deviation
        )
    return deviation


def _squeeze(values: np.ndarray) -> ArrayLike:
    return values.item() if values.ndim == 0 else values
