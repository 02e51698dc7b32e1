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
System response function, the characteristic cubic of the Drude memory equation and its Green's function.

The coordinate obeys q̈ = −Ω_S²q + Ω_S∫₀ᵗφ_E(t−s)q(s)ds − Ω_S F̂_E(t). For the Drude bath the Laplace transform of the
Green's function is Ĝ(s) = (s + γ)/f(s) with f(s) = s³ + γs² + Ω_S²s + (Ω_S − 2λ²η)γΩ_S, and Ĝ(−iω) = χ̃(ω)/Ω_S.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from math import factorial
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from hmftools.bath import DrudeBath
from hmftools.errors import DomainError

logger = logging.getLogger(__name__)

POLE_RTOL = 1e-12
DEGENERATE_RTOL = 1e-7
PAIR_RTOL = 1e-4
SPLIT_DOUBLE = 1e-4
SPLIT_TRIPLE = 1e-2

ArrayLike = Union[float, complex, np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Brownian oscillator parameters in units ħ = k_B = 1."""

    bath: DrudeBath
    beta: float = 5.0
    omega_s: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.omega_s > 0 and math.isfinite(self.omega_s)):
            raise ValueError(f"System frequency omega_s must be positive, got {self.omega_s}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"Inverse temperature beta must be finite and positive, got {self.beta}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"Coupling scale lam must lie in [0, 1], got {self.lam}")

    @classmethod
    def drude(cls, eta: float, gamma: float, beta: float = 5.0, omega_s: float = 1.0, lam: float = 1.0):
        return cls(bath=DrudeBath(eta=eta, gamma=gamma), beta=beta, omega_s=omega_s, lam=lam)

    @property
    def eta(self) -> float:
        return self.bath.eta

    @property
    def gamma(self) -> float:
        return self.bath.gamma

    @property
    def eta_eff(self) -> float:
        """Reorganization energy seen by the system, λ²η."""
        return self.lam**2 * self.bath.eta

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CubicRoots:
    roots: Tuple[complex, complex, complex]
    degenerate: bool
    multiplicities: Tuple[int, ...]

    @property
    def max_real(self) -> float:
        return max(r.real for r in self.roots)

    @property
    def scale(self) -> float:
        return max(abs(r) for r in self.roots)

    def clusters(self) -> List[Tuple[complex, int]]:
        """Distinct roots with their multiplicity."""
        seen = []
        for r, m in zip(self.roots, self.multiplicities):
            if not any(r == s for s, _ in seen):
                seen.append((r, m))
        return seen


class PropagatorValues(NamedTuple):
    g: ArrayLike
    g_dot: ArrayLike
    g_ddot: ArrayLike
    confluent: bool


def chi_tilde(params: ModelParams, s: ArrayLike, counterterm: bool = False) -> ArrayLike:
    """
    Response function χ̃(ω) = Ω_S/(Ω_S² − ω² − Ω_S λ² φ̃_E(ω)) at real or complex frequency ω.

    With ``counterterm`` the reorganization term λ²ηq̂² is included and Ω_S² gains 2λ²ηΩ_S.

    :raises DomainError: at a pole of χ̃.
    """
    omega = np.asarray(s, dtype=complex)
    stiffness = _stiffness(params, counterterm)
    denominator = stiffness - omega**2 - params.omega_s * params.lam**2 * params.bath.phi_tilde(omega)
    _check_pole(denominator, stiffness, omega)
    return _squeeze(params.omega_s / denominator)


def chi_tilde_imaginary(params: ModelParams, omega: ArrayLike, counterterm: bool = False) -> ArrayLike:
    """Real-valued χ̃(iω) = Ω_S/(Ω_S² + ω² − Ω_S λ² φ̃_E(iω)) for real ω ≥ 0."""
    omega = np.asarray(omega, dtype=float)
    stiffness = _stiffness(params, counterterm)
    denominator = stiffness + omega**2 - params.omega_s * params.lam**2 * params.bath.phi_tilde_imaginary(omega)
    _check_pole(denominator, stiffness, 1j * omega)
    return _squeeze(params.omega_s / denominator)


def _stiffness(params: ModelParams, counterterm: bool) -> float:
    stiffness = params.omega_s**2
    if counterterm:
        stiffness += 2.0 * params.eta_eff * params.omega_s
    return stiffness


def _check_pole(denominator: np.ndarray, scale: float, omega: np.ndarray):
    close = np.abs(denominator) < POLE_RTOL * scale
    if np.any(close):
        location = complex(np.broadcast_to(omega, close.shape)[close].flat[0])
        raise DomainError(f"chi_tilde evaluated at a pole, ω = {location}", location=location)


def characteristic_polynomial(params: ModelParams) -> np.ndarray:
    """Coefficients of f(s) in descending degree."""
    omega, gamma = params.omega_s, params.gamma
    return np.array([1.0, gamma, omega**2, (omega - 2.0 * params.eta_eff) * gamma * omega])


def characteristic_roots(params: ModelParams) -> CubicRoots:
    """
    Roots of the characteristic cubic f(s).

    Roots come from the companion matrix eigenvalues followed by one Newton step. A close pair is tested against the
    nearby root of f′, where a double root is well conditioned. Roots closer than ``DEGENERATE_RTOL`` relative to the
    largest root are merged into a multiple root at their mean.
    """
    coefficients = characteristic_polynomial(params)
    poly = np.poly1d(coefficients)
    dpoly = poly.deriv()
    raw = np.roots(coefficients).astype(complex)
    scale = max(float(np.max(np.abs(raw))), params.gamma)

    polished = []
    for r in raw:
        slope = dpoly(r)
        if abs(slope) > math.sqrt(np.finfo(float).eps) * scale**2:
            r = r - poly(r) / slope
        polished.append(complex(r))

    polished = _refine_close_pair(poly, polished, scale)

    groups: List[List[int]] = []
    for i, r in enumerate(polished):
        for group in groups:
            if any(abs(r - polished[j]) < DEGENERATE_RTOL * scale for j in group):
                group.append(i)
                break
        else:
            groups.append([i])

    roots, multiplicities = [], []
    for group in groups:
        center = complex(np.mean([polished[j] for j in group]))
        if abs(center.imag) < 1e-14 * scale:
            center = complex(center.real, 0.0)
        roots.extend([center] * len(group))
        multiplicities.extend([len(group)] * len(group))

    order = sorted(range(3), key=lambda i: (roots[i].real, roots[i].imag))
    degenerate = any(m > 1 for m in multiplicities)
    result = CubicRoots(
        roots=tuple(roots[i] for i in order),
        degenerate=degenerate,
        multiplicities=tuple(multiplicities[i] for i in order),
    )
    logger.debug(f"Characteristic roots {result.roots} (degenerate={degenerate})")
    return result


def _refine_close_pair(poly: np.poly1d, roots: List[complex], scale: float) -> List[complex]:
    """
    Collapses a close pair onto the root c of f′ when its local half-separation h, h² = −2f(c)/f″(c), shows a double
    root within ``DEGENERATE_RTOL``. Otherwise the polished roots are kept.
    """
    close = [(i, j) for i in range(3) for j in range(i + 1, 3) if abs(roots[i] - roots[j]) < PAIR_RTOL * scale]
    if len(close) != 1:
        return roots
    i, j = close[0]
    first, second = poly.deriv(), poly.deriv(2)
    center = 0.5 * (roots[i] + roots[j])
    for _ in range(3):
        curvature = second(center)
        if curvature == 0:
            return roots
        center = center - first(center) / curvature
    half = np.sqrt(complex(-2.0 * poly(center) / second(center)))
    if 2.0 * abs(half) >= DEGENERATE_RTOL * scale:
        return roots
    refined = list(roots)
    refined[i] = refined[j] = complex(center)
    return refined


def split_degenerate_roots(roots: CubicRoots) -> Tuple[np.ndarray, Optional[str]]:
    """
    Distinct nodes approximating a degenerate root set.

    A double root a becomes a ± δ, a triple root becomes a + δ·e^{2πij/3}. Both splittings leave the elementary
    symmetric functions unchanged to the order needed, so symmetric quantities built from the nodes are accurate to
    O(δ²) and O(δ³) respectively.

    :returns: the nodes and a warning message, or None when the roots were already distinct.
    """
    if not roots.degenerate:
        return np.array(roots.roots, dtype=complex), None

    nodes = []
    for center, m in roots.clusters():
        if m == 1:
            nodes.append(center)
        elif m == 2:
            delta = SPLIT_DOUBLE * roots.scale
            nodes.extend([center - delta, center + delta])
        else:
            delta = SPLIT_TRIPLE * roots.scale
            nodes.extend(center + delta * np.exp(2j * np.pi * np.arange(3) / 3))
    message = f"degenerate characteristic roots {roots.roots} split by relative {SPLIT_DOUBLE:g}/{SPLIT_TRIPLE:g}"
    return np.array(nodes, dtype=complex), message


def residue_coefficients(nodes: Sequence[complex], numerator: np.ndarray) -> np.ndarray:
    """Partial fraction coefficients N(s_a)/Π_{b≠a}(s_a − s_b) for distinct nodes."""
    nodes = np.asarray(nodes, dtype=complex)
    coefficients = np.empty(len(nodes), dtype=complex)
    for a, s in enumerate(nodes):
        others = np.delete(nodes, a)
        coefficients[a] = np.polyval(numerator, s) / np.prod(s - others)
    return coefficients


def _taylor(poly: np.ndarray, center: complex, order: int) -> np.ndarray:
    return np.array([np.polyval(np.polyder(poly, j), center) / factorial(j) for j in range(order)], dtype=complex)


def _confluent_residue_sum(numerator: np.ndarray, roots: CubicRoots, t: np.ndarray) -> np.ndarray:
    """Σ over distinct roots of Res[N(s)e^{st}/f(s)], exact for roots of any multiplicity."""
    clusters = roots.clusters()
    total = np.zeros(t.shape, dtype=complex)
    for center, m in clusters:
        others = [s for s, k in clusters if s != center for _ in range(k)]
        g = np.poly(others) if others else np.array([1.0])
        n_series = _taylor(numerator, center, m)
        g_series = _taylor(g, center, m)
        # power series quotient h = N/g around the root
        h = np.zeros(m, dtype=complex)
        for j in range(m):
            h[j] = (n_series[j] - np.dot(g_series[1 : j + 1], h[:j][::-1])) / g_series[0]
        polynomial_in_t = sum(h[m - 1 - j] * t**j / factorial(j) for j in range(m))
        total += np.exp(center * t) * polynomial_in_t
    return total


def propagator(params: ModelParams, t: ArrayLike) -> PropagatorValues:
    """
    Green's function G(t) of the memory equation with its first two time derivatives.

    G(t) = Σ_k (s_k + γ) e^{s_k t}/f′(s_k) over the roots of f. Repeated roots use the exact confluent residue,
    which introduces t·e^{st} terms, and set the ``confluent`` flag. G(0) = 0, Ġ(0) = 1 and G̈(0) = 0.

    :param params: model parameters.
    :param t: time or array of times, t ≥ 0.
    """
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("The propagator is defined for t ≥ 0", location=float(np.min(times)))

    roots = characteristic_roots(params)
    base = np.array([1.0, params.gamma])
    values = []
    for power in range(3):
        numerator = np.concatenate((base, np.zeros(power)))
        values.append(np.real(_confluent_residue_sum(numerator, roots, times)))
    if roots.degenerate:
        logger.debug("Propagator evaluated with the confluent residue formula")
    return PropagatorValues(*(_squeeze(v) for v in values), confluent=roots.degenerate)


def _squeeze(values: np.ndarray) -> ArrayLike:
    return values.item() if values.ndim == 0 else values
