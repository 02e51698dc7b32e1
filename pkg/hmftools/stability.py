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

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import integrate

from hmftools.errors import CriticalPointError, InvariantViolation, StabilityError
from hmftools.response import ModelParams, characteristic_polynomial, characteristic_roots, chi_tilde

logger = logging.getLogger(__name__)

CRITICAL_BAND = 1e-9
ZERO_RTOL = 1e-12
EPSILON_PIVOT = 1e-9


class Classification(Enum):
    STABLE = "Stable"
    CRITICAL = "Critical"
    UNSTABLE = "Unstable"

    @property
    def exit_code(self) -> int:
        return {"Stable": 0, "Critical": 1, "Unstable": 2}[self.value]


class RouthHurwitzResult(NamedTuple):
    passed: bool
    first_column: Tuple[float, ...]
    marginal: bool

    @property
    def sign_changes(self) -> int:
        signs = np.sign(self.first_column)
        return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass(frozen=True)
class StabilityReport:
    classification: Classification
    chi_static: float
    hurwitz_pass: bool
    routh_first_column: Tuple[float, ...]
    max_real_root: float
    roots: Tuple[complex, ...]
    marginal: bool

    @property
    def chi_static_infinite(self) -> bool:
        return math.isinf(self.chi_static)


def routh_array(coefficients: Sequence[float], epsilon: float = EPSILON_PIVOT) -> Tuple[np.ndarray, bool, List[str]]:
    """
    Routh array of a real polynomial of any degree ≥ 1.

    An isolated zero pivot is replaced by ε times the coefficient scale. A row that vanishes entirely is replaced by
    the coefficients of the derivative of the auxiliary polynomial formed from the row above. Either substitution
    marks the array as marginal.

    :param coefficients: polynomial coefficients in descending degree, leading coefficient nonzero.
    :param epsilon: relative size of the substituted pivot.
    :returns: the array, the marginal flag and notes describing each substitution.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 1 or len(c) < 2:
        raise ValueError(f"Routh-Hurwitz test needs a polynomial of degree ≥ 1, got {coefficients}")
    if c[0] == 0:
        raise ValueError("Leading coefficient must be nonzero")
    if c[0] < 0:
        c = -c

    degree = len(c) - 1
    width = degree // 2 + 1
    scale = float(np.max(np.abs(c)))
    zero = ZERO_RTOL * scale

    table = np.zeros((degree + 1, width))
    table[0, : len(c[0::2])] = c[0::2]
    table[1, : len(c[1::2])] = c[1::2]

    marginal = False
    notes = []
    for i in range(1, degree + 1):
        if i >= 2:
            above, above2 = table[i - 1], table[i - 2]
            table[i, :-1] = (above[0] * above2[1:] - above2[0] * above[1:]) / above[0]

        if np.all(np.abs(table[i]) <= zero):
            order = degree - i + 1
            powers = order - 2 * np.arange(width)
            table[i] = np.where(powers > 0, table[i - 1] * powers, 0.0)
            marginal = True
            notes.append(f"row {i} vanished; replaced by the derivative of the auxiliary polynomial of order {order}")

        if abs(table[i, 0]) <= zero:
            table[i, 0] = epsilon * scale
            marginal = True
            notes.append(f"zero pivot in row {i}; replaced by ε={epsilon * scale:g}")

    return table, marginal, notes


def routh_hurwitz(coefficients: Sequence[float]) -> RouthHurwitzResult:
    """
    Routh-Hurwitz test: all roots in the open left half-plane.

    Passes when every first-column entry is strictly positive and no substitution was needed. A marginal array
    fails.
    """
    table, marginal, notes = routh_array(coefficients)
    for note in notes:
        logger.debug(note)
    first_column = tuple(float(v) for v in table[:, 0])
    passed = not marginal and all(v > 0 for v in first_column)
    return RouthHurwitzResult(passed, first_column, marginal)


def classify(params: ModelParams, tol: float = CRITICAL_BAND) -> StabilityReport:
    """
    Classifies the model as Stable, Critical or Unstable.

    The static response χ̃(0+) = 1/(Ω_S − 2λ²η), the Routh-Hurwitz test on the characteristic cubic and the sign of
    the largest real part among its roots are computed independently. Parameters within ``tol``·Ω_S of Ω_S = 2λ²η
    or of zero coupling are Critical. Elsewhere the three criteria must agree.

    :raises InvariantViolation: when the criteria disagree outside the critical band.
    """
    omega = params.omega_s
    eta = params.eta_eff
    margin = omega - 2.0 * eta
    chi_static = math.inf if abs(margin) < tol * omega else float(np.real(chi_tilde(params, 0.0)))

    rh = routh_hurwitz(characteristic_polynomial(params))
    roots = characteristic_roots(params)
    max_real = roots.max_real

    if abs(margin) < tol * omega or eta < tol * omega:
        classification = Classification.CRITICAL
    else:
        by_chi = chi_static > 0
        by_roots = max_real < 0
        if not by_chi == rh.passed == by_roots:
            raise InvariantViolation(
                f"Stability criteria disagree at {params}: χ̃(0+)={chi_static}, Routh-Hurwitz={rh.passed}, "
                f"max Re s={max_real}"
            )
        classification = Classification.STABLE if by_chi else Classification.UNSTABLE

    logger.debug(f"{classification.value}: χ̃(0+)={chi_static}, first column {rh.first_column}")
    return StabilityReport(
        classification=classification,
        chi_static=chi_static,
        hurwitz_pass=rh.passed,
        routh_first_column=rh.first_column,
        max_real_root=max_real,
        roots=roots.roots,
        marginal=rh.marginal,
    )


def require_stable(params: ModelParams, tol: float = CRITICAL_BAND, counterterm: bool = False):
    """
    Raises unless an equilibrium state exists, i.e. χ̃(0+) > 0.

    With the reorganization counter-term the static stiffness is Ω_S² and the model is stable for every η.
    """
    if counterterm:
        return
    margin = params.omega_s - 2.0 * params.eta_eff
    if abs(margin) < tol * params.omega_s:
        raise CriticalPointError(
            f"λ²η={params.eta_eff} is at the critical point Ω_S/2 where χ̃(0+) = 1/(Ω_S − 2λ²η) diverges"
        )
    if margin < 0:
        raise StabilityError(
            f"λ²η={params.eta_eff} exceeds Ω_S/2={params.omega_s / 2}: χ̃(0+) = {1.0 / margin:.6g} is not positive, "
            f"so no equilibrium state exists"
        )


def static_response_from_spectrum(params: ModelParams, epsrel: float = 1e-10) -> float:
    """
    Static response from the absorptive part, χ̃(0+) = (2/π)∫₀^∞ Im χ̃(ω)/ω dω.

    Only defined for stable parameters, where it must equal 1/(Ω_S − 2λ²η).
    """
    require_stable(params)
    if params.eta_eff <= 0:
        raise StabilityError("Without dissipation Im χ̃ is a pair of δ-functions; the integral needs λ²η > 0")

    def integrand(w):
        w = max(w, 1e-12 * params.omega_s)
        return float(np.imag(chi_tilde(params, w))) / w

    value, error = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=epsrel, limit=500)
    logger.debug(f"Kramers-Kronig static response {value} ± {error:.2g}")
    return 2.0 * value / np.pi
