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
from typing import Callable, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import zeta

from hmftools.errors import ConvergenceError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_TERMS = 1_000_000


class MatsubaraSum(NamedTuple):
    value: float
    error_bound: float
    n_terms: int


def matsubara_frequencies(n, beta: float) -> np.ndarray:
    """Bosonic Matsubara frequencies ϖ_n = 2πn/β."""
    return 2.0 * np.pi * np.asarray(n, dtype=float) / beta


def asymptotic_tail(leading: Sequence[Tuple[float, int]], beta: float, n_terms: int) -> float:
    """Closed form of Σ_{n>N} Σ_j a_j/ϖ_n^{p_j} through the Hurwitz zeta function.

    For p = 2 this is the trigamma function ψ′(N + 1).
    """
    scale = beta / (2.0 * np.pi)
    return float(sum(a * scale**p * zeta(p, n_terms + 1) for a, p in leading))


def matsubara_sum(
    terms: Callable[[np.ndarray], np.ndarray],
    beta: float,
    leading: Sequence[Tuple[float, int]] = (),
    tol: float = DEFAULT_TOL,
    atol: float = 0.0,
    max_terms: int = MAX_TERMS,
    block: int = 64,
) -> MatsubaraSum:
    """
    Sums Σ_{n≥1} terms(n) over the Matsubara index with tail acceleration.

    The asymptotic expansion of the summand, ``leading = [(a_j, p_j), ...]`` meaning Σ_j a_j/ϖ_n^{p_j}, is
    subtracted term by term and its full sum over n ≥ 1 is added back in closed form. Only the residual, which decays
    faster than every leading power, is summed explicitly. Terms are requested in blocks of doubling size until the residual
    tail estimate max|r_n|·N over the last block falls below ``max(tol·|S|, atol)``.

    :param terms: vectorized callable returning the summand for an integer array of Matsubara indices n ≥ 1.
    :param beta: inverse temperature.
    :param leading: asymptotic coefficients and powers of the summand in ϖ_n.
    :param tol: relative tolerance.
    :param atol: absolute tolerance floor, used when the sum is small compared to other contributions.
    :param max_terms: cap on the number of explicit terms.
    :returns: the sum, the final error bound and the number of explicit terms.
    """
    if beta <= 0:
        raise ValueError(f"Inverse temperature must be positive, got {beta}")
    if min((p for _, p in leading), default=2) <= 1:
        raise ValueError("Leading powers must exceed 1 for the tail to converge")

    total = 0.0
    n_terms = 0
    bound = math.inf
    while n_terms < max_terms:
        upper = min(max(2 * n_terms, block), max_terms)
        n = np.arange(n_terms + 1, upper + 1)
        w = matsubara_frequencies(n, beta)
        residual = np.asarray(terms(n), dtype=float)
        for a, p in leading:
            residual = residual - a / w**p
        total += float(np.sum(residual))
        n_terms = upper

        bound = float(np.max(np.abs(residual))) * n_terms
        value = total + asymptotic_tail(leading, beta, 0)
        if bound <= max(tol * abs(value), atol):
            logger.debug(f"Matsubara sum converged with {n_terms} terms, error bound {bound:.3g}")
            return MatsubaraSum(value, bound, n_terms)

    raise ConvergenceError(
        f"Matsubara sum did not reach tolerance {tol:g} within {max_terms} terms (error bound {bound:.3g})",
        error_bound=bound,
    )
