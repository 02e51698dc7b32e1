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
from typing import Callable, NamedTuple

import numpy as np

from hmftools.errors import DifferentiationError

logger = logging.getLogger(__name__)


class Derivative(NamedTuple):
    value: float
    error: float


def richardson_derivative(
    func: Callable[[float], float],
    x: float,
    rel_step: float = 1e-4,
    levels: int = 1,
    rtol: float = 1e-6,
    atol: float = 1e-9,
) -> Derivative:
    """
    First derivative by central differences refined with Richardson extrapolation.

    The step starts at ``rel_step·|x|`` and is halved ``levels`` times. The error estimate is the difference between
    the two most refined entries of the extrapolation table.

    :param func: scalar function to differentiate.
    :param x: evaluation point, must be nonzero.
    :param rel_step: initial step relative to x.
    :param levels: number of Richardson levels.
    :param rtol: relative acceptance tolerance on the error estimate.
    :param atol: absolute acceptance tolerance on the error estimate.
    :returns: the derivative and its error estimate.
    """

    h = rel_step * abs(x)
    if h == 0.0 or x - h == x:
        raise DifferentiationError(f"Step underflow differentiating at x={x}")

    table = []
    for level in range(levels + 1):
        step = h / 2**level
        row = [(func(x + step) - func(x - step)) / (2.0 * step)]
        for j, previous in enumerate(table[-1] if table else [], start=1):
            row.append(row[j - 1] + (row[j - 1] - previous) / (4**j - 1))
        table.append(row)

    value = table[-1][-1]
    error = abs(value - table[-1][-2]) if levels > 0 else abs(value - table[0][0])
    logger.debug(f"Richardson table at x={x}: {table}")
    if not np.isfinite(value) or error > max(rtol * abs(value), atol):
        raise DifferentiationError(
            f"Numerical derivative at x={x} did not converge (estimate {value}, error {error:.3g})", error_bound=error
        )
    return Derivative(value, error)
