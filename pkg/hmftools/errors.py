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
"""Exceptions raised by hmftools.

All library errors derive from :class:`HmfError`. Most also derive from the builtin exception a caller would
naturally catch (``ValueError`` for bad inputs, ``RuntimeError`` for numerical failures).
"""

from typing import Optional


class HmfError(Exception):
    """Base class of all hmftools errors."""


class DomainError(HmfError, ValueError):
    """A function was evaluated at a pole or outside its mathematical domain."""

    def __init__(self, message: str, location: Optional[complex] = None):
        super().__init__(message)
        self.location = location


class PoleCollisionError(DomainError):
    """The Drude cutoff coincides with a Matsubara frequency."""


class StabilityError(HmfError, ValueError):
    """The parameters lie outside the region where an equilibrium state exists."""


class CriticalPointError(StabilityError):
    """The parameters lie inside the critical band around Ω_S = 2λ²η."""


class ConvergenceError(HmfError, RuntimeError):
    """A series, quadrature or extrapolation did not reach the requested tolerance."""

    def __init__(self, message: str, error_bound: float = float("nan")):
        super().__init__(message)
        self.error_bound = error_bound


class DifferentiationError(ConvergenceError):
    """A numerical derivative did not converge."""


class ModeCountError(ConvergenceError):
    """Too few bath modes were retained for the requested tolerance."""

    def __init__(self, message: str, error_bound: float = float("nan"), n_modes: Optional[int] = None):
        super().__init__(message, error_bound)
        self.n_modes = n_modes


class IntegrationError(HmfError, RuntimeError):
    """The time integrator failed before reaching the end of the requested grid."""

    def __init__(self, message: str, last_time: float = float("nan")):
        super().__init__(message)
        self.last_time = last_time


class InvariantViolation(HmfError, AssertionError):
    """Two independent computations that must agree did not."""
