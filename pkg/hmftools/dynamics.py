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
Exact open-system dynamics of the oscillator from a factorized initial state.

Mean values follow the local equations of motion of the Drude memory. Symmetrized covariances are propagated in
closed form: the initial covariance is transported by the Green's function G(t), and the bath noise adds
double integrals of G and Ġ against Re C(t), reduced to exponential forms per (root, mode) pair.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from hmftools.bath import correlation_modes
from hmftools.equilibrium import thermal_variance
from hmftools.errors import IntegrationError, ModeCountError
from hmftools.response import (
    SPLIT_DOUBLE,
    SPLIT_TRIPLE,
    ModelParams,
    characteristic_roots,
    propagator,
    residue_coefficients,
    split_degenerate_roots,
)
from hmftools.utils.matsubara import matsubara_frequencies

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
DEFAULT_ODE_TOL = 1e-10
DEFAULT_MODE_TOL = 1e-6
MIN_MODES = 32
MAX_DYNAMICS_MODES = 8192
UNCERTAINTY_SLACK = 1e-9


@dataclass(frozen=True)
class GaussianState:
    """First moments and symmetrized covariances of the system, σ_qp = (1/2)⟨q̂p̂ + p̂q̂⟩ − q̄p̄."""

    q_mean: float = 0.0
    p_mean: float = 0.0
    sigma_qq: float = 0.5
    sigma_pp: float = 0.5
    sigma_qp: float = 0.0

    def __post_init__(self):
        if not (self.sigma_qq > 0 and self.sigma_pp > 0):
            raise ValueError(f"Variances must be positive, got σ_qq={self.sigma_qq}, σ_pp={self.sigma_pp}")

    @classmethod
    def thermal(cls, beta: float, omega_s: float = 1.0, q_mean: float = 1.0, p_mean: float = 0.0):
        """Displaced thermal state of the bare oscillator at inverse temperature β."""
        var = thermal_variance(beta, omega_s)
        return cls(q_mean=q_mean, p_mean=p_mean, sigma_qq=var, sigma_pp=var, sigma_qp=0.0)

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.sigma_qq, self.sigma_qp], [self.sigma_qp, self.sigma_pp]])

    @property
    def uncertainty_margin(self) -> float:
        """σ_qq σ_pp − σ_qp² − 1/4, non-negative for a physical state."""
        return self.sigma_qq * self.sigma_pp - self.sigma_qp**2 - 0.25


@dataclass(frozen=True)
class MeanTrajectoryState:
    q_mean: float
    p_mean: float
    phi: float = 0.0
    theta: Tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class MeanTrajectory:
    t: np.ndarray
    q_mean: np.ndarray
    p_mean: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    diverged: bool = False

    def __len__(self):
        return len(self.t)

    def states(self) -> List[MeanTrajectoryState]:
        return [
            MeanTrajectoryState(float(q), float(p), float(f), tuple(float(v) for v in th))
            for q, p, f, th in zip(self.q_mean, self.p_mean, self.phi, self.theta)
        ]


@dataclass(frozen=True, eq=False)
class CovarianceTrajectory:
    t: np.ndarray
    q_mean: np.ndarray
    p_mean: np.ndarray
    sigma_qq: np.ndarray
    sigma_pp: np.ndarray
    sigma_qp: np.ndarray
    diverged: bool = False
    n_modes: int = 0
    warnings: Tuple[str, ...] = field(default=())

    def __len__(self):
        return len(self.t)

    def state(self, index: int) -> GaussianState:
        return GaussianState(
            float(self.q_mean[index]),
            float(self.p_mean[index]),
            float(self.sigma_qq[index]),
            float(self.sigma_pp[index]),
            float(self.sigma_qp[index]),
        )

    def states(self) -> List[GaussianState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def uncertainty_margin(self) -> np.ndarray:
        return self.sigma_qq * self.sigma_pp - self.sigma_qp**2 - 0.25


def _time_grid(t_grid: Sequence[float], from_zero: bool) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("Time grid must be a non-empty one dimensional sequence")
    if np.any(np.diff(t) <= 0):
        raise ValueError("Time grid must be strictly increasing")
    if from_zero and t[0] != 0.0:
        raise ValueError(f"Time grid must start at 0, got {t[0]}")
    if t[0] < 0:
        raise ValueError("Times must be non-negative")
    return t


def mean_generator(params: ModelParams, n_theta: int = 0) -> np.ndarray:
    """Matrix of the linear equations of motion for (q̄, p̄, φ, θ_1, ..., θ_n)."""
    omega, gamma = params.omega_s, params.gamma
    size = 3 + n_theta
    a = np.zeros((size, size))
    a[0, 1] = omega
    a[1, 0] = -omega
    a[1, 2:] = -1.0
    a[2, 0] = -2.0 * params.eta_eff * gamma
    a[2, 2] = -gamma
    rates = matsubara_frequencies(np.arange(1, n_theta + 1), params.beta)
    a[3:, 3:] = -np.diag(rates)
    return a


def evolve_mean(
    initial: MeanTrajectoryState, params: ModelParams, t_grid: Sequence[float], tol: float = DEFAULT_ODE_TOL
) -> MeanTrajectory:
    """
    Integrates the mean-value equations of motion

        dq̄/dt = Ω_S p̄,  dp̄/dt = −Ω_S q̄ − φ − Σθ_n,  dφ/dt = −γφ − 2λ²ηγq̄,  dθ_n/dt = −ϖ_nθ_n

    with the stiffly accurate Radau integrator and the constant Jacobian. Integration stops at the first grid time
    beyond which |q̄| or |p̄| exceeds 1e12, and the trajectory is flagged as diverged.

    :param initial: initial means and auxiliaries; len(theta) sets the number of θ_n.
    :param params: model parameters.
    :param t_grid: output times, strictly increasing from 0.
    :param tol: relative local tolerance.
    :raises IntegrationError: when the step size collapses, reporting the last good time.
    """
    t = _time_grid(t_grid, from_zero=True)
    n_theta = len(initial.theta)
    generator = mean_generator(params, n_theta)
    y0 = np.concatenate(([initial.q_mean, initial.p_mean, initial.phi], np.asarray(initial.theta, dtype=float)))
    atol = tol * 1e-2 * max(1.0, float(np.max(np.abs(y0))))

    def blow_up(_, y):
        return max(abs(y[0]), abs(y[1])) - DIVERGENCE_LIMIT

    blow_up.terminal = True

    if len(t) == 1:
        return MeanTrajectory(t, y0[:1], y0[1:2], y0[2:3], y0[3:].reshape(1, n_theta))

    solution = integrate.solve_ivp(
        lambda _, y: generator @ y,
        (t[0], t[-1]),
        y0,
        method="Radau",
        t_eval=t,
        jac=generator,
        rtol=tol,
        atol=atol,
        events=blow_up,
    )
    if solution.status == -1:
        last = float(solution.t[-1]) if len(solution.t) else 0.0
        raise IntegrationError(f"Mean-value integration failed: {solution.message}", last_time=last)

    diverged = solution.status == 1
    if diverged:
        logger.warning(f"Mean values exceeded {DIVERGENCE_LIMIT:g} at t={solution.t_events[0][0]:.6g}")
    y = solution.y
    return MeanTrajectory(
        t=solution.t,
        q_mean=y[0],
        p_mean=y[1],
        phi=y[2],
        theta=y[3:].T,
        diverged=diverged,
    )


def _expint(z: np.ndarray, t: float) -> np.ndarray:
    """E(z) = ∫₀ᵗ e^{zu} du."""
    zt = z * t
    small = np.abs(zt) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, t * (1.0 + 0.5 * zt), np.expm1(zt) / safe)


def _expint_moment(z: np.ndarray, t: float) -> np.ndarray:
    """E′(z) = ∫₀ᵗ u e^{zu} du."""
    zt = z * t
    small = np.abs(zt) < 1e-2
    safe = np.where(small, 1.0, z)
    series = sum(zt**n / (math.factorial(n) * (n + 2)) for n in range(8)) * t**2
    direct = (t * np.exp(zt) - _expint(z, t)) / safe
    return np.where(small, series, direct)


def _divided_difference(z1: np.ndarray, z2: np.ndarray, t: float) -> np.ndarray:
    """(E(z1) − E(z2))/(z1 − z2), with the confluent limit E′ for close arguments."""
    dz = z1 - z2
    close = np.abs(dz) * t < 1e-5
    safe = np.where(close, 1.0, dz)
    return np.where(close, _expint_moment(0.5 * (z1 + z2), t), (_expint(z1, t) - _expint(z2, t)) / safe)


class _NoiseKernel:
    """
    Bath noise contribution to the covariances, I[X, Y] = ∫₀ᵗ∫₀ᵗ X(u)Y(u′) Re C(u − u′) du du′ for X, Y sums of
    exponentials over the characteristic roots.

    Retained modes are integrated exactly. The dropped Matsubara modes are closed by their Markovian weight
    w₁∫₀ᵗXY − w₂(1 − e^{−ν t})[X(0)Y(0) + X(t)Y(t)], with ν the first dropped frequency.
    """

    def __init__(self, params: ModelParams, nodes: np.ndarray, n_modes: int):
        bath = params.bath.scaled(params.lam)
        # dropped modes are handled by the Markov tail
        expansion = correlation_modes(bath, params.beta, n_modes=n_modes, rtol=math.inf)
        # Only Re C enters the symmetrized covariances; Im C carries the commutator.
        self.amplitudes = expansion.amplitudes.real
        self.rates = expansion.rates
        self.nodes = nodes
        self.tail = bath.matsubara_tail(params.beta, expansion.n_matsubara)
        self.first_dropped = float(matsubara_frequencies(expansion.n_matsubara + 1, params.beta))
        self.n_modes = n_modes

    def matrix(self, t: float) -> np.ndarray:
        s = self.nodes
        pair = s[:, None] + s[None, :]
        shifted = s[None, :] - self.rates[:, None]
        left = _divided_difference(pair[None, :, :], shifted[:, :, None], t)
        right = _divided_difference(pair[None, :, :], shifted[:, None, :], t)
        kernel = np.tensordot(self.amplitudes, left + right, axes=1)
        damping = -math.expm1(-self.first_dropped * t)
        kernel = kernel + self.tail.delta_weight * _expint(pair, t)
        kernel = kernel - self.tail.boundary_weight * damping * (1.0 + np.exp(pair * t))
        return kernel

    def covariances(self, t: float, g: np.ndarray, g_dot: np.ndarray, omega: float) -> Tuple[float, float, float]:
        kernel = self.matrix(t)
        qq = omega**2 * np.real(g @ kernel @ g)
        qp = omega * np.real(g @ kernel @ g_dot)
        pp = np.real(g_dot @ kernel @ g_dot)
        return float(qq), float(qp), float(pp)


def _propagator_coefficients(params: ModelParams, nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = residue_coefficients(nodes, np.array([1.0, params.gamma]))
    return g, g * nodes, g * nodes**2


def _homogeneous(initial: GaussianState, params: ModelParams, t: np.ndarray) -> Dict[str, np.ndarray]:
    omega = params.omega_s
    with np.errstate(over="ignore", invalid="ignore"):
        values = propagator(params, t)
    big_g, big_g_dot, big_g_ddot = (np.atleast_1d(v) for v in values[:3])
    # rows of M(t) = [[Ġ, Ω G], [G̈/Ω, Ġ]]
    m_qq, m_qp, m_pq, m_pp = big_g_dot, omega * big_g, big_g_ddot / omega, big_g_dot
    s = initial
    return {
        "q_mean": m_qq * s.q_mean + m_qp * s.p_mean,
        "p_mean": m_pq * s.q_mean + m_pp * s.p_mean,
        "sigma_qq": m_qq**2 * s.sigma_qq + 2 * m_qq * m_qp * s.sigma_qp + m_qp**2 * s.sigma_pp,
        "sigma_pp": m_pq**2 * s.sigma_qq + 2 * m_pq * m_pp * s.sigma_qp + m_pp**2 * s.sigma_pp,
        "sigma_qp": m_qq * m_pq * s.sigma_qq + (m_qq * m_pp + m_qp * m_pq) * s.sigma_qp + m_qp * m_pp * s.sigma_pp,
    }


def _noise_at(kernel: Optional[_NoiseKernel], params: ModelParams, nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    noise = np.zeros((len(t), 3))
    if kernel is None:
        return noise
    g, g_dot, _ = _propagator_coefficients(params, nodes)
    with np.errstate(over="ignore", invalid="ignore"):
        for i, ti in enumerate(t):
            noise[i] = kernel.covariances(float(ti), g, g_dot, params.omega_s)
    return noise


def _divergence_cut(columns: Dict[str, np.ndarray]) -> int:
    stacked = np.abs(np.vstack(list(columns.values())))
    bad = np.any(~np.isfinite(stacked) | (stacked > DIVERGENCE_LIMIT), axis=0)
    return int(np.argmax(bad)) if np.any(bad) else stacked.shape[1]


def _minimum_modes(params: ModelParams) -> int:
    return max(MIN_MODES, math.ceil(params.beta * params.gamma / (2.0 * np.pi)) + 2)


def evolve_covariance(
    initial: GaussianState,
    params: ModelParams,
    t_grid: Sequence[float],
    n_modes: Optional[int] = None,
    tol: float = DEFAULT_MODE_TOL,
) -> CovarianceTrajectory:
    """
    Exact Gaussian dynamics of the system from a factorized initial state.

    In the Heisenberg picture q(t) = Ġ(t)q(0) + Ω_S G(t)p(0) − Ω_S∫₀ᵗG(t−s)F̂_E(s)ds and p = q̇/Ω_S. The covariances
    are the initial covariance transported by M(t) = [[Ġ, Ω_S G], [G̈/Ω_S, Ġ]] plus the noise terms Ω_S²I[G, G],
    Ω_S I[G, Ġ] and I[Ġ, Ġ], where I[X, Y] is the double integral against Re C.

    Stable, critical and unstable parameters are all accepted. Once any moment exceeds 1e12 the trajectory is cut
    and flagged as diverged.

    :param initial: initial system state; the bath starts in its thermal state.
    :param params: model parameters.
    :param t_grid: increasing non-negative output times.
    :param n_modes: bath modes to retain, mode 0 included. By default the count starts at
        max(32, βγ/2π + 2) and doubles until σ_qq at the last output time changes by less than ``tol``.
    :param tol: tolerance on σ_qq, relative to max(1, |σ_qq|).
    :raises ModeCountError: when the mode count cannot meet ``tol``; recommends a larger ``n_modes``.
    """
    t = _time_grid(t_grid, from_zero=False)
    roots = characteristic_roots(params)
    nodes, split_message = split_degenerate_roots(roots)
    warnings = []
    if split_message:
        # symmetric splitting by δ leaves an O(δ²) error for a double root and O(δ³) for a triple root
        bound = SPLIT_TRIPLE**3 if max(roots.multiplicities) == 3 else SPLIT_DOUBLE**2
        split_message = f"{split_message}; noise integrals accurate to about {bound:g} relative"
        logger.warning(split_message)
        warnings.append(split_message)

    columns = _homogeneous(initial, params, t)

    if params.eta_eff == 0.0:
        kernel = None
        used_modes = 0
    else:
        minimum = _minimum_modes(params)
        if n_modes is not None and n_modes < minimum:
            raise ModeCountError(
                f"n_modes={n_modes} leaves Matsubara modes below the Drude cutoff; use at least {minimum}",
                n_modes=n_modes,
            )
        trial = _NoiseKernel(params, nodes, n_modes or minimum)
        cut = _divergence_cut({**columns, "noise": _noise_at(trial, params, nodes, t).T})
        check = t[max(cut - 1, 0)]
        kernel = _converged_kernel(params, nodes, check, n_modes, minimum, tol)
        used_modes = kernel.n_modes

    noise = _noise_at(kernel, params, nodes, t)
    for column, values in zip(("sigma_qq", "sigma_qp", "sigma_pp"), noise.T):
        columns[column] = columns[column] + values

    cut = _divergence_cut(columns)
    diverged = cut < len(t)
    if diverged:
        message = f"moments exceeded {DIVERGENCE_LIMIT:g} after t={t[cut - 1] if cut else t[0]:.6g}"
        logger.warning(message)
        warnings.append(message)

    trajectory = CovarianceTrajectory(
        t=t[:cut],
        **{name: values[:cut] for name, values in columns.items()},
        diverged=diverged,
        n_modes=used_modes,
        warnings=tuple(warnings),
    )
    margin = trajectory.uncertainty_margin
    if len(margin) and np.min(margin) < -UNCERTAINTY_SLACK:
        logger.warning(f"Uncertainty relation violated by {-np.min(margin):.3g}")
    return trajectory


def _converged_kernel(
    params: ModelParams, nodes: np.ndarray, t_check: float, n_modes: Optional[int], minimum: int, tol: float
) -> _NoiseKernel:
    g, g_dot, _ = _propagator_coefficients(params, nodes)

    def sigma_qq(kernel):
        with np.errstate(over="ignore", invalid="ignore"):
            return kernel.covariances(float(t_check), g, g_dot, params.omega_s)[0]

    if n_modes is not None:
        kernel = _NoiseKernel(params, nodes, n_modes)
        coarse = max(n_modes // 2, minimum)
        if coarse < n_modes:
            change = abs(sigma_qq(kernel) - sigma_qq(_NoiseKernel(params, nodes, coarse)))
            value = abs(sigma_qq(kernel))
            if change > tol * max(1.0, value):
                raise ModeCountError(
                    f"σ_qq changes by {change:.3g} between {coarse} and {n_modes} modes; increase n_modes",
                    error_bound=change,
                    n_modes=n_modes,
                )
        return kernel

    count = minimum
    kernel = _NoiseKernel(params, nodes, count)
    previous = sigma_qq(kernel)
    while 2 * count <= MAX_DYNAMICS_MODES:
        count *= 2
        refined = _NoiseKernel(params, nodes, count)
        value = sigma_qq(refined)
        change = abs(value - previous)
        kernel, previous = refined, value
        if change <= tol * max(1.0, abs(value)):
            logger.debug(f"Noise converged with {count} modes (change {change:.2g})")
            return kernel
    raise ModeCountError(
        f"σ_qq did not converge within {MAX_DYNAMICS_MODES} modes (last change {change:.3g}); pass a larger n_modes",
        error_bound=change,
        n_modes=count,
    )


def discretized_bath_oracle(
    initial: GaussianState,
    params: ModelParams,
    t_grid: Sequence[float],
    m_modes: int = 400,
    omega_max: Optional[float] = None,
) -> CovarianceTrajectory:
    """
    Independent reference dynamics with the bath replaced by ``m_modes`` oscillators.

    Frequencies are bin midpoints of a uniform grid on [0, omega_max], with couplings c_j² = (2/π)∫_bin J(ω)dω. The
    reorganization energy of the spectrum above omega_max is restored as a static shift −η_tail q̂². The full
    (2 + 2M)-dimensional covariance is propagated exactly with the matrix exponential and traced down to the system.
    The finite bath recurs near t = 2π·m_modes/omega_max.
    """
    if m_modes < 1:
        raise ValueError(f"m_modes must be at least 1, got {m_modes}")
    t = _time_grid(t_grid, from_zero=False)
    bath = params.bath.scaled(params.lam)
    omega_max = 40.0 * bath.gamma if omega_max is None else omega_max
    width = omega_max / m_modes
    frequencies = (np.arange(m_modes) + 0.5) * width
    weights = np.array([bath.integrated_density(w - 0.5 * width, w + 0.5 * width) for w in frequencies])
    couplings = np.sqrt(2.0 / np.pi * weights)
    eta_tail = bath.eta - float(np.sum(couplings**2 / (2.0 * frequencies)))
    logger.debug(f"Discretized bath: {m_modes} modes up to {omega_max}, tail reorganization energy {eta_tail:.3g}")

    # ordering (q, X_1..X_M, p, P_1..P_M)
    size = m_modes + 1
    hamiltonian = np.zeros((2 * size, 2 * size))
    hamiltonian[0, 0] = params.omega_s - 2.0 * eta_tail
    hamiltonian[size, size] = params.omega_s
    idx = np.arange(1, size)
    hamiltonian[idx, idx] = frequencies
    hamiltonian[size + idx, size + idx] = frequencies
    hamiltonian[0, idx] = hamiltonian[idx, 0] = couplings
    symplectic = np.block([[np.zeros((size, size)), np.eye(size)], [-np.eye(size), np.zeros((size, size))]])
    generator = symplectic @ hamiltonian

    covariance = np.zeros((2 * size, 2 * size))
    covariance[np.ix_([0, size], [0, size])] = initial.covariance
    bath_variances = np.array([thermal_variance(params.beta, w) for w in frequencies])
    covariance[idx, idx] = bath_variances
    covariance[size + idx, size + idx] = bath_variances
    mean = np.zeros(2 * size)
    mean[0], mean[size] = initial.q_mean, initial.p_mean

    rows = np.zeros((2, 2 * size))
    rows[0, 0] = rows[1, size] = 1.0
    if t[0] > 0:
        rows = rows @ expm(generator * t[0])

    steps: Dict[float, np.ndarray] = {}
    results = np.zeros((len(t), 5))
    for i, ti in enumerate(t):
        if i > 0:
            dt = round(ti - t[i - 1], 12)
            if dt not in steps:
                steps[dt] = expm(generator * dt)
            rows = rows @ steps[dt]
        system = rows @ covariance @ rows.T
        first = rows @ mean
        results[i] = first[0], first[1], system[0, 0], system[1, 1], 0.5 * (system[0, 1] + system[1, 0])

    recurrence = 2.0 * np.pi / width
    warnings = []
    if t[-1] > recurrence:
        warnings.append(f"finite bath recurrence near t={recurrence:.4g} lies inside the time grid")
        logger.warning(warnings[-1])
    cut = _divergence_cut({str(i): results[:, i] for i in range(5)})
    return CovarianceTrajectory(
        t=t[:cut],
        q_mean=results[:cut, 0],
        p_mean=results[:cut, 1],
        sigma_qq=results[:cut, 2],
        sigma_pp=results[:cut, 3],
        sigma_qp=results[:cut, 4],
        diverged=cut < len(t),
        n_modes=m_modes,
        warnings=tuple(warnings),
    )
