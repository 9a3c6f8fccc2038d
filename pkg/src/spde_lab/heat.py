"""Stochastic diffusion on (0, 1) with multiplicative scalar noise.

One scalar Brownian path drives every mode:

    u_n(t) = a_n exp(b_n t + eps w_t),   b_n = -(n pi)^2 - eps^2 / 2,

so each sample is a deterministic transform of its scalar path and the
grid values are exact in distribution.  The shared path makes same-sign
modes perfectly co-monotone across samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import DirichletBasis, HilbertVector
from .montecarlo import RandomStream
from .wiener import TimeGrid


@dataclass(frozen=True)
class HeatProblem:
    """Noise intensity and initial coefficients a_n = <f, e_n> on (0, 1)."""

    epsilon: float
    init_coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.init_coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("init_coeffs must be a nonempty vector")
        object.__setattr__(self, "init_coeffs", arr)

    @property
    def n_modes(self) -> int:
        return len(self.init_coeffs)

    @property
    def basis(self) -> DirichletBasis:
        return DirichletBasis(1.0, self.n_modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        return (np.arange(1, self.n_modes + 1) * np.pi) ** 2

    @property
    def drift_rates(self) -> np.ndarray:
        """b_n = -lambda_n - eps^2/2 (Ito drift of the modal exponent)."""
        return -self.eigenvalues - 0.5 * self.epsilon**2


@dataclass(frozen=True)
class HeatSample:
    """One realization: the scalar driving path and all modal coefficients."""

    grid: TimeGrid
    w: np.ndarray
    u: np.ndarray


def _realize(prob: HeatProblem, grid: TimeGrid, streams) -> tuple[np.ndarray, np.ndarray]:
    """Scalar paths [batch, steps+1] and coefficients [batch, steps+1, N]."""
    w = np.zeros((len(streams), grid.steps + 1))
    root_dt = np.sqrt(grid.dt)
    for j, stream in enumerate(streams):
        dw = root_dt * stream.generator().standard_normal(grid.steps)
        np.cumsum(dw, out=w[j, 1:])
    exponent = (
        prob.drift_rates * grid.times[:, np.newaxis] + prob.epsilon * w[:, :, np.newaxis]
    )
    u = prob.init_coeffs * np.exp(exponent)
    return w, u


def sample_solution(prob: HeatProblem, grid: TimeGrid, stream: RandomStream) -> HeatSample:
    """Draw one realization, exact in distribution at the grid points."""
    w, u = _realize(prob, grid, [stream])
    return HeatSample(grid, w[0], u[0])


def simulate_block(
    prob: HeatProblem, grid: TimeGrid, stream: RandomStream, start: int, stop: int
) -> tuple[np.ndarray, np.ndarray]:
    """Batched realizations for samples [start, stop).

    Sample i draws from ``stream.child(i)``, so results are independent of
    how the index range is sharded across workers.
    """
    return _realize(prob, grid, [stream.child(i) for i in range(start, stop)])


def mean_closed_form(prob: HeatProblem, t: float) -> HilbertVector:
    """Mean coefficients a_n exp(-lambda_n t); independent of epsilon."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return HilbertVector(prob.init_coeffs * np.exp(-prob.eigenvalues * t))


def variance_closed_form(prob: HeatProblem, t: float) -> float:
    """L2 variance sum_n a_n^2 exp(-2 lambda_n t) [exp(eps^2 t) - 1]."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(
        np.sum(
            prob.init_coeffs**2
            * np.exp(-2 * prob.eigenvalues * t)
            * np.expm1(prob.epsilon**2 * t)
        )
    )


def covariance_closed_form(prob: HeatProblem, t: float, tau: float) -> float:
    """L2 covariance sum_n a_n^2 exp(-lambda_n (t+tau)) [exp(eps^2 min(t,tau)) - 1]."""
    if t < 0 or tau < 0:
        raise ValueError("times must be nonnegative")
    return float(
        np.sum(
            prob.init_coeffs**2
            * np.exp(-prob.eigenvalues * (t + tau))
            * np.expm1(prob.epsilon**2 * min(t, tau))
        )
    )


def correlation_closed_form(prob: HeatProblem, t: float, tau: float) -> float:
    """Correlation of the solution at two times.

    The denominator degenerates when epsilon = 0 or either time is zero,
    which is reported as an error rather than a silent 0 or 1.
    """
    if t <= 0 or tau <= 0:
        raise ValueError("correlation requires strictly positive times")
    if prob.epsilon == 0:
        raise ValueError("correlation is undefined for epsilon = 0 (zero variance)")
    if t == tau:
        return 1.0
    var_t = variance_closed_form(prob, t)
    var_tau = variance_closed_form(prob, tau)
    if var_t == 0 or var_tau == 0:
        raise ValueError("correlation is undefined: zero variance")
    return covariance_closed_form(prob, t, tau) / np.sqrt(var_t * var_tau)
