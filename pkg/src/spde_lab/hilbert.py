"""Dirichlet sine basis on an interval, noise covariance spectra and the
induced spatial correlation kernel.

The basis is fixed: e_n(x) = sqrt(2/l) sin(n pi x / l) for n = 1..N on
(0, l), with Laplacian eigenvalues (n pi / l)^2.  Spatial integrals use the
composite trapezoid rule on a uniform grid of at least 8N panels, which is
exact (to roundoff) for products of basis modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta


@dataclass(frozen=True)
class DirichletBasis:
    """Orthonormal sine basis of the first ``n_modes`` Dirichlet eigenfunctions."""

    length: float
    n_modes: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("domain length must be positive")
        if self.n_modes < 1:
            raise ValueError("n_modes must be a positive integer")

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Laplacian eigenvalues (n pi / l)^2, strictly increasing."""
        return (self.mode_numbers * np.pi / self.length) ** 2

    def evaluate(self, x) -> np.ndarray:
        """Values e_n(x); shape is x.shape + (n_modes,).

        Raises for coordinates outside [0, l].
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.length):
            raise ValueError(f"coordinate outside [0, {self.length}]")
        phases = self.mode_numbers * np.pi / self.length * x[..., np.newaxis]
        return np.sqrt(2.0 / self.length) * np.sin(phases)

    def quadrature(self, panels: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Uniform trapezoid nodes and weights; default 8*n_modes panels."""
        if panels is None:
            panels = 8 * self.n_modes
        x = np.linspace(0.0, self.length, panels + 1)
        w = np.full(panels + 1, self.length / panels)
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w

    def project(self, f, panels: int | None = None) -> "HilbertVector":
        """Coefficients <f, e_n> of a callable by trapezoid quadrature."""
        x, w = self.quadrature(panels)
        values = np.asarray(f(x), dtype=float)
        return HilbertVector(self.evaluate(x).T @ (w * values))


@dataclass(frozen=True)
class HilbertVector:
    """Coefficient vector of a function in the truncated sine basis.

    Parseval at truncation level: ``norm()`` equals the L2 norm of the
    represented function.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return len(self.coeffs)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def dot(self, other: "HilbertVector") -> float:
        if len(other) != len(self):
            raise ValueError("dimension mismatch")
        return float(self.coeffs @ other.coeffs)

    def evaluate(self, basis: DirichletBasis, x) -> np.ndarray | float:
        """Function values sum_n coeffs_n e_n(x)."""
        if basis.n_modes != len(self):
            raise ValueError("dimension mismatch")
        out = basis.evaluate(x) @ self.coeffs
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def unit(cls, n_modes: int, mode: int, scale: float = 1.0) -> "HilbertVector":
        """``scale`` times the basis vector e_mode (1-based index)."""
        if not 1 <= mode <= n_modes:
            raise ValueError("mode index out of range")
        coeffs = np.zeros(n_modes)
        coeffs[mode - 1] = scale
        return cls(coeffs)


@dataclass(frozen=True)
class CovarianceSpectrum:
    """Eigenvalues q_n >= 0 of the noise covariance operator, basis-aligned.

    ``decay_law`` records how the sequence was generated ('finite',
    'power' with q_n = n^-p, or 'exp' with q_n = exp(-r n)) so that the
    truncated tail mass can be reported.
    """

    eigenvalues: np.ndarray
    decay_law: str = "finite"
    decay_param: float | None = None

    def __post_init__(self):
        arr = np.array(self.eigenvalues, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d sequence")
        if np.any(arr < 0):
            raise ValueError("covariance eigenvalues must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "eigenvalues", arr)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def trace(self) -> float:
        """Sum of the stored eigenvalues."""
        return float(np.sum(self.eigenvalues))

    def tail_mass(self) -> float:
        """Mass sum_{n > N} q_n dropped by the truncation.

        Exact for 'power' (Hurwitz zeta) and 'exp' (geometric series); zero
        for explicitly finite spectra.  Helps choose N so that the tail is
        below e.g. 1e-6 times the trace.
        """
        n = len(self)
        if self.decay_law == "power":
            p = self.decay_param
            if p <= 1:
                return float("inf")
            return float(zeta(p, n + 1))
        if self.decay_law == "exp":
            r = self.decay_param
            if r <= 0:
                return float("inf")
            return float(np.exp(-r * (n + 1)) / (1.0 - np.exp(-r)))
        return 0.0

    def apply_power(self, gamma: float, vec: HilbertVector) -> HilbertVector:
        """Coefficients q_n^gamma <a, e_n> of Q^gamma a.

        gamma = 0 is the identity (returns ``vec`` unchanged), so zero
        eigenvalues never hit 0**0.
        """
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if len(vec) != len(self):
            raise ValueError("dimension mismatch")
        if gamma == 0:
            return vec
        return HilbertVector(self.eigenvalues**gamma * vec.coeffs)

    @classmethod
    def finite(cls, values) -> "CovarianceSpectrum":
        return cls(np.asarray(values, dtype=float), "finite")

    @classmethod
    def power(cls, p: float, n_modes: int) -> "CovarianceSpectrum":
        q = np.arange(1, n_modes + 1, dtype=float) ** (-p)
        return cls(q, "power", p)

    @classmethod
    def exponential(cls, r: float, n_modes: int) -> "CovarianceSpectrum":
        q = np.exp(-r * np.arange(1, n_modes + 1, dtype=float))
        return cls(q, "exp", r)

    @classmethod
    def parse(cls, text: str, n_modes: int) -> "CovarianceSpectrum":
        """Parse a spectrum specification string.

        Formats: ``finite:q1,q2,...`` (padded with zeros up to n_modes),
        ``power:p`` for q_n = n^-p, ``exp:r`` for q_n = exp(-r n).
        """
        kind, sep, arg = text.partition(":")
        if not sep:
            raise ValueError(f"malformed spectrum {text!r}, expected kind:args")
        if kind == "finite":
            values = [float(v) for v in arg.split(",") if v != ""]
            if len(values) > n_modes:
                raise ValueError(
                    f"finite spectrum lists {len(values)} eigenvalues "
                    f"but only {n_modes} modes are kept"
                )
            padded = np.zeros(n_modes)
            padded[: len(values)] = values
            return cls.finite(padded)
        if kind == "power":
            return cls.power(float(arg), n_modes)
        if kind == "exp":
            return cls.exponential(float(arg), n_modes)
        raise ValueError(f"unknown spectrum kind {kind!r}")


def correlation_kernel(
    spectrum: CovarianceSpectrum, basis: DirichletBasis, x, y
) -> np.ndarray | float:
    """Truncated spatial correlation sum_n q_n e_n(x) e_n(y)."""
    if len(spectrum) != basis.n_modes:
        raise ValueError("dimension mismatch")
    out = np.sum(spectrum.eigenvalues * basis.evaluate(x) * basis.evaluate(y), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def apply_kernel(
    spectrum: CovarianceSpectrum, basis: DirichletBasis, vec: HilbertVector
) -> HilbertVector:
    """Apply Q to a vector through the kernel integral int q(x,y) a(y) dy.

    Quadrature counterpart of ``spectrum.apply_power(1, vec)``; used to
    cross-check the spectral application.
    """
    y, w = basis.quadrature()
    a_vals = vec.evaluate(basis, y)
    qa_vals = basis.evaluate(y) @ (spectrum.eigenvalues * (basis.evaluate(y).T @ (w * a_vals)))
    return HilbertVector(basis.evaluate(y).T @ (w * qa_vals))
