"""Spectral simulation and Monte Carlo verification lab for linear and
nonlinear stochastic PDEs on an interval.

Subpackages cover the Dirichlet sine basis and covariance spectra
(:mod:`~spde_lab.hilbert`), truncated Q-Wiener paths (:mod:`~spde_lab.wiener`),
exact solutions of the stochastic wave and heat equations
(:mod:`~spde_lab.wave`, :mod:`~spde_lab.heat`), Lyapunov exponents
(:mod:`~spde_lab.lyapunov`), a stochastic Burgers solver with energy bounds
(:mod:`~spde_lab.burgers`), and shared Monte Carlo machinery
(:mod:`~spde_lab.montecarlo`).  The ``spde-lab`` command line binds them
into reproducible experiments.
"""

from .hilbert import CovarianceSpectrum, DirichletBasis, HilbertVector
from .montecarlo import EnsembleStats, RandomStream
from .wiener import TimeGrid

__all__ = [
    "CovarianceSpectrum",
    "DirichletBasis",
    "HilbertVector",
    "EnsembleStats",
    "RandomStream",
    "TimeGrid",
]

__version__ = "0.1.0"
