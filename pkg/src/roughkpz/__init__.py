"""Weakly coupled KPZ equation driven by rough noise on the torus.

Modules
-------
mollifier   the bump and its Fourier transform
spectral    Fourier fields, heat and fractional multipliers, Littlewood-Paley blocks
constants   counterterms, limit constants and exact variances
noise       seeding, OU modes and replayable noise paths
sparse      mode-sparse sampler of tested first and second chaos
solvers     exponential stepping of X, Y, Z and h, Cole-Hopf, limit sampling
harness     Monte Carlo studies and reports
"""

from .config import SimConfig
from .constants import (GaussianProfile, HeatWindowProfile, RaisedCosineProfile, TestFunction,
                        beta, c1_exact, c_gamma_rho, c_squared, mu_mass, variance_exact)
from .errors import (Blowup, CutoffTooSmall, DealiasViolation, InsufficientReplicas,
                     InvalidDuration, InvalidExponent, InvalidScale, OutOfRegime, PositivityLoss,
                     QuadratureFailure, RoughKPZError, StepTooLarge, TestFunctionTooWide)
from .mollifier import MollifierTable, default_table, rho_hat
from .noise import ModeTrajectory, NoisePath, SeedLineage
from .spectral import TorusField

__version__ = "0.1.0"
