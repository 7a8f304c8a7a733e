"""Spectral-Galerkin simulation and Monte-Carlo verification for stochastic Burgers."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .dynamics import IntegrationError, IntegratorConfig, simulate_trajectory
from .semigroup import (
    MonteCarloEstimate,
    estimate_pt,
    estimate_st,
    grad_pt_tangent,
    grad_st_bel,
    verify_commutation,
)
from .spectral import DomainError
from .test_functions import CylindricalFunction, TestFamily

__all__ = [
    "BACKEND",
    "CylindricalFunction",
    "DomainError",
    "IntegrationError",
    "IntegratorConfig",
    "MonteCarloEstimate",
    "TestFamily",
    "estimate_pt",
    "estimate_st",
    "grad_pt_tangent",
    "grad_st_bel",
    "simulate_trajectory",
    "verify_commutation",
]
