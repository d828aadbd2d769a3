"""Controllability Gramians, control energy, and eigenvalue-clustering bounds."""

from .errors import (
    Defective,
    DegenerateRegion,
    DeskScaleExceeded,
    DimensionMismatch,
    GramianBoundsError,
    HypothesisViolated,
    InfeasibleSpec,
    NoConvergence,
    NotHermitian,
    Overflow,
    Singular,
    Unreachable,
)
from .approx import (
    ChebyshevExpansion,
    MinimaxResult,
    cheb_truncation,
    err_capacity_trend,
    err_region,
    monic_residual,
    phi_exact,
    phi_hoeffding,
    power_expansion,
)
from .bounds import (
    BoundReport,
    conjecture_scan,
    lemma2_sum,
    reproduce_intro_constants,
    thm1_capacity,
    thm1_nonasymptotic,
    thm2,
    verify_thm1,
    verify_thm2,
)
from .capacity import CapacityEstimate, FeketeResult, cap_closed_form, cap_estimate, fekete_points
from .gramian import GramianReport, SteeringPlan, control_energy, gramian, steer, worst_direction
from .regions import Region, parse_region
from .system import Diagonalization, LinearSystem, SystemSpec, diagonalize, generate, simulate, t_min

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CapacityEstimate",
    "ChebyshevExpansion",
    "Defective",
    "DegenerateRegion",
    "DeskScaleExceeded",
    "Diagonalization",
    "DimensionMismatch",
    "FeketeResult",
    "GramianBoundsError",
    "GramianReport",
    "HypothesisViolated",
    "InfeasibleSpec",
    "LinearSystem",
    "MinimaxResult",
    "NoConvergence",
    "NotHermitian",
    "Overflow",
    "Region",
    "Singular",
    "SteeringPlan",
    "SystemSpec",
    "Unreachable",
    "cap_closed_form",
    "cap_estimate",
    "cheb_truncation",
    "conjecture_scan",
    "control_energy",
    "diagonalize",
    "err_capacity_trend",
    "err_region",
    "fekete_points",
    "generate",
    "gramian",
    "lemma2_sum",
    "monic_residual",
    "parse_region",
    "phi_exact",
    "phi_hoeffding",
    "power_expansion",
    "reproduce_intro_constants",
    "simulate",
    "steer",
    "t_min",
    "thm1_capacity",
    "thm1_nonasymptotic",
    "thm2",
    "verify_thm1",
    "verify_thm2",
    "worst_direction",
]
