"""Exact certificates for cone invariance and linear Lyapunov stability of
diffusively coupled linear systems."""

from .cones import ConeKind, ConeSpec, Membership, contains, dual_cone, is_pointed, is_solid
from .coupling import (
    CouplingTemplate,
    DiffusiveFamily,
    StabilityReport,
    analyze_coupled,
    assemble_coupled,
    principal_eigenvalue,
    sweep_destabilize,
    validate_diffusive,
)
from .dynamics import SwitchingSchedule, Trajectory, monitor_invariance, monitor_lyapunov, simulate, simulate_switched
from .errors import (
    ConelyapError,
    ConsistencyError,
    ContractError,
    DimensionError,
    NumericalFailure,
    ParameterError,
    ParseError,
    RangeError,
)
from .feasibility import LPStatus, solve_feasibility, solve_lp
from .lyapunov import LinearFunctional, cllf_conditions, find_cllf, find_llf, gurvits_planar, validate_certificate
from .monotone import is_qm, is_qm_family
from .numerics import RationalMatrix, RouthVerdict, char_poly, mat_exp, routh_hurwitz, routh_verdict

__version__ = "0.1.0"

__all__ = [
    "ConeKind",
    "ConeSpec",
    "ConelyapError",
    "ConsistencyError",
    "ContractError",
    "CouplingTemplate",
    "DiffusiveFamily",
    "DimensionError",
    "LPStatus",
    "LinearFunctional",
    "Membership",
    "NumericalFailure",
    "ParameterError",
    "ParseError",
    "RangeError",
    "RationalMatrix",
    "RouthVerdict",
    "StabilityReport",
    "SwitchingSchedule",
    "Trajectory",
    "analyze_coupled",
    "assemble_coupled",
    "char_poly",
    "cllf_conditions",
    "contains",
    "dual_cone",
    "find_cllf",
    "find_llf",
    "gurvits_planar",
    "is_pointed",
    "is_qm",
    "is_qm_family",
    "is_solid",
    "mat_exp",
    "monitor_invariance",
    "monitor_lyapunov",
    "principal_eigenvalue",
    "routh_hurwitz",
    "routh_verdict",
    "simulate",
    "simulate_switched",
    "solve_feasibility",
    "solve_lp",
    "sweep_destabilize",
    "validate_certificate",
    "validate_diffusive",
]
