"""Affine Orlicz-Sobolev energies of grid functions and their rearrangements."""

from .convex import StarBody
from .energy import EnergyResult, affine_energy, luxemburg_norm, norm_bounds, orlicz_ball
from .errors import (
    DegenerateDirectionError,
    DomainError,
    GridFormatError,
    InsufficientDataError,
    NoSolutionError,
    UnboundedPolarError,
)
from .gridfn import BoxDomain, GridFunction, read_grid, write_grid
from .orlicz import Asymmetric, OrliczFunction, PiecewiseAffineSup, Power, compute_c_phi, parse_phi
from .rearrange import SteinerPlan, iterate_steiner, schwarz_symmetrize, steiner_rearrange
from .verify import (
    EqualityVerdict,
    VerificationReport,
    chord_midpoint_affine_test,
    detect_equality_case,
    verify_affine_invariance,
    verify_ball_containment,
    verify_schwarz_ps,
    verify_steiner_ps,
)

__version__ = "0.1.0"

__all__ = [
    "Asymmetric",
    "BoxDomain",
    "DegenerateDirectionError",
    "DomainError",
    "EnergyResult",
    "EqualityVerdict",
    "GridFormatError",
    "GridFunction",
    "InsufficientDataError",
    "NoSolutionError",
    "OrliczFunction",
    "PiecewiseAffineSup",
    "Power",
    "StarBody",
    "SteinerPlan",
    "UnboundedPolarError",
    "VerificationReport",
    "affine_energy",
    "chord_midpoint_affine_test",
    "compute_c_phi",
    "detect_equality_case",
    "iterate_steiner",
    "luxemburg_norm",
    "norm_bounds",
    "orlicz_ball",
    "parse_phi",
    "read_grid",
    "schwarz_symmetrize",
    "steiner_rearrange",
    "verify_affine_invariance",
    "verify_ball_containment",
    "verify_schwarz_ps",
    "verify_steiner_ps",
    "write_grid",
]
