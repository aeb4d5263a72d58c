"""Fiber-level Riemann-Hilbert data: local models, gluing data, finite
descriptions and Fuchsian monodromy."""
from .filtr import Flag, JumpGraph, compatible, deform, graded, jump_graph, polygonal_weights, slope_special_check
from .findesc import (
    FiniteDescription,
    PunctureData,
    SurfaceData,
    disc_description,
    fd_isomorphic,
    jordan_holder,
    s_equivalent,
    validate_fd,
)
from .fuchsian import FuchsianSystem, LoopBasket, assemble_fd, monodromy, transport
from .localmodel import LocalModel, canonical_from_residue, factor, reduce, validate
from .matfun import BranchSection, apply_entire, branch_log, expm2pi, phi_m2pi, resonance_report
from .modify import make_good, shift_down, shift_up
from .rhcore import LocalRHData, inv_rh_local, rh_local, rigidity_differential, validate_rh

__version__ = "0.1.0"

__all__ = [
    "BranchSection",
    "Flag",
    "FiniteDescription",
    "FuchsianSystem",
    "JumpGraph",
    "LocalModel",
    "LocalRHData",
    "LoopBasket",
    "PunctureData",
    "SurfaceData",
    "apply_entire",
    "assemble_fd",
    "branch_log",
    "canonical_from_residue",
    "compatible",
    "deform",
    "disc_description",
    "expm2pi",
    "factor",
    "fd_isomorphic",
    "graded",
    "inv_rh_local",
    "jordan_holder",
    "jump_graph",
    "make_good",
    "monodromy",
    "phi_m2pi",
    "polygonal_weights",
    "reduce",
    "resonance_report",
    "rh_local",
    "rigidity_differential",
    "s_equivalent",
    "shift_down",
    "shift_up",
    "slope_special_check",
    "transport",
    "validate",
    "validate_fd",
    "validate_rh",
]
