"""Radially symmetric lab for drift and mean-field fast-diffusion equations."""

from .core import (
    ModelParams,
    Profile,
    RadialGrid,
    Variant,
    build_grid,
    read_snapshot,
    tail_radius,
    total_mass,
    validate_params,
    write_snapshot,
)
from .diagnostics import (
    DiagnosticsRecord,
    fisher_information,
    free_energy,
    ibp_identity_residual,
    phi_functionals,
    psi_q_forms,
    relative_entropy,
    sandwich_bounds,
    weighted_l2,
)
from .errors import FastDiffError
from .evolve import RunResult, SolverConfig, run, run_pair, step
from .inequalities import (
    EigenEstimate,
    hp_constant_formula,
    hp_estimate,
    interaction_positivity,
    muckenhoupt_B,
    rhls_minimality,
    rhls_quotient,
)
from .kernels import KernelMatrix, assemble_kernel
from .rates import DecayFit, DecayKind, classify_decay, fit_decay
from .stationary import (
    StationaryState,
    barenblatt_profile,
    lambda2_constant,
    meanfield_fixed_point,
    meanfield_state,
    solve_h_star,
    virial_residual,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "Profile",
    "RadialGrid",
    "Variant",
    "build_grid",
    "read_snapshot",
    "tail_radius",
    "total_mass",
    "validate_params",
    "write_snapshot",
    "DiagnosticsRecord",
    "fisher_information",
    "free_energy",
    "ibp_identity_residual",
    "phi_functionals",
    "psi_q_forms",
    "relative_entropy",
    "sandwich_bounds",
    "weighted_l2",
    "FastDiffError",
    "RunResult",
    "SolverConfig",
    "run",
    "run_pair",
    "step",
    "EigenEstimate",
    "hp_constant_formula",
    "hp_estimate",
    "interaction_positivity",
    "muckenhoupt_B",
    "rhls_minimality",
    "rhls_quotient",
    "KernelMatrix",
    "assemble_kernel",
    "DecayFit",
    "DecayKind",
    "classify_decay",
    "fit_decay",
    "StationaryState",
    "barenblatt_profile",
    "lambda2_constant",
    "meanfield_fixed_point",
    "meanfield_state",
    "solve_h_star",
    "virial_residual",
]
