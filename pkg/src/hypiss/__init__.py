"""Saturated boundary-feedback design for 1-D linear hyperbolic transport
systems: matrix-inequality synthesis of stabilizing gains, input-to-state
stability certificates, and finite-volume validation of the certified bound.
"""

from .control import (
    AnalysisCertificate,
    Controller,
    FeasibilityMap,
    GridCell,
    InfeasibleError,
    IssCoefficients,
    Plant,
    SolverFailureError,
    SynthesisCertificate,
    SynthesisError,
    WellPosednessConstants,
    analysis_values,
    build_analysis_lmis,
    build_synthesis_lmis,
    closed_loop_boundary,
    deadzone,
    grid_search,
    iss_coefficients,
    saturate,
    synthesize,
    verify_analysis,
    wellposedness_certificate,
)
from .linalg import DiagMatrix, Matrix, SymMatrix, invert_diag
from .pde import (
    BlowUpError,
    Grid,
    IssBoundParams,
    SignalSpec,
    SimConfig,
    Trajectory,
    disturbance_energy,
    frechet_check,
    iss_bound_params,
    iss_rhs,
    l2_norm,
    lyapunov_value,
    simulate,
)

__all__ = [
    "AnalysisCertificate",
    "BlowUpError",
    "Controller",
    "DiagMatrix",
    "FeasibilityMap",
    "Grid",
    "GridCell",
    "InfeasibleError",
    "IssBoundParams",
    "IssCoefficients",
    "Matrix",
    "Plant",
    "SignalSpec",
    "SimConfig",
    "SolverFailureError",
    "SymMatrix",
    "SynthesisCertificate",
    "SynthesisError",
    "Trajectory",
    "WellPosednessConstants",
    "analysis_values",
    "build_analysis_lmis",
    "build_synthesis_lmis",
    "closed_loop_boundary",
    "deadzone",
    "disturbance_energy",
    "frechet_check",
    "grid_search",
    "invert_diag",
    "iss_bound_params",
    "iss_coefficients",
    "iss_rhs",
    "l2_norm",
    "lyapunov_value",
    "saturate",
    "simulate",
    "synthesize",
    "verify_analysis",
    "wellposedness_certificate",
]

__version__ = "0.1.0"
