"""Python access to the bykov return-map and vector-field library."""

from ._bykov import (
    DomainError,
    IntegrationError,
    InvalidArgument,
    MapConstants,
    Params,
    SolverError,
    bt_points,
    classify_attractor,
    derive_constants,
    fixed_points,
    g_ell,
    iterate,
    jacobian,
    lyapunov_spectrum,
    omega_star,
    return_map,
    run_cli,
    scan_map,
    vector_field,
    wedge_membership,
)

__all__ = [
    "DomainError",
    "IntegrationError",
    "InvalidArgument",
    "MapConstants",
    "Params",
    "SolverError",
    "bt_points",
    "classify_attractor",
    "derive_constants",
    "fixed_points",
    "g_ell",
    "iterate",
    "jacobian",
    "lyapunov_spectrum",
    "omega_star",
    "return_map",
    "run_cli",
    "scan_map",
    "vector_field",
    "wedge_membership",
]
