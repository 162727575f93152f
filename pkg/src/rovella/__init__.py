"""Computational laboratory for the contracting (Rovella) Lorenz system.

Subpackages: core (maps and geometry), norms (observable function
spaces), measure (orbits, Ulam transfer operator, time functions),
stats (correlations, hitting times, dimensions), experiments + cli
(batch front end).
"""

from .core import (
    EigenTriple,
    FlowState,
    ParamError,
    PointQ,
    RovellaParams,
    SingularPointError,
    default_params,
    eval_F,
    eval_T,
    eval_T_deriv,
    global_return,
    local_flow_map,
    return_time_local,
    schwarzian,
    truncated_distance,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "EigenTriple",
    "FlowState",
    "ParamError",
    "PointQ",
    "RovellaParams",
    "SingularPointError",
    "default_params",
    "eval_F",
    "eval_T",
    "eval_T_deriv",
    "global_return",
    "local_flow_map",
    "return_time_local",
    "schwarzian",
    "truncated_distance",
    "validate_params",
    "__version__",
]
