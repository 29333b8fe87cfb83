"""Joint spectral radius tools for distributed power control.

Bracket the joint spectral radius of a finite set of update matrices and
use it to certify (or fail to certify) bounded transmit powers under the
DPC and DBA iterations with switching link gains.
"""

from ._backend import BACKEND
from .jsr import (
    JsrEstimate,
    StabilityCertificate,
    UpdateSet,
    brute_force_bounds,
    certificate_from_upper,
    gripenberg_certificate,
    gripenberg_estimate,
    instability_witness,
    scale_set,
)
from .matrix_core import NormKind, matrix_power_norm, multiply, norm, scale, spectral_radius
from .power_control import (
    UNBOUNDED,
    CSchedule,
    GainMatrix,
    Scheme,
    build_A,
    build_update_set,
    c_product_verdict,
    dba_step,
    dpc_step,
    sinr,
)
from .simulator import SwitchingPolicy, Trajectory, fit_decay_rate, run_trajectory, verdict

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CSchedule",
    "GainMatrix",
    "JsrEstimate",
    "NormKind",
    "Scheme",
    "StabilityCertificate",
    "SwitchingPolicy",
    "Trajectory",
    "UNBOUNDED",
    "UpdateSet",
    "brute_force_bounds",
    "build_A",
    "build_update_set",
    "c_product_verdict",
    "certificate_from_upper",
    "dba_step",
    "dpc_step",
    "fit_decay_rate",
    "gripenberg_certificate",
    "gripenberg_estimate",
    "instability_witness",
    "matrix_power_norm",
    "multiply",
    "norm",
    "run_trajectory",
    "scale",
    "scale_set",
    "sinr",
    "spectral_radius",
    "verdict",
]
