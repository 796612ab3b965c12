"""Pauli-frame Monte Carlo for the Bacon-Shor memory."""

from .frame import Decision, PauliFrame, decode_bs9, logical_failure, propagate
from .montecarlo import (
    CHUNK,
    Fault,
    PecEstimate,
    TrialOutcome,
    binomial_interval,
    estimate_pec,
    run_ec_trial,
    run_faults,
    sample_faults,
)
from .program import Program, build_blackbox_program, build_native_program, build_steane_program

__all__ = [
    "CHUNK",
    "Decision",
    "Fault",
    "PauliFrame",
    "PecEstimate",
    "Program",
    "TrialOutcome",
    "binomial_interval",
    "build_blackbox_program",
    "build_native_program",
    "build_steane_program",
    "decode_bs9",
    "estimate_pec",
    "logical_failure",
    "propagate",
    "run_ec_trial",
    "run_faults",
    "sample_faults",
]
