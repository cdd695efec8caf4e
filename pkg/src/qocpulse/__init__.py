"""Piecewise-constant pulse synthesis for superconducting-qubit gates,
with a simulated randomized-benchmarking harness for evaluating them."""

__version__ = "0.1.0"

from .model import (
    DeviceSpec,
    HamiltonianModel,
    build_cr_two_qubit,
    build_single_qubit,
    load_device_spec,
)
from .pulse import PulseProgram, ShapeSpec, make_initial, resample
from .propagate import (
    GateTarget,
    PropagationResult,
    gate_infidelity,
    gate_target,
    propagate,
    propagate_closed,
    propagate_open,
)
from .optimize import OptConfig, OptResult, grape_gradient, optimize_lbfgsb, optimize_spsa
from .bench import NoiseChannel, RbReport, channel_from_pulse, run_rb, sample_clifford

__all__ = [
    "DeviceSpec",
    "HamiltonianModel",
    "build_cr_two_qubit",
    "build_single_qubit",
    "load_device_spec",
    "PulseProgram",
    "ShapeSpec",
    "make_initial",
    "resample",
    "GateTarget",
    "PropagationResult",
    "gate_infidelity",
    "gate_target",
    "propagate",
    "propagate_closed",
    "propagate_open",
    "OptConfig",
    "OptResult",
    "grape_gradient",
    "optimize_lbfgsb",
    "optimize_spsa",
    "NoiseChannel",
    "RbReport",
    "channel_from_pulse",
    "run_rb",
    "sample_clifford",
]
