"""Quantum circuit simulation with size-dependent dephasing noise."""
from .engine import (
    CNOT, MCZ, RZ, Circuit, EquatorialPulse, H, MixedState, NoiseSite, Placement, PureState, Scope, X, Z,
    apply_circuit, apply_gate, dm_apply_channel, dm_apply_gate, dm_from_pure, parity_expectation, sample_counts,
    zero_state,
)
from .noise import (
    Constant, DephasingChannel, ExpSaturating, NoiseSpec, PowerLaw, noise_probability, phase_damping_kraus,
    phase_damping_lambda, phase_flip_kraus, sample_z_action,
)
from .oracle import grover_noiseless_success, predict_branch_visibility, predict_ghz_visibility
from .protocols import (
    Backend, BranchMass, ExperimentConfig, GhzParity, Grover, ParityCurve, build_branch, build_ghz, build_grover,
    run_branch, run_ghz_parity, run_grover, visibility_from_curve,
)
from .runner import ResultRow, SweepPlan, parse_config, read_csv, run_sweep, write_csv
from .chart import emit_chart

__all__ = [
    "CNOT",
    "MCZ",
    "RZ",
    "Circuit",
    "EquatorialPulse",
    "H",
    "MixedState",
    "NoiseSite",
    "Placement",
    "PureState",
    "Scope",
    "X",
    "Z",
    "apply_circuit",
    "apply_gate",
    "dm_apply_channel",
    "dm_apply_gate",
    "dm_from_pure",
    "parity_expectation",
    "sample_counts",
    "zero_state",
    "Constant",
    "DephasingChannel",
    "ExpSaturating",
    "NoiseSpec",
    "PowerLaw",
    "noise_probability",
    "phase_damping_kraus",
    "phase_damping_lambda",
    "phase_flip_kraus",
    "sample_z_action",
    "grover_noiseless_success",
    "predict_branch_visibility",
    "predict_ghz_visibility",
    "Backend",
    "BranchMass",
    "ExperimentConfig",
    "GhzParity",
    "Grover",
    "ParityCurve",
    "build_branch",
    "build_ghz",
    "build_grover",
    "run_branch",
    "run_ghz_parity",
    "run_grover",
    "visibility_from_curve",
    "ResultRow",
    "SweepPlan",
    "parse_config",
    "read_csv",
    "run_sweep",
    "write_csv",
    "emit_chart",
]

__version__ = "0.1.0"
