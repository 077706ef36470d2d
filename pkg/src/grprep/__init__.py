"""Sparse Grover-Rudolph state preparation with exact and fidelity-budgeted gate merging."""
from __future__ import annotations

from .approx_optimizer import ApproxOptimizer, ApproxResult, Cluster, cluster_angle, optimize_approx
from .circuit_ir import Circuit, ControlPattern, CostReport, GateLayer, cost_report, parse_circuit, serialize_circuit
from .errors import GRPrepError, ParseError, ValidationError
from .exact_optimizer import ExactResult, optimize_exact
from .fidelity_bound import amplification_table, lower_bound, single_merge_overlap
from .harness import ExperimentConfig, ResultRecord, random_instance, run_experiment, run_pipeline
from .simulator import overlap, simulate, simulate_prefix
from .state_model import (
    BaselineCircuit,
    PreparationTree,
    SparseState,
    build_preparation_tree,
    compute_baseline_angles,
    normalize_and_validate,
    parse_state,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxOptimizer", "ApproxResult", "BaselineCircuit", "Circuit", "Cluster", "ControlPattern",
    "CostReport", "ExactResult", "ExperimentConfig", "GRPrepError", "GateLayer", "ParseError",
    "PreparationTree", "ResultRecord", "SparseState", "ValidationError", "amplification_table",
    "build_preparation_tree", "cluster_angle", "compute_baseline_angles", "cost_report", "lower_bound",
    "normalize_and_validate", "optimize_approx", "optimize_exact", "overlap", "parse_circuit",
    "parse_state", "random_instance", "run_experiment", "run_pipeline", "serialize_circuit",
    "simulate", "simulate_prefix", "single_merge_overlap",
]
