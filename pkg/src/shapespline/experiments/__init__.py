"""Verification suites, rate experiments and their record formats."""

from .catalog import TRUTHS, Truth, get_truth, knot_schedule, random_design, random_knots, simulate_model
from .config import ExperimentConfig, parallel_map, thread_count
from .rates import rate_experiment, stochastic_ratio_experiment
from .records import ResultRecord, records_to_csv, summarize
from .suites import (
    design_gramian_suite,
    gramian_sweep,
    lipschitz_sweep,
    null_space_suite,
    fine_grid_suite,
    qp_oracle_suite,
    run_bound_suite,
)

__all__ = [
    "TRUTHS",
    "ExperimentConfig",
    "ResultRecord",
    "Truth",
    "design_gramian_suite",
    "get_truth",
    "gramian_sweep",
    "knot_schedule",
    "lipschitz_sweep",
    "null_space_suite",
    "parallel_map",
    "fine_grid_suite",
    "qp_oracle_suite",
    "random_design",
    "random_knots",
    "rate_experiment",
    "records_to_csv",
    "run_bound_suite",
    "simulate_model",
    "stochastic_ratio_experiment",
    "summarize",
    "thread_count",
]
