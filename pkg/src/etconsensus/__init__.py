"""Event-triggered average consensus on weight-balanced digraphs, with a clock-synchronization application."""

from .clock_sync import BENCHMARK_GAMMA, ClockModel, run_clock_sync, virtual_clocks
from .engine import SafetyCapExceeded, Trace, consensus_value, run_event_driven, run_fixed_step_oracle
from .graph import ConfigurationError, Digraph, build_digraph, laplacian_spectrum, network
from .lyapunov import exp_rate, lyapunov_value, monotonicity_report, v2dot_bound_check
from .metrics import MetricsReport, compute_metrics, convergence_time, count_events, energy, h2_norm_sq
from .triggers import TriggerLaw, dwell_bounds, degree_bc, safe_bc, thresholds, validate_and_derive

__all__ = [
    "BENCHMARK_GAMMA", "ClockModel", "run_clock_sync", "virtual_clocks",
    "SafetyCapExceeded", "Trace", "consensus_value", "run_event_driven", "run_fixed_step_oracle",
    "ConfigurationError", "Digraph", "build_digraph", "laplacian_spectrum", "network",
    "exp_rate", "lyapunov_value", "monotonicity_report", "v2dot_bound_check",
    "MetricsReport", "compute_metrics", "convergence_time", "count_events", "energy", "h2_norm_sq",
    "TriggerLaw", "dwell_bounds", "degree_bc", "safe_bc", "thresholds", "validate_and_derive",
]
__version__ = "0.1.0"
