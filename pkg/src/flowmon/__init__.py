"""Resource-constrained network flow monitoring.

Pick per-link packet-sampling rates under budget constraints by
minimizing a concave estimation-error cost over the vertices of the
feasible polytopes, then track per-flow traffic volumes with a Kalman
filter fed by inverse-variance-merged sampled observations.
"""

from .errors import ConfigError, FilterNumericalError, SolverSizeError
from .flow_dynamics import (
    FlowModel,
    calibrate,
    load_model_json,
    load_trace_csv,
    random_flow_model,
    save_model_json,
    save_trace_csv,
    simulate,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    PlanRun,
    compare,
    rmse,
    run_experiment,
    write_outputs,
)
from .kalman import (
    KalmanState,
    MeasurementNoise,
    Prediction,
    filter_step,
    measurement_noise,
    predict,
    update,
)
from .net_model import (
    RoutingMatrix,
    flows_on_link,
    link_loads,
    links_of_flow,
    load_routing_csv,
    save_routing_csv,
    synthetic_topology,
)
from .opt import (
    CostSurrogate,
    LinkBudget,
    feasible,
    instantaneous_cost,
    link_vertices,
    load_plan_csv,
    naive_allocation,
    save_plan_csv,
    solve_exact,
    solve_heuristic,
)
from .sampling import (
    FlowObservation,
    SamplingPlan,
    bernoulli_sample,
    blue_weights,
    combine,
    combined_variance_coeff,
    link_estimate,
    link_estimator_variance,
    observe_flows,
    plan_variance_coeffs,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FilterNumericalError",
    "SolverSizeError",
    "FlowModel",
    "calibrate",
    "simulate",
    "random_flow_model",
    "load_trace_csv",
    "save_trace_csv",
    "load_model_json",
    "save_model_json",
    "ExperimentConfig",
    "ExperimentResult",
    "PlanRun",
    "run_experiment",
    "compare",
    "write_outputs",
    "rmse",
    "KalmanState",
    "Prediction",
    "MeasurementNoise",
    "predict",
    "measurement_noise",
    "update",
    "filter_step",
    "RoutingMatrix",
    "synthetic_topology",
    "links_of_flow",
    "flows_on_link",
    "link_loads",
    "load_routing_csv",
    "save_routing_csv",
    "LinkBudget",
    "CostSurrogate",
    "instantaneous_cost",
    "naive_allocation",
    "feasible",
    "link_vertices",
    "solve_exact",
    "solve_heuristic",
    "save_plan_csv",
    "load_plan_csv",
    "SamplingPlan",
    "FlowObservation",
    "bernoulli_sample",
    "link_estimate",
    "link_estimator_variance",
    "blue_weights",
    "combine",
    "combined_variance_coeff",
    "plan_variance_coeffs",
    "observe_flows",
    "__version__",
]
