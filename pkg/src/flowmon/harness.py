"""End-to-end monitoring experiments: calibrate, plan, sample, filter.

An experiment splits a traffic trace at ``t0``.  The flow models are
calibrated on the training prefix, a sampling plan is solved for the
calibrated predictions, and the remaining slots are monitored: each slot
is sampled under the plan, the per-flow merged observations feed the
filter, and the per-slot RMSE of the volume estimates is recorded.
``compare`` runs the optimized plan and the even-split baseline on the
same trace with independent sampling randomness and reports the percent
RMSE reduction.

All randomness derives from one master seed through a fixed spawn order
(topology, model, trace, solver, optimized-plan sampling, baseline
sampling), so results are reproducible byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .flow_dynamics import FlowModel, calibrate, load_trace_csv, random_flow_model, simulate
from .kalman import KalmanState, filter_step
from .net_model import RoutingMatrix, load_routing_csv, synthetic_topology
from .opt import (
    CostSurrogate,
    LinkBudget,
    naive_allocation,
    save_plan_csv,
    solve_exact,
    solve_heuristic,
)
from .sampling import SamplingPlan, observe_flows

__all__ = [
    "ExperimentConfig",
    "PlanRun",
    "ExperimentResult",
    "rmse",
    "run_experiment",
    "compare",
    "write_outputs",
]


def _default_topology() -> dict:
    return {"kind": "synthetic", "nodes": 9, "links": 26, "flows": 72}


def _default_trace() -> dict:
    return {
        "kind": "synthetic",
        "mean_log10_range": [2.0, 5.0],
        "rho_range": [0.7, 0.95],
        "stationary_cv": 0.02,
    }


def _check_pair(name: str, value) -> list[float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{name} must be a pair of numbers")
    return [float(value[0]), float(value[1])]


def _normalize_topology(topology) -> dict:
    if not isinstance(topology, dict) or "kind" not in topology:
        raise ConfigError("topology must be a mapping with a 'kind' key")
    kind = topology["kind"]
    if kind == "synthetic":
        allowed = {"kind", "nodes", "links", "flows"}
        unknown = set(topology) - allowed
        if unknown:
            raise ConfigError(f"unknown topology keys: {sorted(unknown)}")
        out = dict(_default_topology())
        out.update(topology)
        for key in ("nodes", "links", "flows"):
            if not isinstance(out[key], int) or out[key] < 1:
                raise ConfigError(f"topology.{key} must be a positive integer")
        return out
    if kind == "csv":
        unknown = set(topology) - {"kind", "path"}
        if unknown:
            raise ConfigError(f"unknown topology keys: {sorted(unknown)}")
        if not isinstance(topology.get("path"), str):
            raise ConfigError("topology.path must be a string")
        return {"kind": "csv", "path": topology["path"]}
    raise ConfigError(f"topology.kind must be 'synthetic' or 'csv', got {kind!r}")


def _normalize_trace(trace) -> dict:
    if not isinstance(trace, dict) or "kind" not in trace:
        raise ConfigError("trace must be a mapping with a 'kind' key")
    kind = trace["kind"]
    if kind == "synthetic":
        allowed = {"kind", "mean_log10_range", "rho_range", "stationary_cv"}
        unknown = set(trace) - allowed
        if unknown:
            raise ConfigError(f"unknown trace keys: {sorted(unknown)}")
        out = dict(_default_trace())
        out.update(trace)
        out["mean_log10_range"] = _check_pair("trace.mean_log10_range", out["mean_log10_range"])
        out["rho_range"] = _check_pair("trace.rho_range", out["rho_range"])
        rlo, rhi = out["rho_range"]
        if not (-1 < rlo <= rhi < 1):
            raise ConfigError("trace.rho_range must lie inside (-1, 1)")
        cv = out["stationary_cv"]
        if not isinstance(cv, (int, float)) or cv <= 0:
            raise ConfigError("trace.stationary_cv must be positive")
        out["stationary_cv"] = float(cv)
        return out
    if kind == "csv":
        unknown = set(trace) - {"kind", "path"}
        if unknown:
            raise ConfigError(f"unknown trace keys: {sorted(unknown)}")
        if not isinstance(trace.get("path"), str):
            raise ConfigError("trace.path must be a string")
        return {"kind": "csv", "path": trace["path"]}
    raise ConfigError(f"trace.kind must be 'synthetic' or 'csv', got {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a monitoring experiment needs, in plain JSON/TOML types.

    ``T`` may be omitted for CSV traces (the full file is used).
    ``budget`` is a single per-link budget or one value per link.
    Adaptive planning re-solves the plan every ``resolve_every`` slots
    from the latest volume estimates; static planning keeps the plan
    solved at ``t0``.
    """

    topology: dict = field(default_factory=_default_topology)
    trace: dict = field(default_factory=_default_trace)
    T: int | None = None
    t0: int = 500
    budget: float | list = 0.2
    u_max: float = 1.0
    planning: str = "static"
    resolve_every: int | None = None
    solver: str = "heuristic"
    restarts: int = 8
    m_scale: float = 1e4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "topology", _normalize_topology(self.topology))
        object.__setattr__(self, "trace", _normalize_trace(self.trace))
        if not isinstance(self.t0, int) or self.t0 < 10:
            raise ConfigError("t0 must be an integer >= 10")
        if self.T is None:
            if self.trace["kind"] != "csv":
                raise ConfigError("T is required unless the trace comes from a CSV file")
        else:
            if not isinstance(self.T, int) or self.T <= self.t0:
                raise ConfigError("T must be an integer > t0")
        if isinstance(self.budget, (list, tuple)):
            vals = list(self.budget)
            if not vals or not all(isinstance(v, (int, float)) and 0 < v <= 1 for v in vals):
                raise ConfigError("budget entries must lie in (0, 1]")
            object.__setattr__(self, "budget", [float(v) for v in vals])
        elif isinstance(self.budget, (int, float)) and 0 < self.budget <= 1:
            object.__setattr__(self, "budget", float(self.budget))
        else:
            raise ConfigError("budget must lie in (0, 1] (scalar or per-link list)")
        if not isinstance(self.u_max, (int, float)) or not 0 < self.u_max <= 1:
            raise ConfigError("u_max must lie in (0, 1]")
        object.__setattr__(self, "u_max", float(self.u_max))
        if self.planning not in ("static", "adaptive"):
            raise ConfigError("planning must be 'static' or 'adaptive'")
        if self.planning == "static":
            if self.resolve_every is not None:
                raise ConfigError("resolve_every only applies to adaptive planning")
        else:
            if not isinstance(self.resolve_every, int) or self.resolve_every < 1:
                raise ConfigError("adaptive planning needs resolve_every >= 1")
        if self.solver not in ("heuristic", "exact"):
            raise ConfigError("solver must be 'heuristic' or 'exact'")
        if not isinstance(self.restarts, int) or self.restarts < 1:
            raise ConfigError("restarts must be an integer >= 1")
        if not isinstance(self.m_scale, (int, float)) or self.m_scale < 1:
            raise ConfigError("m_scale must be >= 1")
        object.__setattr__(self, "m_scale", float(self.m_scale))
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        name = str(path)
        if name.endswith(".json"):
            with open(path, encoding="utf-8") as f:
                try:
                    data = json.load(f)
                except json.JSONDecodeError as e:
                    raise ConfigError(f"{path}: invalid JSON: {e}") from e
        elif name.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as f:
                try:
                    data = tomllib.load(f)
                except tomllib.TOMLDecodeError as e:
                    raise ConfigError(f"{path}: invalid TOML: {e}") from e
        else:
            raise ConfigError(f"{path}: config file must end in .json or .toml")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class PlanRun:
    """One plan's monitored run.

    ``plan`` is the plan in force at the first monitored slot.
    ``observations`` holds the merged per-flow volume estimates fed to
    the filter, NaN where a flow went unobserved.
    """

    plan: SamplingPlan
    observations: np.ndarray
    estimates: np.ndarray
    rmse_series: np.ndarray
    rmse_time_average: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    routing: RoutingMatrix
    model: FlowModel
    truth: np.ndarray
    optimal: PlanRun
    baseline: PlanRun | None
    percent_reduction: float | None
    solver_stats: dict
    calibration_warnings: list[int]


def rmse(estimates, truth) -> np.ndarray:
    """Per-slot root mean squared error across flows."""
    e = np.asarray(estimates, dtype=float)
    x = np.asarray(truth, dtype=float)
    if e.shape != x.shape or e.ndim != 2:
        raise ValueError("estimates and truth must be equal-shape 2-D arrays")
    return np.sqrt(((e - x) ** 2).mean(axis=1))


def _load_inputs(cfg: ExperimentConfig, children):
    topo = cfg.topology
    if topo["kind"] == "synthetic":
        routing = synthetic_topology(
            n_nodes=topo["nodes"],
            n_links=topo["links"],
            n_flows=topo["flows"],
            seed=children[0],
        )
    else:
        routing = load_routing_csv(topo["path"])
    J = routing.n_flows

    tr = cfg.trace
    if tr["kind"] == "synthetic":
        model_true = random_flow_model(
            J,
            children[1],
            mean_log10_range=tuple(tr["mean_log10_range"]),
            rho_range=tuple(tr["rho_range"]),
            stationary_cv=tr["stationary_cv"],
        )
        truth = simulate(model_true, cfg.T, children[2])
    else:
        truth = load_trace_csv(tr["path"])
        if truth.shape[1] != J:
            raise ConfigError(
                f"trace has {truth.shape[1]} flows but the topology has {J}"
            )
        if cfg.T is not None:
            if cfg.T > truth.shape[0]:
                raise ConfigError(
                    f"T={cfg.T} exceeds the {truth.shape[0]} rows in the trace"
                )
            truth = truth[: cfg.T]
    if cfg.t0 >= truth.shape[0]:
        raise ConfigError("t0 must leave at least one slot to monitor")
    return routing, truth


def _make_budget(cfg: ExperimentConfig, n_links: int) -> LinkBudget:
    if isinstance(cfg.budget, list):
        if len(cfg.budget) != n_links:
            raise ConfigError(
                f"budget lists {len(cfg.budget)} links but the topology has {n_links}"
            )
        d = np.asarray(cfg.budget, dtype=float)
    else:
        d = np.full(n_links, cfg.budget)
    return LinkBudget(d=d, u_max=cfg.u_max)


def _make_solver(cfg, routing, budget, surrogate, solver_ss, stats):
    def solve(x_hat):
        if cfg.solver == "exact":
            return solve_exact(x_hat, routing, budget, surrogate, stats=stats)
        return solve_heuristic(
            x_hat,
            routing,
            budget,
            surrogate,
            restarts=cfg.restarts,
            seed=solver_ss.spawn(1)[0],
            stats=stats,
        )

    return solve


def _run_plan(truth, t0, routing, model, plan0, samp_rng, resolver=None, resolve_every=None):
    T, J = truth.shape
    n = T - t0
    state = KalmanState(
        mean=model.init_mean - model.mean, cov=np.diag(model.init_var)
    )
    plan = plan0
    observations = np.full((n, J), np.nan)
    estimates = np.empty((n, J))
    prev_estimate = None
    for i in range(n):
        t = t0 + i
        if resolver is not None and i > 0 and i % resolve_every == 0:
            plan = resolver(prev_estimate)
        obs = observe_flows(truth[t], plan, routing, samp_rng)
        z = np.array([np.nan if o.missing else o.combined for o in obs])
        observations[i] = z
        state, est = filter_step(state, model, plan, z, routing, t=t)
        estimates[i] = est
        prev_estimate = est
    series = rmse(estimates, truth[t0:])
    return PlanRun(
        plan=plan0,
        observations=observations,
        estimates=estimates,
        rmse_series=series,
        rmse_time_average=float(series.mean()),
    )


def _execute(cfg: ExperimentConfig, with_baseline: bool) -> ExperimentResult:
    children = np.random.SeedSequence(cfg.seed).spawn(6)
    routing, truth = _load_inputs(cfg, children)
    model = calibrate(truth[: cfg.t0])
    warnings = (
        [] if model.constant_flags is None else [int(j) for j in np.flatnonzero(model.constant_flags)]
    )
    budget = _make_budget(cfg, routing.n_links)
    budget.validate_for(routing)
    surrogate = CostSurrogate(unobserved_penalty_scale=cfg.m_scale)

    stats: dict = {}
    solve = _make_solver(cfg, routing, budget, surrogate, children[3], stats)
    plan0 = solve(model.init_mean)

    resolver = None
    updates = 0
    if cfg.planning == "adaptive":

        def resolver(x_hat):
            nonlocal updates
            updates += 1
            return solve(np.maximum(x_hat, 0.0))

    optimal = _run_plan(
        truth,
        cfg.t0,
        routing,
        model,
        plan0,
        np.random.default_rng(children[4]),
        resolver=resolver,
        resolve_every=cfg.resolve_every,
    )
    stats["plan_updates"] = updates

    baseline = None
    reduction = None
    if with_baseline:
        naive = naive_allocation(routing, budget)
        baseline = _run_plan(
            truth, cfg.t0, routing, model, naive, np.random.default_rng(children[5])
        )
        if baseline.rmse_time_average == 0:
            reduction = 0.0
        else:
            reduction = 100.0 * (
                baseline.rmse_time_average - optimal.rmse_time_average
            ) / baseline.rmse_time_average
    return ExperimentResult(
        config=cfg,
        routing=routing,
        model=model,
        truth=truth,
        optimal=optimal,
        baseline=baseline,
        percent_reduction=reduction,
        solver_stats=stats,
        calibration_warnings=warnings,
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Calibrate, solve one plan, and filter the monitored slots."""
    return _execute(cfg, with_baseline=False)


def compare(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the optimized plan and the even-split baseline on the same trace.

    The two runs share the trace and the calibrated models but draw
    independent sampling randomness, so equal plans still produce
    different sampled counts.
    """
    return _execute(cfg, with_baseline=True)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_outputs(result: ExperimentResult, out_dir) -> None:
    """Write rmse.csv, estimates.csv, plan CSV(s), and summary.json.

    Comparison results write plan_opt.csv and plan_naive.csv and carry
    both runs in rmse.csv and estimates.csv; single runs write plan.csv
    and single-run columns.  Output is deterministic for a fixed config.
    """
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    truth = result.truth
    t0 = cfg.t0
    n, J = result.optimal.estimates.shape
    comparing = result.baseline is not None

    with open(os.path.join(out_dir, "rmse.csv"), "w", encoding="utf-8", newline="") as f:
        if comparing:
            f.write("t,rmse_opt,rmse_naive\n")
            for i in range(n):
                f.write(
                    f"{t0 + i},{_fmt(result.optimal.rmse_series[i])},"
                    f"{_fmt(result.baseline.rmse_series[i])}\n"
                )
        else:
            f.write("t,rmse\n")
            for i in range(n):
                f.write(f"{t0 + i},{_fmt(result.optimal.rmse_series[i])}\n")

    with open(
        os.path.join(out_dir, "estimates.csv"), "w", encoding="utf-8", newline=""
    ) as f:
        if comparing:
            f.write("t,flow,truth,estimate_opt,estimate_naive\n")
            for i in range(n):
                for j in range(J):
                    f.write(
                        f"{t0 + i},{j},{_fmt(truth[t0 + i, j])},"
                        f"{_fmt(result.optimal.estimates[i, j])},"
                        f"{_fmt(result.baseline.estimates[i, j])}\n"
                    )
        else:
            f.write("t,flow,truth,estimate\n")
            for i in range(n):
                for j in range(J):
                    f.write(
                        f"{t0 + i},{j},{_fmt(truth[t0 + i, j])},"
                        f"{_fmt(result.optimal.estimates[i, j])}\n"
                    )

    if comparing:
        save_plan_csv(result.optimal.plan, os.path.join(out_dir, "plan_opt.csv"))
        save_plan_csv(result.baseline.plan, os.path.join(out_dir, "plan_naive.csv"))
    else:
        save_plan_csv(result.optimal.plan, os.path.join(out_dir, "plan.csv"))

    summary = {
        "config": cfg.to_dict(),
        "n_links": int(result.routing.n_links),
        "n_flows": int(result.routing.n_flows),
        "t0": int(t0),
        "T": int(truth.shape[0]),
        "monitored_slots": int(n),
        "calibration_constant_flows": list(result.calibration_warnings),
        "solver_stats": _plain(result.solver_stats),
    }
    if comparing:
        summary["rmse_time_average_opt"] = float(result.optimal.rmse_time_average)
        summary["rmse_time_average_naive"] = float(result.baseline.rmse_time_average)
        summary["percent_reduction"] = float(result.percent_reduction)
    else:
        summary["rmse_time_average"] = float(result.optimal.rmse_time_average)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def _plain(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.integer,)):
            out[k] = int(v)
        elif isinstance(v, (np.floating, float)):
            out[k] = float(v)
        else:
            out[k] = v
    return out
