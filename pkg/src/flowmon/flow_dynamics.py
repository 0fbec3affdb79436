"""Per-flow AR(1) traffic dynamics: synthetic traces and calibration.

Each flow's volume is modelled as a stationary AR(1) deviation around a
long-run level,

    c_{t+1} = rho * c_t + w_t,      w_t ~ N(0, sigma^2),
    x_t     = max(0, level + c_t),

so simulated traces behave like packet counts (nonnegative) while the
filter can run on the centered, strictly linear series.  Calibration fits
the level, the lag-1 coefficient, and the innovation variance per flow by
method of moments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "FlowModel",
    "simulate",
    "calibrate",
    "random_flow_model",
    "load_trace_csv",
    "save_trace_csv",
    "load_model_json",
    "save_model_json",
    "DEFAULT_VAR_FLOOR",
]

DEFAULT_VAR_FLOOR = 1e-6

_MODEL_FIELDS = ("rho", "noise_var", "mean", "init_mean", "init_var")


@dataclass(frozen=True)
class FlowModel:
    """AR(1) parameters for every flow.

    Parameters
    ----------
    rho : (J,) array
        Autoregression coefficients, each strictly inside (-1, 1).
    noise_var : (J,) array
        Innovation variances, strictly positive.
    mean : (J,) array
        Long-run volume levels, nonnegative; the recursion runs on
        deviations from these.
    init_mean : (J,) array
        Volume level the first simulated/filtered slot is centered on.
    init_var : (J,) array
        Variance of the initial deviation, strictly positive.
    constant_flags : (J,) bool array, optional
        Set by :func:`calibrate` to mark flows whose training column was
        constant and whose parameters are fallback values.
    """

    rho: np.ndarray
    noise_var: np.ndarray
    mean: np.ndarray
    init_mean: np.ndarray
    init_var: np.ndarray
    constant_flags: np.ndarray | None = None

    def __post_init__(self):
        arrays = {}
        for name in _MODEL_FIELDS:
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if a.ndim != 1:
                raise ValueError(f"{name} must be a 1-D vector")
            arrays[name] = a
        n = arrays["rho"].size
        if any(a.size != n for a in arrays.values()):
            raise ValueError("all FlowModel vectors must have equal length")
        if (np.abs(arrays["rho"]) >= 1).any():
            raise ValueError("|rho| must be < 1 for every flow")
        if (arrays["noise_var"] <= 0).any():
            raise ValueError("noise_var must be positive for every flow")
        if (arrays["init_var"] <= 0).any():
            raise ValueError("init_var must be positive for every flow")
        if (arrays["mean"] < 0).any():
            raise ValueError("mean must be nonnegative for every flow")
        for name, a in arrays.items():
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_flows(self) -> int:
        return self.rho.size

    @property
    def stationary_var(self) -> np.ndarray:
        """Variance of the stationary AR(1) deviation, sigma^2 / (1 - rho^2)."""
        return self.noise_var / (1.0 - self.rho**2)


def simulate(model: FlowModel, n_steps: int, seed) -> np.ndarray:
    """Draw a synthetic (n_steps, J) trace of nonnegative flow volumes.

    The initial deviation of flow j is N(init_mean - mean, init_var); each
    later deviation follows the AR(1) recursion; emitted volumes are
    ``max(0, mean + deviation)``.  Identical seeds give identical traces.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = np.random.default_rng(seed)
    J = model.n_flows
    c = np.empty((n_steps, J))
    c[0] = rng.normal(model.init_mean - model.mean, np.sqrt(model.init_var))
    if n_steps > 1:
        w = rng.normal(0.0, np.sqrt(model.noise_var), size=(n_steps - 1, J))
        for t in range(n_steps - 1):
            c[t + 1] = model.rho * c[t] + w[t]
    return np.maximum(model.mean + c, 0.0)


def calibrate(training, var_floor: float = DEFAULT_VAR_FLOOR) -> FlowModel:
    """Fit per-flow AR(1) parameters from a fully observed training window.

    Per flow: the level is the sample mean, rho is the lag-1 sample
    autocorrelation of the centered series (clamped to +-0.999), and the
    innovation variance is ``(1 - rho^2) * sample variance`` floored at
    ``var_floor``.  The initial level is the last observed value and the
    initial variance is the implied stationary variance.

    A constant column yields rho = 0 and the floor variance, and is marked
    in ``constant_flags`` rather than raising; a training window in which
    *every* column is constant is rejected.
    """
    x = np.asarray(training, dtype=float)
    if x.ndim != 2 or x.shape[0] < 10:
        raise ValueError("training window must be 2-D with at least 10 steps")
    if var_floor <= 0:
        raise ValueError("var_floor must be positive")
    constant = (x == x[0]).all(axis=0)
    if constant.all():
        raise ValueError("every flow column is constant; nothing to calibrate")

    mean = x.mean(axis=0)
    c = x - mean
    var = c.var(axis=0)
    num = (c[:-1] * c[1:]).sum(axis=0)
    den = (c**2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    rho = np.clip(rho, -0.999, 0.999)
    rho[constant] = 0.0
    noise_var = np.maximum(var_floor, (1.0 - rho**2) * var)
    noise_var[constant] = var_floor
    init_var = noise_var / (1.0 - rho**2)
    return FlowModel(
        rho=rho,
        noise_var=noise_var,
        mean=mean,
        init_mean=x[-1],
        init_var=init_var,
        constant_flags=constant,
    )


def random_flow_model(
    n_flows: int,
    seed,
    mean_log10_range: tuple[float, float] = (2.0, 5.0),
    rho_range: tuple[float, float] = (0.7, 0.95),
    stationary_cv: float = 0.02,
) -> FlowModel:
    """Draw a heterogeneous multi-flow model for synthetic experiments.

    Levels are log-uniform over ``10**mean_log10_range`` (so flow sizes can
    span orders of magnitude), rho is uniform over ``rho_range``, and the
    innovation variance is set so the stationary deviation has standard
    deviation ``stationary_cv * level``.  Flows start in steady state.

    The default ``stationary_cv`` keeps each flow's intrinsic spread well
    below its level, the regime in which concentrating a link's budget on
    its dominant flows beats spreading it thin; large cv values instead
    let the flows that a tight budget cannot cover dominate the error.
    """
    if n_flows < 1:
        raise ValueError("n_flows must be >= 1")
    if not 0 < stationary_cv:
        raise ValueError("stationary_cv must be positive")
    lo, hi = mean_log10_range
    rlo, rhi = rho_range
    if not (-1 < rlo <= rhi < 1):
        raise ValueError("rho_range must lie inside (-1, 1)")
    rng = np.random.default_rng(seed)
    mean = 10.0 ** rng.uniform(lo, hi, n_flows)
    rho = rng.uniform(rlo, rhi, n_flows)
    stat_var = (stationary_cv * mean) ** 2
    return FlowModel(
        rho=rho,
        noise_var=stat_var * (1.0 - rho**2),
        mean=mean,
        init_mean=mean,
        init_var=stat_var,
    )


def save_trace_csv(trace, path) -> None:
    """Write a (T, J) trace as ``t,flow_0,...,flow_{J-1}`` rows."""
    x = np.asarray(trace, dtype=float)
    if x.ndim != 2:
        raise ValueError("trace must be 2-D")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t"] + [f"flow_{j}" for j in range(x.shape[1])])
        for t in range(x.shape[0]):
            writer.writerow([t] + [repr(float(v)) for v in x[t]])


def load_trace_csv(path) -> np.ndarray:
    """Read a trace CSV back into a (T, J) array of nonnegative volumes."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ConfigError(f"{path}: empty trace file")
    header = rows[0]
    n_flows = len(header) - 1
    if n_flows < 1 or header != ["t"] + [f"flow_{j}" for j in range(n_flows)]:
        raise ConfigError(f"{path}: header must be t,flow_0,...,flow_{{J-1}}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n_flows + 1:
            raise ConfigError(f"{path}: line {i}: expected {n_flows + 1} cells")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as e:
            raise ConfigError(f"{path}: line {i}: {e}") from e
        if any(v < 0 or not np.isfinite(v) for v in vals):
            raise ConfigError(f"{path}: line {i}: volumes must be finite and >= 0")
        out.append(vals)
    if not out:
        raise ConfigError(f"{path}: no data rows")
    return np.array(out)


def save_model_json(model: FlowModel, path) -> None:
    """Write model parameters as a JSON object keyed by field name."""
    payload = {name: getattr(model, name).tolist() for name in _MODEL_FIELDS}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def load_model_json(path) -> FlowModel:
    """Read model parameters written by :func:`save_model_json`."""
    with open(path, encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(payload, dict) or set(payload) != set(_MODEL_FIELDS):
        raise ConfigError(f"{path}: expected exactly the keys {_MODEL_FIELDS}")
    try:
        return FlowModel(**{name: np.asarray(payload[name], dtype=float) for name in _MODEL_FIELDS})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e
