"""Kalman filtering of centered flow volumes under partial observation.

State: the vector of AR(1) deviations for all flows.  Transition is
diagonal (independent flows), process noise is the diagonal of innovation
variances, and the measurement is the identity restricted to the flows
that were actually sampled this slot.  Measurement noise is the combined
sampling variance, approximated with the predicted volume standing in for
the unknown true volume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import FilterNumericalError
from .flow_dynamics import FlowModel
from .net_model import RoutingMatrix
from .sampling import SamplingPlan, plan_variance_coeffs

__all__ = [
    "KalmanState",
    "Prediction",
    "MeasurementNoise",
    "predict",
    "measurement_noise",
    "update",
    "filter_step",
    "VARIANCE_FLOOR",
    "VOLUME_FLOOR",
]

VARIANCE_FLOOR = 1e-9
VOLUME_FLOOR = 1.0

_SYM_TOL = 1e-9


def _check_moments(mean, cov):
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if mean.ndim != 1:
        raise ValueError("mean must be a 1-D vector")
    n = mean.size
    if cov.shape != (n, n):
        raise ValueError("cov must be square and match the mean length")
    if not np.isfinite(mean).all() or not np.isfinite(cov).all():
        raise ValueError("mean and cov must be finite")
    if np.abs(cov - cov.T).max(initial=0.0) > _SYM_TOL:
        raise ValueError("cov must be symmetric")
    if (np.diag(cov) < 0).any():
        raise ValueError("cov diagonal must be nonnegative")
    mean.setflags(write=False)
    cov.setflags(write=False)
    return mean, cov


@dataclass(frozen=True)
class KalmanState:
    """Posterior moments of the centered flow vector."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean, cov = _check_moments(self.mean, self.cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_flows(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class Prediction:
    """Prior moments for the next slot, before any measurement."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean, cov = _check_moments(self.mean, self.cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_flows(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class MeasurementNoise:
    """Per-flow measurement variances; +inf marks a missing observation."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if v.ndim != 1:
            raise ValueError("variances must be a 1-D vector")
        if np.isnan(v).any() or (v <= 0).any():
            raise ValueError("variances must be positive (or +inf for missing)")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "variances", v)

    @property
    def observed(self) -> np.ndarray:
        return np.isfinite(self.variances)


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    cov = (cov + cov.T) / 2.0
    d = np.diag(cov).copy()
    np.fill_diagonal(cov, np.maximum(d, 0.0))
    return cov


def predict(state: KalmanState, model: FlowModel) -> Prediction:
    """Propagate moments one slot through the diagonal AR(1) transition."""
    if state.n_flows != model.n_flows:
        raise ValueError("state and model dimension mismatch")
    rho = model.rho
    mean = rho * state.mean
    cov = np.diag(model.noise_var) + rho[:, None] * state.cov * rho[None, :]
    return Prediction(mean=mean, cov=_symmetrize(cov))


def measurement_noise(
    pred: Prediction,
    plan: SamplingPlan,
    model: FlowModel,
    routing: RoutingMatrix,
    volume_floor: float = VOLUME_FLOOR,
    variance_floor: float = VARIANCE_FLOOR,
) -> MeasurementNoise:
    """Approximate the combined sampling variance per flow.

    The exact variance scales with the unknown true volume, so the
    predicted uncentered volume stands in, floored at ``volume_floor`` so
    a near-zero prediction cannot declare a sampled flow noiseless.
    Flows whose path carries no positive rate get +inf.
    """
    if pred.n_flows != model.n_flows:
        raise ValueError("prediction and model dimension mismatch")
    coeff = plan_variance_coeffs(plan, routing)
    if coeff.size != pred.n_flows:
        raise ValueError("plan and prediction dimension mismatch")
    proxy = np.maximum(volume_floor, pred.mean + model.mean)
    with np.errstate(invalid="ignore"):
        var = np.where(np.isfinite(coeff), np.maximum(variance_floor, proxy * coeff), np.inf)
    return MeasurementNoise(variances=var)


def update(
    pred: Prediction,
    z,
    noise: MeasurementNoise,
    t: int | None = None,
) -> KalmanState:
    """Condition the prediction on the observed (centered) measurements.

    ``z`` holds one centered measurement per flow with NaN at missing
    flows; missingness must agree with the +inf entries of ``noise``.
    Raises FilterNumericalError when the innovation covariance is not
    positive definite.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != pred.mean.shape:
        raise ValueError("z must have one entry per flow")
    obs = noise.observed
    if obs.shape != z.shape:
        raise ValueError("noise and z dimension mismatch")
    if (np.isnan(z) & obs).any() or (~np.isnan(z) & ~obs).any():
        raise ValueError("NaN measurements must coincide with infinite noise")
    if not obs.any():
        return KalmanState(mean=pred.mean, cov=_symmetrize(pred.cov.copy()))

    P = pred.cov
    idx = np.flatnonzero(obs)
    S = P[np.ix_(idx, idx)] + np.diag(noise.variances[idx])
    try:
        cf = cho_factor(S, lower=True)
    except LinAlgError as e:
        raise FilterNumericalError(
            "innovation covariance is not positive definite", t=t
        ) from e
    PH = P[:, idx]
    K = cho_solve(cf, PH.T).T
    innovation = z[idx] - pred.mean[idx]
    mean = pred.mean + K @ innovation
    cov = _symmetrize(P - K @ PH.T)
    return KalmanState(mean=mean, cov=cov)


def filter_step(
    state: KalmanState,
    model: FlowModel,
    plan: SamplingPlan,
    z_uncentered,
    routing: RoutingMatrix,
    t: int | None = None,
) -> tuple[KalmanState, np.ndarray]:
    """One predict/update cycle on uncentered combined observations.

    ``z_uncentered`` holds the merged volume estimate per flow, NaN where
    missing.  Returns the new posterior and the emitted volume estimates,
    ``max(0, mean + posterior deviation)``.
    """
    z_uncentered = np.asarray(z_uncentered, dtype=float)
    pred = predict(state, model)
    noise = measurement_noise(pred, plan, model, routing)
    z = z_uncentered - model.mean
    new_state = update(pred, z, noise, t=t)
    estimate = np.maximum(model.mean + new_state.mean, 0.0)
    return new_state, estimate
