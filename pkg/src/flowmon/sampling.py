"""Per-link Bernoulli packet sampling and minimum-variance combination.

A link samples each packet of a flow independently with its assigned rate
u, so the observed count is Binomial(x, u) and count/u estimates the true
volume x without bias, with variance x(1-u)/u.  When several links see the
same flow, the single best linear unbiased combination weights each link
estimate by its inverse variance; the unknown x cancels, leaving weights
that depend only on the rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net_model import RoutingMatrix

__all__ = [
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
]


@dataclass(frozen=True)
class SamplingPlan:
    """Per-link, per-flow sampling rates, shape (L, J), each in [0, 1]."""

    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.ndim != 2:
            raise ValueError("rates must be a 2-D (links x flows) array")
        if ((r < 0) | (r > 1)).any() or not np.isfinite(r).all():
            raise ValueError("every rate must lie in [0, 1]")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @property
    def n_links(self) -> int:
        return self.rates.shape[0]

    @property
    def n_flows(self) -> int:
        return self.rates.shape[1]

    def check_support(self, routing: RoutingMatrix) -> None:
        """Reject rates assigned where the flow does not traverse the link."""
        if self.rates.shape != routing.entries.shape:
            raise ValueError("plan shape does not match routing matrix")
        if (self.rates[routing.entries == 0] > 0).any():
            raise ValueError("positive rate on a link the flow does not use")


@dataclass(frozen=True)
class FlowObservation:
    """One flow's measurement in one slot.

    ``combined`` is the minimum-variance merge of the per-link unbiased
    estimates, or None when no link sampled the flow.  The variance of the
    merge equals ``combined_var_coeff`` times the true volume; the
    coefficient is +inf exactly when the observation is missing.
    """

    flow: int
    per_link_counts: dict[int, int]
    per_link_estimates: dict[int, float]
    combined: float | None
    combined_var_coeff: float

    @property
    def missing(self) -> bool:
        return self.combined is None


def bernoulli_sample(volume: float, rate: float, rng: np.random.Generator) -> int:
    """Sampled packet count: Binomial(round(volume), rate)."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    if volume < 0:
        raise ValueError("volume must be >= 0")
    n = int(np.rint(volume))
    return int(rng.binomial(n, rate))


def link_estimate(count: int, rate: float) -> float:
    """Unbiased per-link volume estimate count / rate."""
    if rate <= 0:
        raise ValueError("rate must be positive to invert a count")
    if rate > 1:
        raise ValueError("rate must lie in (0, 1]")
    return count / rate


def link_estimator_variance(volume: float, rate: float) -> float:
    """Variance x(1-u)/u of the per-link estimate; +inf for an unsampled link."""
    if volume < 0:
        raise ValueError("volume must be >= 0")
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    if rate == 0:
        return float("inf")
    return volume * (1.0 - rate) / rate


def blue_weights(variances) -> np.ndarray:
    """Inverse-variance weights; zero-variance input takes all the weight.

    Weights are nonnegative and sum to one.  Ties between exact
    zero-variance entries are split evenly.
    """
    v = np.asarray(variances, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("variances must be a nonempty 1-D vector")
    if (v < 0).any() or np.isnan(v).any():
        raise ValueError("variances must be nonnegative")
    zero = v == 0
    if zero.any():
        w = zero / zero.sum()
        return w.astype(float)
    inv = 1.0 / v
    total = inv.sum()
    if total == 0:
        raise ValueError("all variances are infinite; nothing to weight")
    return inv / total


def combine(estimates, variances) -> float:
    """Minimum-variance linear merge of unbiased estimates."""
    e = np.asarray(estimates, dtype=float)
    w = blue_weights(variances)
    if e.shape != w.shape:
        raise ValueError("estimates and variances must have equal length")
    assert abs(w.sum() - 1.0) <= 1e-12
    return float(w @ e)


def combined_variance_coeff(rates) -> float:
    """Variance of the merged estimate per unit of true volume.

    For rates u_1..u_k on the links that carry the flow this is
    ``1 / sum(u_i / (1 - u_i))``: a rate of 0 contributes nothing, a rate
    of 1 makes the flow exactly observed (coefficient 0), and all-zero
    rates leave the flow unobserved (+inf).
    """
    u = np.asarray(rates, dtype=float)
    if u.ndim != 1:
        raise ValueError("rates must be a 1-D vector")
    if ((u < 0) | (u > 1)).any():
        raise ValueError("every rate must lie in [0, 1]")
    if (u >= 1).any():
        return 0.0
    s = (u / (1.0 - u)).sum()
    if s == 0:
        return float("inf")
    return float(1.0 / s)


def plan_variance_coeffs(plan: SamplingPlan, routing: RoutingMatrix) -> np.ndarray:
    """Per-flow combined variance coefficients for a whole plan, shape (J,).

    Entry j is ``combined_variance_coeff`` of the rates flow j receives on
    the links it traverses; rates off the flow's path are ignored.
    """
    if plan.rates.shape != routing.entries.shape:
        raise ValueError("plan shape does not match routing matrix")
    u = np.where(routing.entries == 1, plan.rates, 0.0)
    with np.errstate(divide="ignore"):
        g = np.where(u < 1.0, u / (1.0 - u), np.inf)
    s = g.sum(axis=0)
    with np.errstate(divide="ignore"):
        coeff = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), np.inf)
    coeff[np.isinf(s)] = 0.0
    return coeff


def observe_flows(
    x_true,
    plan: SamplingPlan,
    routing: RoutingMatrix,
    rng: np.random.Generator,
) -> list[FlowObservation]:
    """Sample one slot of traffic on every link and merge per flow.

    Each (link, flow) pair with a positive rate draws an independent
    binomial count from the integer-rounded true volume.  Flows whose path
    carries no positive rate come back missing.
    """
    x = np.asarray(x_true, dtype=float)
    if x.shape != (routing.n_flows,):
        raise ValueError("x_true must have one volume per flow")
    if (x < 0).any():
        raise ValueError("volumes must be >= 0")
    plan.check_support(routing)
    x_int = np.rint(x)

    out = []
    for j in range(routing.n_flows):
        links = np.flatnonzero((routing.entries[:, j] == 1) & (plan.rates[:, j] > 0))
        if links.size == 0:
            out.append(FlowObservation(j, {}, {}, None, float("inf")))
            continue
        u = plan.rates[links, j]
        counts = rng.binomial(int(x_int[j]), u)
        ests = counts / u
        if (u >= 1.0).any():
            combined = float(x_int[j])
            coeff = 0.0
        else:
            g = u / (1.0 - u)
            w = g / g.sum()
            combined = float(w @ ests)
            coeff = float(1.0 / g.sum())
        out.append(
            FlowObservation(
                flow=j,
                per_link_counts={int(l): int(c) for l, c in zip(links, counts)},
                per_link_estimates={int(l): float(e) for l, e in zip(links, ests)},
                combined=combined,
                combined_var_coeff=coeff,
            )
        )
    return out
