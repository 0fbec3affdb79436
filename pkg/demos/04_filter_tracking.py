"""
Kalman tracking of one flow through sampling noise
==================================================

A single flow sampled at rate 0.2 on its one link.  The filter predicts
with the AR(1) model, converts each merged count estimate into a
measurement with volume-proportional noise, and conditions.  Its reported
posterior variance should match the squared error it actually achieves.
"""

import numpy as np

from flowmon import (
    FlowModel,
    KalmanState,
    RoutingMatrix,
    SamplingPlan,
    filter_step,
    observe_flows,
    simulate,
)

model = FlowModel(
    rho=np.array([0.9]),
    noise_var=np.array([100.0]),
    mean=np.array([1000.0]),
    init_mean=np.array([1000.0]),
    init_var=np.array([100.0 / 0.19]),
)
routing = RoutingMatrix(np.array([[1]]))
plan = SamplingPlan(np.array([[0.2]]))

T = 2000
seeds = np.random.SeedSequence(0).spawn(2)
truth = simulate(model, T, seed=seeds[0])
rng = np.random.default_rng(seeds[1])

state = KalmanState(mean=model.init_mean - model.mean, cov=np.diag(model.init_var))
errors = np.empty(T)
post_var = np.empty(T)
raw_errors = np.empty(T)
for t in range(T):
    obs = observe_flows(truth[t], plan, routing, rng)[0]
    state, est = filter_step(state, model, plan, np.array([obs.combined]),
                             routing, t=t)
    errors[t] = est[0] - truth[t, 0]
    post_var[t] = state.cov[0, 0]
    raw_errors[t] = obs.combined - truth[t, 0]

print(f"raw merged estimate RMSE:  {np.sqrt(np.mean(raw_errors**2)):7.1f}")
print(f"filtered estimate RMSE:    {np.sqrt(np.mean(errors**2)):7.1f}")
print(f"filter's own posterior sd: {np.sqrt(post_var.mean()):7.1f}")
print()

# consistency: normalized errors should be close to standard normal
z = errors / np.sqrt(post_var)
print(f"z-score mean {z.mean():+.3f}, variance {z.var():.3f} (target ~1)")
print()

# the steady-state gain splits trust between model and measurement
print(f"steady posterior variance {post_var[-1]:.1f}"
      f" vs stationary prior {model.stationary_var[0]:.1f}")
