"""
AR(1) flow model: simulation and calibration round trip
=======================================================

Per-flow volumes follow mean-reverting AR(1) deviations around a fixed
level.  A fully observed training window calibrates the level, the
autoregression coefficient, and the innovation variance by the method of
moments; this script checks the fit recovers known parameters.
"""

import numpy as np

from flowmon import FlowModel, calibrate, simulate

true_model = FlowModel(
    rho=np.array([0.9, 0.7, 0.0]),
    noise_var=np.array([100.0, 400.0, 25.0]),
    mean=np.array([1000.0, 5000.0, 200.0]),
    init_mean=np.array([1000.0, 5000.0, 200.0]),
    init_var=np.array([100.0 / 0.19, 400.0 / 0.51, 25.0]),
)

trace = simulate(true_model, 5000, seed=1)
print(f"simulated trace: {trace.shape[0]} slots, {trace.shape[1]} flows")
print(f"per-flow means: {trace.mean(axis=0).round(1)}")
print()

fit = calibrate(trace)
print("flow   rho(true)  rho(fit)   Q(true)   Q(fit)")
for j in range(3):
    print(f"{j:4d}   {true_model.rho[j]:9.2f}  {fit.rho[j]:8.3f}"
          f"   {true_model.noise_var[j]:7.0f}   {fit.noise_var[j]:7.1f}")
print()

# the calibrated model seeds the filter: the initial level is the last
# training observation and the initial variance the stationary variance
print(f"init_mean = last observation: {fit.init_mean.round(1)}")
print(f"init_var  = stationary var:   {fit.init_var.round(1)}")
print()

# a constant column cannot be fit; it is flagged instead of rejected
flat = trace.copy()
flat[:, 2] = 300.0
flagged = calibrate(flat)
print(f"constant column flags: {[bool(f) for f in flagged.constant_flags]}")
