"""
Packet sampling and per-flow estimate merging
=============================================

A link samples each packet of a flow independently with rate u, so the
recorded count is Binomial(x, u) and count/u is an unbiased estimate of
the true volume x with variance x(1-u)/u.  When several links on the
flow's path sample it, the inverse-variance weighted merge is the best
linear unbiased combination.
"""

import numpy as np

from flowmon import (
    bernoulli_sample,
    blue_weights,
    combine,
    combined_variance_coeff,
    link_estimate,
    link_estimator_variance,
)

rng = np.random.default_rng(0)

x = 1000.0
print(f"true volume x = {x:g}")
print()

# one link, three sampling rates: check the mean and variance empirically
print("rate   mean(est)   var(est)    x(1-u)/u")
for u in (0.05, 0.2, 0.5):
    ests = np.array(
        [link_estimate(bernoulli_sample(x, u, rng), u) for _ in range(20000)]
    )
    print(f"{u:4.2f}   {ests.mean():9.1f}   {ests.var():8.1f}    {link_estimator_variance(x, u):8.1f}")
print()

# two links at different rates: the merge weights the cheaper estimate more
u1, u2 = 0.1, 0.4
v = np.array([link_estimator_variance(x, u1), link_estimator_variance(x, u2)])
w = blue_weights(v)
print(f"rates ({u1}, {u2}) -> per-link variances {v[0]:.0f}, {v[1]:.0f}")
print(f"merge weights {w[0]:.3f}, {w[1]:.3f}")

merged = np.empty(20000)
for i in range(merged.size):
    e1 = link_estimate(bernoulli_sample(x, u1, rng), u1)
    e2 = link_estimate(bernoulli_sample(x, u2, rng), u2)
    merged[i] = combine([e1, e2], v)
coeff = combined_variance_coeff(np.array([u1, u2]))
print(f"merged: mean {merged.mean():.1f}, var {merged.var():.0f}"
      f" (predicted {coeff * x:.0f})")
print()

# the merged variance is the harmonic composition, so it beats both links
print(f"best single link variance: {v.min():.0f}")
print(f"merged variance coefficient 1/sum(u/(1-u)): {coeff:.3f} -> {coeff * x:.0f}")
