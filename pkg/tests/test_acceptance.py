"""Acceptance gate: nine numbered end-to-end criteria, one per test.

Each test prints a single PASS/FAIL line (echoed in the terminal summary)
with the measured quantities and, where the criterion bounds runtime, the
elapsed wall time.

Criteria 5 and 6 assert that the plan cost is concave in the sampling
rates and hence vertex-dominant over the whole feasible polytope.  That
claim is false at budget-feasible rates: a flow observed on one link at
rate u costs x(1-u)/u, which is strictly convex in u, and the cost is
concave in a rate only where the flow's other links already carry an odds
sum above 1.  Both tests are kept as stated and fail honestly; their
printed lines carry the measured counterexamples, and criterion 6 also
reports the solver-agreement clauses, which do hold.
"""

import time

import numpy as np

from flowmon import (
    CostSurrogate,
    ExperimentConfig,
    FlowModel,
    KalmanState,
    LinkBudget,
    MeasurementNoise,
    Prediction,
    RoutingMatrix,
    SamplingPlan,
    bernoulli_sample,
    blue_weights,
    compare,
    filter_step,
    instantaneous_cost,
    link_estimate,
    link_estimator_variance,
    observe_flows,
    simulate,
    solve_exact,
    solve_heuristic,
    update,
    write_outputs,
)

RATE_GRID = (0.05, 0.2, 0.5)
VOLUME = 1000.0


def draw_link_estimates(rate, n_draws, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts = [bernoulli_sample(VOLUME, rate, rng) for _ in range(n_draws)]
    return np.array([link_estimate(c, rate) for c in counts])


def test_criterion_1_estimator_unbiasedness(acceptance_report):
    start = time.perf_counter()
    n_draws = 100_000
    parts = []
    ok = True
    for i, u in enumerate(RATE_GRID):
        ests = draw_link_estimates(u, n_draws, seed=100 + i)
        band = 3.0 * np.sqrt(link_estimator_variance(VOLUME, u) / n_draws)
        dev = abs(ests.mean() - VOLUME)
        ok = ok and dev <= band
        parts.append(f"u={u}: |mean-{VOLUME:g}|={dev:.3f} vs 3sigma={band:.3f}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0
    line = acceptance_report(1, "estimator unbiasedness", ok,
                             "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok, line


def test_criterion_2_variance_law(acceptance_report):
    start = time.perf_counter()
    n_draws = 100_000
    parts = []
    ok = True
    for i, u in enumerate(RATE_GRID):
        ests = draw_link_estimates(u, n_draws, seed=200 + i)
        target = link_estimator_variance(VOLUME, u)
        rel = abs(ests.var(ddof=1) - target) / target
        ok = ok and rel < 0.05
        parts.append(f"u={u}: rel err {100 * rel:.2f}%")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0
    line = acceptance_report(2, "variance law", ok,
                             "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok, line


def simplex_grid(k, step=0.01):
    ticks = int(round(1.0 / step))
    if k == 2:
        w0 = np.arange(ticks + 1) / ticks
        return np.column_stack([w0, 1.0 - w0])
    rows = []
    for i in range(ticks + 1):
        for j in range(ticks + 1 - i):
            rows.append((i / ticks, j / ticks, (ticks - i - j) / ticks))
    return np.array(rows)


def test_criterion_3_inverse_variance_weights_optimal(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(33))
    worst_margin = -np.inf
    ok = True
    for _ in range(20):
        k = int(rng.integers(2, 4))
        u = rng.uniform(0.05, 0.95, size=k)
        variances = np.array([link_estimator_variance(VOLUME, r) for r in u])
        w = blue_weights(variances)
        blue_var = float(w**2 @ variances)
        grid = simplex_grid(k)
        grid_min = float((grid**2 @ variances).min())
        margin = blue_var - grid_min
        worst_margin = max(worst_margin, margin)
        ok = ok and margin <= 1e-9
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 10.0
    line = acceptance_report(
        3, "inverse-variance weights optimal", ok,
        f"20 paths, grid step 0.01, worst (blue - grid min) = {worst_margin:.3e}"
        f"; {elapsed:.1f}s")
    assert ok, line


def test_criterion_4_combined_variance(acceptance_report):
    routing = RoutingMatrix(np.array([[1], [1]]))
    plan = SamplingPlan(np.array([[0.2], [0.2]]))
    rng = np.random.default_rng(np.random.SeedSequence(7))
    x = np.array([VOLUME])
    vals = np.array(
        [observe_flows(x, plan, routing, rng)[0].combined for _ in range(10_000)]
    )
    target = 2000.0
    rel = abs(vals.var(ddof=1) - target) / target
    ok = rel < 0.10
    line = acceptance_report(
        4, "combined estimator variance", ok,
        f"u=(0.2,0.2), x={VOLUME:g}: var {vals.var(ddof=1):.1f} vs {target:g}"
        f" ({100 * rel:.2f}%)")
    assert ok, line


def test_criterion_5_cost_concavity(acceptance_report):
    routing = RoutingMatrix(np.array([[1, 1, 0], [1, 0, 1]]))
    budget_d = 0.2
    x_hat = np.full(3, VOLUME)
    surrogate = CostSurrogate()
    rng = np.random.default_rng(np.random.SeedSequence(55))

    def random_observed_plan():
        rates = np.where(routing.entries == 1,
                         rng.uniform(0.01, 1.0, routing.entries.shape), 0.0)
        sums = rates.sum(axis=1, keepdims=True)
        rates *= budget_d * rng.uniform(0.3, 1.0, (routing.n_links, 1)) / sums
        return rates

    violations = 0
    worst_gap = 0.0
    worst_case = None
    for _ in range(1000):
        a = random_observed_plan()
        b = random_observed_plan()
        cost_a = instantaneous_cost(x_hat, SamplingPlan(a), routing, surrogate)
        cost_b = instantaneous_cost(x_hat, SamplingPlan(b), routing, surrogate)
        for lam in (0.25, 0.5, 0.75):
            mix = instantaneous_cost(x_hat, SamplingPlan(lam * a + (1 - lam) * b),
                                     routing, surrogate)
            chord = lam * cost_a + (1 - lam) * cost_b
            gap = chord - mix
            if gap > 1e-9:
                violations += 1
                if gap > worst_gap:
                    worst_gap = gap
                    worst_case = (cost_a, cost_b, lam, mix, chord)
    ok = violations == 0
    detail = (f"{violations}/3000 midpoint checks violated on 1000 feasible"
              f" all-flows-observed pairs")
    if worst_case is not None:
        ca, cb, lam, mix, chord = worst_case
        detail += (f"; worst: lam={lam:g}, mix cost {mix:.1f} <"
                   f" chord {chord:.1f} (endpoints {ca:.1f}/{cb:.1f})")
    line = acceptance_report(5, "cost concavity in rates", ok, detail)
    assert ok, line


def random_small_instance(rng):
    L = int(rng.integers(1, 4))
    J = int(rng.integers(1, 5))
    entries = (rng.random((L, J)) < 0.5).astype(int)
    for j in range(J):
        if entries[:, j].sum() == 0:
            entries[int(rng.integers(L)), j] = 1
    routing = RoutingMatrix(entries)
    budget = LinkBudget(d=rng.uniform(0.1, 0.9, L),
                        u_max=float(rng.uniform(0.1, 1.0)))
    x_hat = 10.0 ** rng.uniform(2.0, 4.0, J)
    return routing, budget, x_hat


def sampled_feasible_costs(rng, routing, budget, x_hat, scale, n_samples=10_000):
    L, J = routing.entries.shape
    support = routing.entries[None, :, :] == 1
    u = np.where(support, rng.uniform(0.0, budget.u_max, (n_samples, L, J)), 0.0)
    sums = u.sum(axis=2, keepdims=True)
    cap = np.minimum(1.0, budget.d[None, :, None] / np.where(sums > 0, sums, 1.0))
    u *= cap * rng.uniform(0.0, 1.0, (n_samples, L, 1))
    with np.errstate(divide="ignore"):
        g = np.where(u < 1.0, u / (1.0 - u), np.inf)
    denom = g.sum(axis=1)
    per_flow = np.where(denom > 0, x_hat[None, :] / np.where(denom > 0, denom, 1.0),
                        x_hat[None, :] * scale)
    per_flow[np.isinf(denom)] = 0.0
    return per_flow.sum(axis=1)


def test_criterion_6_vertex_optimality_and_solver_agreement(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(66))
    surrogate = CostSurrogate()
    dominance_violations = 0
    worst_gap = 0.0
    agree = 0
    never_beats = True
    for i in range(100):
        routing, budget, x_hat = random_small_instance(rng)
        se, sh = {}, {}
        solve_exact(x_hat, routing, budget, surrogate, stats=se)
        solve_heuristic(x_hat, routing, budget, surrogate, restarts=8, seed=i,
                        stats=sh)
        if sh["cost"] < se["cost"] - 1e-9:
            never_beats = False
        if abs(sh["cost"] - se["cost"]) <= 1e-9 * max(1.0, se["cost"]):
            agree += 1
        sampled = sampled_feasible_costs(
            rng, routing, budget, x_hat, surrogate.unobserved_penalty_scale)
        gap = se["cost"] - sampled.min()
        if gap > 1e-9:
            dominance_violations += 1
            worst_gap = max(worst_gap, gap)
    elapsed = time.perf_counter() - start
    dominance_ok = dominance_violations == 0
    agreement_ok = agree >= 90 and never_beats
    ok = dominance_ok and agreement_ok and elapsed < 60.0
    line = acceptance_report(
        6, "vertex optimality / solver agreement", ok,
        f"vertex cost beaten by sampled feasible plans on "
        f"{dominance_violations}/100 instances (worst gap {worst_gap:.3e}); "
        f"heuristic agreement {agree}/100, never better: {never_beats}"
        f"; {elapsed:.1f}s")
    assert ok, line


def test_criterion_7_filter_correctness_and_consistency(acceptance_report):
    pred = Prediction(mean=np.zeros(1), cov=np.array([[2.0]]))
    state = update(pred, np.array([3.0]), MeasurementNoise(np.array([1.0])))
    gain = state.mean[0] / 3.0
    oracle_ok = (abs(gain - 2.0 / 3.0) <= 1e-12
                 and abs(state.mean[0] - 2.0) <= 1e-12
                 and abs(state.cov[0, 0] - 2.0 / 3.0) <= 1e-12)

    model = FlowModel(rho=np.array([0.9]), noise_var=np.array([100.0]),
                      mean=np.array([1000.0]), init_mean=np.array([1000.0]),
                      init_var=np.array([100.0 / 0.19]))
    routing = RoutingMatrix(np.array([[1]]))
    plan = SamplingPlan(np.array([[0.2]]))
    ss = np.random.SeedSequence(0).spawn(2)
    truth = simulate(model, 2000, seed=ss[0])
    rng = np.random.default_rng(ss[1])
    state_t = KalmanState(mean=model.init_mean - model.mean,
                          cov=np.diag(model.init_var))
    zscores = []
    for t in range(2000):
        obs = observe_flows(truth[t], plan, routing, rng)
        z = np.array([obs[0].combined])
        state_t, _ = filter_step(state_t, model, plan, z, routing, t=t)
        c_true = truth[t, 0] - model.mean[0]
        zscores.append((state_t.mean[0] - c_true) / np.sqrt(state_t.cov[0, 0]))
    zvar = float(np.var(zscores))
    consistency_ok = 0.8 <= zvar <= 1.25
    ok = oracle_ok and consistency_ok
    line = acceptance_report(
        7, "filter correctness and consistency", ok,
        f"scalar oracle K={gain:.12f}, mean={state.mean[0]:.12f},"
        f" P'={state.cov[0, 0]:.12f}; z-score variance {zvar:.3f} over T=2000")
    assert ok, line


def test_criterion_8_end_to_end_dominance(acceptance_report):
    start = time.perf_counter()
    reductions = []
    for seed in range(10):
        res = compare(ExperimentConfig(T=644, seed=seed))
        reductions.append(res.percent_reduction)
    elapsed = time.perf_counter() - start
    median = float(np.median(reductions))
    ok = median >= 5.0 and elapsed < 120.0
    line = acceptance_report(
        8, "end-to-end dominance over even split", ok,
        f"median reduction {median:.1f}% over 10 seeds"
        f" (min {min(reductions):.1f}%, max {max(reductions):.1f}%)"
        f"; 26 links, 72 flows, d=0.2, 144 monitored slots; {elapsed:.1f}s")
    assert ok, line


def test_criterion_9_byte_identical_outputs(acceptance_report, tmp_path):
    cfg = ExperimentConfig(T=644, seed=0)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    write_outputs(compare(cfg), out_a)
    write_outputs(compare(cfg), out_b)
    names = sorted(p.name for p in out_a.iterdir())
    identical = [
        name for name in names
        if (out_a / name).read_bytes() == (out_b / name).read_bytes()
    ]
    ok = (names == sorted(p.name for p in out_b.iterdir())
          and len(identical) == len(names) == 5)
    line = acceptance_report(
        9, "byte-identical repeat runs", ok,
        f"{len(identical)}/{len(names)} files identical: {', '.join(names)}")
    assert ok, line
