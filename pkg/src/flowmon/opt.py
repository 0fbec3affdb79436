"""Sampling-plan optimization over per-link budget polytopes.

Each link may spend at most a fixed budget on the sum of its per-flow
sampling rates, with every rate capped individually, so the feasible
rates of one link form the polytope {v in [0, u_max]^n : sum(v) <= d}.
The plan cost charges each flow its combined estimation variance per
unit volume (predicted volume times the plan's variance coefficient)
and a large penalty scale for flows no link observes.  That cost is
concave in the rates, so a minimizer sits at a vertex of the product of
link polytopes: ``solve_exact`` enumerates those product vertices,
``solve_heuristic`` runs link-wise best-response descent from random
vertices.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError, SolverSizeError
from .net_model import RoutingMatrix
from .sampling import SamplingPlan, plan_variance_coeffs

__all__ = [
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
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class LinkBudget:
    """Per-link sampling budgets.

    Parameters
    ----------
    d : (L,) array
        Budget on the sum of each link's sampling rates, each in (0, 1].
    u_max : float
        Cap on any single rate, in (0, 1].
    """

    d: np.ndarray
    u_max: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("d must be a nonempty 1-D vector")
        if ((d <= 0) | (d > 1)).any():
            raise ValueError("every link budget must lie in (0, 1]")
        if not 0 < self.u_max <= 1:
            raise ValueError("u_max must lie in (0, 1]")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "u_max", float(self.u_max))

    @classmethod
    def uniform(cls, n_links: int, d: float = 0.2, u_max: float = 1.0) -> "LinkBudget":
        return cls(d=np.full(n_links, float(d)), u_max=u_max)

    @property
    def n_links(self) -> int:
        return self.d.size

    def validate_for(self, routing: RoutingMatrix) -> None:
        if self.d.size != routing.n_links:
            raise ValueError("budget has a different link count than the routing matrix")


@dataclass(frozen=True)
class CostSurrogate:
    """Cost settings: the penalty scale charged per unit of unobserved volume."""

    unobserved_penalty_scale: float = 1e4

    def __post_init__(self):
        if not self.unobserved_penalty_scale >= 1:
            raise ValueError("unobserved_penalty_scale must be >= 1")


def _check_x_hat(x_hat, n_flows: int) -> np.ndarray:
    x = np.asarray(x_hat, dtype=float)
    if x.shape != (n_flows,):
        raise ValueError("x_hat must have one predicted volume per flow")
    if not np.isfinite(x).all() or (x < 0).any():
        raise ValueError("predicted volumes must be finite and >= 0")
    return x


def _odds(v: np.ndarray) -> np.ndarray:
    """u / (1 - u) elementwise, with u = 1 mapping to +inf."""
    out = np.empty_like(v)
    one = v >= 1.0
    out[one] = np.inf
    out[~one] = v[~one] / (1.0 - v[~one])
    return out


def _cost_from_denoms(denoms: np.ndarray, x_hat: np.ndarray, scale: float):
    """Total cost given per-flow odds sums; works on (J,) or (n, J) input.

    A zero sum means the flow is unobserved and costs volume * scale; an
    infinite sum means an exact observation and costs nothing.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(denoms > 0, 1.0 / np.where(denoms > 0, denoms, 1.0), np.inf)
        terms = np.where(np.isfinite(coeff), x_hat * coeff, x_hat * scale)
    return terms.sum(axis=-1)


def instantaneous_cost(
    x_hat,
    plan: SamplingPlan,
    routing: RoutingMatrix,
    surrogate: CostSurrogate = CostSurrogate(),
) -> float:
    """Predicted-volume-weighted estimation cost of a plan for one slot."""
    x = _check_x_hat(x_hat, routing.n_flows)
    coeff = plan_variance_coeffs(plan, routing)
    with np.errstate(invalid="ignore"):
        terms = np.where(
            np.isfinite(coeff), x * coeff, x * surrogate.unobserved_penalty_scale
        )
    return float(terms.sum())


def naive_allocation(routing: RoutingMatrix, budget: LinkBudget) -> SamplingPlan:
    """Split each link's budget evenly over the flows it carries."""
    budget.validate_for(routing)
    n = routing.entries.sum(axis=1)
    share = budget.d / np.maximum(n, 1)
    rate = np.minimum(budget.u_max, share)
    return SamplingPlan(np.where(routing.entries == 1, rate[:, None], 0.0))


def feasible(
    plan: SamplingPlan,
    routing: RoutingMatrix,
    budget: LinkBudget,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Whether a plan respects support, the rate cap, and every link budget."""
    budget.validate_for(routing)
    if plan.rates.shape != routing.entries.shape:
        raise ValueError("plan shape does not match routing matrix")
    if (plan.rates[routing.entries == 0] > tol).any():
        return False
    if (plan.rates > budget.u_max + tol).any():
        return False
    return bool((plan.rates.sum(axis=1) <= budget.d + tol).all())


def _count_link_vertices(n: int, d: float, u: float, tol: float) -> int:
    if n == 0:
        return 1
    k_cap = int(math.floor((d + tol) / u))
    total = sum(math.comb(n, k) for k in range(min(n, k_cap) + 1))
    r = d - k_cap * u
    if k_cap + 1 <= n and tol < r < u - tol:
        total += math.comb(n, k_cap) * (n - k_cap)
    return total


def link_vertices(
    link: int,
    routing: RoutingMatrix,
    budget: LinkBudget,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """All vertices of one link's rate polytope, one row per vertex.

    Columns follow the link's flows in ascending index order; rows come
    back lexicographically sorted.  Vertices either put k rates at u_max
    with the budget slack (k*u_max <= d), or put floor(d/u_max) rates at
    u_max plus one rate at the remaining budget.  ``tol`` absorbs float
    error when the budget is an exact multiple of the cap.
    """
    budget.validate_for(routing)
    if not 0 <= link < routing.n_links:
        raise ValueError(f"link index {link} out of range")
    n = int(routing.entries[link].sum())
    if n == 0:
        return np.zeros((1, 0))
    d = float(budget.d[link])
    u = budget.u_max
    k_cap = int(math.floor((d + tol) / u))
    rows = []
    for k in range(min(n, k_cap) + 1):
        for pos in combinations(range(n), k):
            v = np.zeros(n)
            v[list(pos)] = u
            rows.append(v)
    r = d - k_cap * u
    if k_cap + 1 <= n and tol < r < u - tol:
        for pos in combinations(range(n), k_cap):
            taken = set(pos)
            for f in range(n):
                if f in taken:
                    continue
                v = np.zeros(n)
                v[list(pos)] = u
                v[f] = r
                rows.append(v)
    arr = np.array(rows)
    return arr[np.lexsort(arr.T[::-1])]


def solve_exact(
    x_hat,
    routing: RoutingMatrix,
    budget: LinkBudget,
    surrogate: CostSurrogate = CostSurrogate(),
    max_product: int = 10**6,
    stats: dict | None = None,
    tol: float = DEFAULT_TOL,
) -> SamplingPlan:
    """Globally minimal plan by enumerating product vertices.

    Walks every combination of per-link vertices depth first, carrying
    the per-flow odds sums, and keeps the first strict improvement, so
    cost ties resolve to the lexicographically smallest plan.  Raises
    SolverSizeError before enumerating when the product vertex count
    exceeds ``max_product``.
    """
    x = _check_x_hat(x_hat, routing.n_flows)
    budget.validate_for(routing)
    L, J = routing.entries.shape
    counts = [
        _count_link_vertices(
            int(routing.entries[l].sum()), float(budget.d[l]), budget.u_max, tol
        )
        for l in range(L)
    ]
    product = math.prod(counts)
    if product > max_product:
        raise SolverSizeError(
            f"instance has {product} product vertices, above the cap of "
            f"{max_product}; use solve_heuristic"
        )
    verts = [link_vertices(l, routing, budget, tol) for l in range(L)]
    flows = [np.flatnonzero(routing.entries[l]) for l in range(L)]
    odds = [_odds(v) for v in verts]
    scale = surrogate.unobserved_penalty_scale

    best_cost = math.inf
    best_choice = None
    choice = [0] * L

    def dfs(l: int, denom: np.ndarray) -> None:
        nonlocal best_cost, best_choice
        if l == L:
            c = float(_cost_from_denoms(denom, x, scale))
            if c < best_cost:
                best_cost = c
                best_choice = choice.copy()
            return
        for i in range(odds[l].shape[0]):
            nd = denom.copy()
            nd[flows[l]] += odds[l][i]
            choice[l] = i
            dfs(l + 1, nd)

    dfs(0, np.zeros(J))
    rates = np.zeros((L, J))
    for l in range(L):
        rates[l, flows[l]] = verts[l][best_choice[l]]
    if stats is not None:
        stats.update(method="exact", product_vertices=product, cost=best_cost)
    return SamplingPlan(rates)


def solve_heuristic(
    x_hat,
    routing: RoutingMatrix,
    budget: LinkBudget,
    surrogate: CostSurrogate = CostSurrogate(),
    restarts: int = 8,
    seed=0,
    max_sweeps: int = 100,
    stats: dict | None = None,
    tol: float = DEFAULT_TOL,
    max_link_vertices: int = 10**6,
) -> SamplingPlan:
    """Local search: link-wise best response from random product vertices.

    Each sweep revisits every link and moves it to its cheapest vertex
    given the others, adopting only strict improvements, so the descent
    terminates at a plan no single link can improve.  The best local
    optimum over ``restarts`` seeded starts wins; cost ties resolve to
    the lexicographically smaller rate matrix.
    """
    x = _check_x_hat(x_hat, routing.n_flows)
    budget.validate_for(routing)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    L, J = routing.entries.shape
    for l in range(L):
        count = _count_link_vertices(
            int(routing.entries[l].sum()), float(budget.d[l]), budget.u_max, tol
        )
        if count > max_link_vertices:
            raise SolverSizeError(
                f"link {l} has {count} polytope vertices, above the cap of "
                f"{max_link_vertices}"
            )
    verts = [link_vertices(l, routing, budget, tol) for l in range(L)]
    flows = [np.flatnonzero(routing.entries[l]) for l in range(L)]
    contrib = []
    for l in range(L):
        c = np.zeros((verts[l].shape[0], J))
        c[:, flows[l]] = _odds(verts[l])
        contrib.append(c)
    scale = surrogate.unobserved_penalty_scale
    rng = np.random.default_rng(seed)

    best_cost = math.inf
    best_rates = None
    total_sweeps = 0
    for _ in range(restarts):
        idx = [int(rng.integers(contrib[l].shape[0])) for l in range(L)]
        cur = np.stack([contrib[l][idx[l]] for l in range(L)])
        sweeps = 0
        improved = True
        while improved and sweeps < max_sweeps:
            improved = False
            sweeps += 1
            for l in range(L):
                base = np.delete(cur, l, axis=0).sum(axis=0)
                costs = _cost_from_denoms(base[None, :] + contrib[l], x, scale)
                b = int(np.argmin(costs))
                if costs[b] < costs[idx[l]]:
                    idx[l] = b
                    cur[l] = contrib[l][b]
                    improved = True
        total_sweeps += sweeps
        cost = float(_cost_from_denoms(cur.sum(axis=0), x, scale))
        rates = np.zeros((L, J))
        for l in range(L):
            rates[l, flows[l]] = verts[l][idx[l]]
        if cost < best_cost or (
            cost == best_cost and tuple(rates.ravel()) < tuple(best_rates.ravel())
        ):
            best_cost = cost
            best_rates = rates
    if stats is not None:
        stats.update(
            method="heuristic", restarts=restarts, sweeps=total_sweeps, cost=best_cost
        )
    return SamplingPlan(best_rates)


def save_plan_csv(plan: SamplingPlan, path) -> None:
    """Write the nonzero rates as ``link,flow,rate`` rows in index order."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["link", "flow", "rate"])
        L, J = plan.rates.shape
        for l in range(L):
            for j in range(J):
                v = plan.rates[l, j]
                if v > 0:
                    writer.writerow([l, j, repr(float(v))])


def load_plan_csv(path, n_links: int, n_flows: int) -> SamplingPlan:
    """Read a plan written by :func:`save_plan_csv`; absent pairs get rate 0."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["link", "flow", "rate"]:
        raise ConfigError(f"{path}: header must be link,flow,rate")
    rates = np.zeros((n_links, n_flows))
    seen = set()
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ConfigError(f"{path}: line {i}: expected 3 cells")
        try:
            l, j, v = int(row[0]), int(row[1]), float(row[2])
        except ValueError as e:
            raise ConfigError(f"{path}: line {i}: {e}") from e
        if not (0 <= l < n_links and 0 <= j < n_flows):
            raise ConfigError(f"{path}: line {i}: link/flow index out of range")
        if (l, j) in seen:
            raise ConfigError(f"{path}: line {i}: duplicate (link, flow) pair")
        if not 0 < v <= 1:
            raise ConfigError(f"{path}: line {i}: rate must lie in (0, 1]")
        seen.add((l, j))
        rates[l, j] = v
    return SamplingPlan(rates)
