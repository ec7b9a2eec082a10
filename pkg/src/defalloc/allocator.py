"""Per-slot allocation minimizing the risk-adjusted damage bound.

The bound for an allocation r is

    epsilon(r) = sum_i mean_i v_i + kappa * sqrt(sum_i var_i v_i),
    v_i = w_i (r_max_i - r_i) / (r_max_i - r_min_i),

subject to r_min <= r <= r_max and sum r <= R.  epsilon is concave in r, so
its minimum sits on a vertex of the feasible polytope.  ``solve_allocation``
chases it with a majorize-minimize loop: freeze h = sqrt(sum var_i v_i),
minimize the tangent (a continuous knapsack in the shortfall u_i =
r_max_i - r_i), recompute h, repeat; each step is a descent step.  Multiple
deterministic starts plus best-iterate tracking guard against local minima,
and ``brute_force_allocation`` provides the grid oracle used by the tests.

``variance_form`` selects the bound's variance term: ``linear`` uses
sum var_i v_i (the default), ``squared`` uses sum var_i v_i^2 for sensitivity
studies (a convex objective, handled with a line search on each step).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import BeliefState
from .model import Allocation, InfeasibleError, Nodes, RiskParams

__all__ = [
    "SurrogateTerms",
    "surrogate",
    "solve_allocation",
    "brute_force_allocation",
    "grid_error_bound",
    "alpha_epsilon_ladder",
    "budget_epsilon_ladder",
    "proportional_fill",
]

H_TOL = 1e-9
MAX_ITER = 200
VARIANCE_FORMS = ("linear", "squared")


@dataclass(frozen=True)
class SurrogateTerms:
    """Decomposition of the bound: epsilon = linear + kappa * h."""

    v: np.ndarray
    linear: float
    h: float
    epsilon: float


def _check_form(variance_form: str) -> str:
    if variance_form not in VARIANCE_FORMS:
        raise ValueError(f"variance_form must be one of {VARIANCE_FORMS}")
    return variance_form


def surrogate(r: Allocation, belief: BeliefState, risk: RiskParams, nodes: Nodes,
              variance_form: str = "linear") -> SurrogateTerms:
    """Evaluate the bound terms at a given allocation."""
    _check_form(variance_form)
    v = np.clip(nodes.w * (nodes.r_max - r.r) / nodes.span, 0.0, nodes.w)
    linear = float(np.sum(belief.mean * v))
    vterm = v if variance_form == "linear" else v * v
    h = float(np.sqrt(np.sum(belief.variance * vterm)))
    return SurrogateTerms(v=v, linear=linear, h=h, epsilon=linear + risk.kappa * h)


def _eval_eps(u, m, s, w, span, kappa, variance_form):
    """Bound value as a function of the shortfall vector u = r_max - r."""
    v = w * u / span
    if variance_form == "linear":
        h = np.sqrt(np.sum(s * v))
    else:
        h = np.sqrt(np.sum(s * v * v))
    return float(np.sum(m * v) + kappa * h), float(h)


def _knapsack_fill(density: np.ndarray, caps: np.ndarray, total: float) -> np.ndarray:
    """Place `total` units on the cheapest-density nodes first, ties by index."""
    order = np.argsort(density, kind="stable")
    gaps = caps[order]
    cum = np.cumsum(gaps)
    u_ord = gaps.copy()
    k = int(np.searchsorted(cum, total, side="left"))
    if k < gaps.shape[0]:
        u_ord[k] = total - (cum[k - 1] if k > 0 else 0.0)
        u_ord[k + 1:] = 0.0
    u = np.empty_like(u_ord)
    u[order] = u_ord
    return np.clip(u, 0.0, caps)


def proportional_fill(r_min: np.ndarray, r_max: np.ndarray, extra: float,
                      weights: np.ndarray) -> np.ndarray:
    """Distribute `extra` above r_min proportionally to weights, capping at
    r_max and re-sharing the overflow among uncapped nodes until stable."""
    r = np.asarray(r_min, dtype=np.float64).copy()
    r_max = np.asarray(r_max, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    budget = float(extra)
    active = np.ones(r.shape[0], dtype=bool)
    for _ in range(r.shape[0] + 1):
        if budget <= 1e-15 or not active.any():
            break
        room = float(np.sum(r_max[active] - r[active]))
        if budget >= room - 1e-9:
            # saturating budget: land on r_max exactly despite rounding
            r[active] = r_max[active]
            break
        wsum = float(np.sum(weights[active]))
        if wsum <= 0.0:
            share = np.full(int(active.sum()), budget / active.sum())
        else:
            share = budget * weights[active] / wsum
        candidate = r[active] + share
        over = candidate > r_max[active]
        idx = np.flatnonzero(active)
        if not over.any():
            r[idx] = candidate
            budget = 0.0
            break
        capped = idx[over]
        budget -= float(np.sum(r_max[capped] - r[capped]))
        r[capped] = r_max[capped]
        active[capped] = False
    return r


def _starts(nodes: Nodes, R: float) -> list[np.ndarray]:
    slack = R - float(np.sum(nodes.r_min))
    return [
        proportional_fill(nodes.r_min, nodes.r_max, slack, nodes.w),
        proportional_fill(nodes.r_min, nodes.r_max, slack, np.ones(len(nodes))),
        nodes.r_min.copy(),
    ]


def _line_search(u_a, u_b, m, s, w, span, kappa, variance_form, iters=80):
    """Minimize the bound on the segment u_a -> u_b (convex for `squared`)."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        t1 = lo + (hi - lo) / 3.0
        t2 = hi - (hi - lo) / 3.0
        e1, _ = _eval_eps(u_a + t1 * (u_b - u_a), m, s, w, span, kappa, variance_form)
        e2, _ = _eval_eps(u_a + t2 * (u_b - u_a), m, s, w, span, kappa, variance_form)
        if e1 <= e2:
            hi = t2
        else:
            lo = t1
    t = 0.5 * (lo + hi)
    return u_a + t * (u_b - u_a)


def solve_allocation(belief: BeliefState, risk: RiskParams, nodes: Nodes, R: float,
                     *, variance_form: str = "linear", h_tol: float = H_TOL,
                     max_iter: int = MAX_ITER, extra_starts=()) -> tuple[Allocation, float]:
    """Minimize the damage bound under budget and box constraints.

    Returns the best allocation found and its bound value.  ``extra_starts``
    accepts additional warm-start allocations (used by the sweep ladders).
    """
    _check_form(variance_form)
    n = len(nodes)
    if belief.n != n:
        raise ValueError("belief and nodes disagree on node count")
    r_min_total = float(np.sum(nodes.r_min))
    if r_min_total > R:
        raise InfeasibleError(f"budget {R} below total minimum requirement {r_min_total}")
    r_max_total = float(np.sum(nodes.r_max))
    if R >= r_max_total:
        return Allocation(nodes.r_max.copy()), 0.0

    m, s, w, span = belief.mean, belief.variance, nodes.w, nodes.span
    kappa = risk.kappa
    shortfall = r_max_total - R

    starts = _starts(nodes, R)
    for alloc in extra_starts:
        r = alloc.r if isinstance(alloc, Allocation) else np.asarray(alloc, dtype=np.float64)
        starts.append(np.clip(r, nodes.r_min, nodes.r_max))

    best_u = None
    best_eps = np.inf
    for r0 in starts:
        u = np.clip(nodes.r_max - r0, 0.0, span)
        eps, h = _eval_eps(u, m, s, w, span, kappa, variance_form)
        if eps < best_eps:
            best_eps, best_u = eps, u.copy()
        for _ in range(max_iter):
            if h <= h_tol:
                density = m * w / span
            elif variance_form == "linear":
                density = (m + kappa * s / (2.0 * h)) * w / span
            else:
                v = w * u / span
                density = (m + kappa * s * v / h) * w / span
            u_new = _knapsack_fill(density, span, shortfall)
            if variance_form == "squared":
                u_new = _line_search(u, u_new, m, s, w, span, kappa, variance_form)
            eps_new, h_new = _eval_eps(u_new, m, s, w, span, kappa, variance_form)
            if eps_new < best_eps:
                best_eps, best_u = eps_new, u_new.copy()
            # equal h reproduces the same density, hence the same knapsack fill
            done = abs(h_new - h) <= h_tol or np.max(np.abs(u_new - u)) <= 1e-12
            u, h = u_new, h_new
            if done:
                break
    return Allocation(nodes.r_max - best_u), best_eps


def brute_force_allocation(belief: BeliefState, risk: RiskParams, nodes: Nodes, R: float,
                           grid_step: float, *, variance_form: str = "linear",
                           max_points: int = 4_000_000) -> tuple[Allocation, float]:
    """Grid-enumeration oracle for small n.

    ``grid_step`` is a fraction of each node's (r_max - r_min); every lattice
    allocation with sum r <= R is evaluated after absorbing leftover budget
    onto nodes in ascending index order (projection toward the budget plane).
    Deterministic; raises when the lattice would exceed ``max_points``.
    """
    _check_form(variance_form)
    if grid_step <= 0.0 or grid_step > 1.0:
        raise ValueError(f"grid_step must lie in (0, 1], got {grid_step}")
    n = len(nodes)
    if float(np.sum(nodes.r_min)) > R:
        raise InfeasibleError("budget below total minimum requirement")
    k = int(round(1.0 / grid_step))
    if (k + 1) ** n > max_points:
        raise ValueError(
            f"grid of {(k + 1) ** n} points exceeds the {max_points} limit; "
            "coarsen grid_step or reduce n"
        )
    axes = [np.linspace(nodes.r_min[i], nodes.r_max[i], k + 1) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([g.ravel() for g in mesh], axis=1)
    grid = grid[np.sum(grid, axis=1) <= R + 1e-12]
    # absorb leftover budget in ascending node order
    slack = R - np.sum(grid, axis=1)
    for i in range(n):
        room = nodes.r_max[i] - grid[:, i]
        take = np.minimum(room, slack)
        grid[:, i] += take
        slack -= take
    v = np.clip(nodes.w * (nodes.r_max - grid) / nodes.span, 0.0, nodes.w)
    linear = v @ belief.mean
    vterm = v if variance_form == "linear" else v * v
    h = np.sqrt(vterm @ belief.variance)
    eps = linear + risk.kappa * h
    best = int(np.argmin(eps))
    return Allocation(grid[best]), float(eps[best])


def grid_error_bound(belief: BeliefState, risk: RiskParams, nodes: Nodes,
                     grid_step: float, variance_form: str = "linear") -> float:
    """Upper bound on how far the grid optimum can sit above the true optimum.

    Rounding any allocation down to the lattice moves each v_i up by at most
    grid_step * w_i, so the bound follows from linearity plus sqrt
    subadditivity.
    """
    _check_form(variance_form)
    lin = grid_step * float(np.sum(belief.mean * nodes.w))
    if variance_form == "linear":
        var = np.sqrt(grid_step * float(np.sum(belief.variance * nodes.w)))
    else:
        var = np.sqrt(2.0 * grid_step * float(np.sum(belief.variance * nodes.w ** 2)))
    return lin + risk.kappa * var


def alpha_epsilon_ladder(belief: BeliefState, nodes: Nodes, R: float, alphas,
                         variance_form: str = "linear") -> list[tuple[float, float, Allocation]]:
    """Solve across an ascending alpha ladder, warm-starting each level with
    the previous solution so the optimal bound is nonincreasing by
    construction."""
    results = []
    prev = []
    for alpha in sorted(alphas):
        alloc, eps = solve_allocation(
            belief, RiskParams(alpha), nodes, R,
            variance_form=variance_form, extra_starts=prev,
        )
        results.append((float(alpha), eps, alloc))
        prev = [alloc]
    return results


def budget_epsilon_ladder(belief: BeliefState, risk: RiskParams, nodes: Nodes, budgets,
                          variance_form: str = "linear") -> list[tuple[float, float, Allocation]]:
    """Solve across an ascending budget ladder with warm starts; the optimal
    bound is nonincreasing in the budget by construction."""
    results = []
    prev = []
    for budget in sorted(budgets):
        alloc, eps = solve_allocation(
            belief, risk, nodes, float(budget),
            variance_form=variance_form, extra_starts=prev,
        )
        results.append((float(budget), eps, alloc))
        prev = [alloc]
    return results
