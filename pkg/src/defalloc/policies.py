"""Decision policies and the per-episode driver.

All four policies share the same importance-proportional slot-0 allocation
and the same transfer phase; they differ only in how the per-slot target is
chosen:

* ``un_mean``  - risk-bounded allocation with statistics learned online.
* ``kn_mean``  - the same allocation fed the true mean and variance.
* ``greedy``   - proportional split by importance times observed attack
  frequency (with 1/n smoothing).
* ``oracle``   - per-slot optimal allocation with next-slot attack foresight
  (density-greedy solution of the realized-damage LP).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .allocator import proportional_fill, solve_allocation
from .belief import BeliefState, belief_error, init_belief, known_belief, update_belief
from .flow import TOL_BAL, TransferSolver, apply_transfers
from .model import Allocation, AttackTrace, Instance, RiskParams, TransferPlan, slot_damage

__all__ = [
    "POLICY_IDS",
    "SlotResult",
    "RunMetrics",
    "initial_allocation",
    "un_mean_policy",
    "kn_mean_policy",
    "greedy_policy",
    "oracle_policy",
    "run_episode",
]

POLICY_IDS = ("un_mean", "kn_mean", "greedy", "oracle")


@dataclass(frozen=True)
class SlotResult:
    t: int
    target: Allocation
    realized: Allocation
    plan: TransferPlan
    epsilon: float | None
    realized_damage: float
    transfer_cost: float
    mean_err_max: float | None = None
    var_err_max: float | None = None


@dataclass
class RunMetrics:
    policy: str
    initial: Allocation
    slots: list[SlotResult] = field(default_factory=list)
    total_damage: float = 0.0
    total_transfer_cost: float = 0.0
    total_epsilon: float = 0.0
    wall_seconds: float = 0.0


def initial_allocation(nodes, R: float) -> Allocation:
    """Slot-0 allocation: r_min plus the remaining budget split by importance
    weight (capped at r_max, overflow re-shared)."""
    slack = R - float(np.sum(nodes.r_min))
    return Allocation(proportional_fill(nodes.r_min, nodes.r_max, slack, nodes.w))


def _transfer_step(prev: Allocation, target: Allocation, inst: Instance,
                   solver: TransferSolver) -> tuple[TransferPlan, Allocation]:
    plan = solver.plan(prev, target)
    realized = apply_transfers(prev, plan)
    realized.assert_feasible(inst.nodes, inst.R)
    return plan, realized


def _finalize(metrics: RunMetrics, started: float) -> RunMetrics:
    metrics.total_damage = sum(s.realized_damage for s in metrics.slots)
    metrics.total_transfer_cost = sum(s.transfer_cost for s in metrics.slots)
    metrics.total_epsilon = sum(s.epsilon for s in metrics.slots if s.epsilon is not None)
    metrics.wall_seconds = time.perf_counter() - started
    return metrics


def _chance_constrained_run(inst: Instance, risk: RiskParams, trace: AttackTrace,
                            belief: BeliefState, learn: bool, policy: str,
                            variance_form: str, tol_bal: float,
                            collect_diagnostics: bool) -> RunMetrics:
    started = time.perf_counter()
    prev = initial_allocation(inst.nodes, inst.R)
    metrics = RunMetrics(policy=policy, initial=prev)
    solver = TransferSolver(inst.costs, inst.R, tol_bal)
    for t in range(trace.T):
        target, eps = solve_allocation(
            belief, risk, inst.nodes, inst.R, variance_form=variance_form
        )
        plan, realized = _transfer_step(prev, target, inst, solver)
        observed = trace.y[t]
        dmg = slot_damage(realized, observed, inst.nodes)
        if learn:
            belief = update_belief(belief, observed)
        mean_err = var_err = None
        if collect_diagnostics:
            me, ve = belief_error(belief, inst.attack_probs)
            mean_err = float(np.max(np.abs(me)))
            var_err = float(np.max(np.abs(ve)))
        metrics.slots.append(SlotResult(
            t=t + 1, target=target, realized=realized, plan=plan, epsilon=eps,
            realized_damage=dmg, transfer_cost=plan.total_cost,
            mean_err_max=mean_err, var_err_max=var_err,
        ))
        prev = realized
    return _finalize(metrics, started)


def un_mean_policy(inst: Instance, risk: RiskParams, trace: AttackTrace, *,
                   variance_form: str = "linear", tol_bal: float = TOL_BAL,
                   collect_diagnostics: bool = False) -> RunMetrics:
    """Learned-statistics policy: uniform prior, one belief update per slot."""
    return _chance_constrained_run(
        inst, risk, trace, init_belief(inst.n), learn=True, policy="un_mean",
        variance_form=variance_form, tol_bal=tol_bal,
        collect_diagnostics=collect_diagnostics,
    )


def kn_mean_policy(inst: Instance, risk: RiskParams, trace: AttackTrace, *,
                   variance_form: str = "linear", tol_bal: float = TOL_BAL,
                   collect_diagnostics: bool = False) -> RunMetrics:
    """Known-statistics policy: belief pinned at the true mean and variance."""
    return _chance_constrained_run(
        inst, risk, trace, known_belief(inst.attack_probs), learn=False,
        policy="kn_mean", variance_form=variance_form, tol_bal=tol_bal,
        collect_diagnostics=collect_diagnostics,
    )


def greedy_policy(inst: Instance, trace: AttackTrace, *,
                  tol_bal: float = TOL_BAL) -> RunMetrics:
    """Heuristic: r_min guaranteed, remainder split by w * (frequency + 1/n)."""
    started = time.perf_counter()
    nodes = inst.nodes
    prev = initial_allocation(nodes, inst.R)
    metrics = RunMetrics(policy="greedy", initial=prev)
    solver = TransferSolver(inst.costs, inst.R, tol_bal)
    slack = inst.R - float(np.sum(nodes.r_min))
    smoothing = 1.0 / inst.n
    counts = np.zeros(inst.n)
    for t in range(trace.T):
        freq = counts / t if t > 0 else np.zeros(inst.n)
        score = nodes.w * (freq + smoothing)
        target = Allocation(proportional_fill(nodes.r_min, nodes.r_max, slack, score))
        plan, realized = _transfer_step(prev, target, inst, solver)
        observed = trace.y[t]
        dmg = slot_damage(realized, observed, nodes)
        counts += observed
        metrics.slots.append(SlotResult(
            t=t + 1, target=target, realized=realized, plan=plan, epsilon=None,
            realized_damage=dmg, transfer_cost=plan.total_cost,
        ))
        prev = realized
    return _finalize(metrics, started)


def _oracle_target(nodes, R: float, attacked: np.ndarray) -> Allocation:
    """Exact continuous-knapsack solution of the known-attack damage LP.

    Attacked nodes are raised to r_max in decreasing w/(r_max - r_min) order
    until the budget runs out; leftover budget goes to unattacked nodes in
    ascending index order (deterministic but damage-neutral).
    """
    budget = R - float(np.sum(nodes.r_min))
    density = nodes.w / nodes.span
    hit = np.flatnonzero(attacked > 0)
    order = np.concatenate([hit[np.argsort(-density[hit], kind="stable")],
                            np.flatnonzero(attacked == 0)])
    room = nodes.span[order]
    cum = np.cumsum(room)
    add = room.copy()
    if budget >= cum[-1] - 1e-9:
        k = order.size  # saturating budget: land on r_max exactly
    else:
        k = int(np.searchsorted(cum, budget, side="left"))
    if k < order.size:
        add[k] = budget - (cum[k - 1] if k > 0 else 0.0)
        add[k + 1:] = 0.0
    r = nodes.r_min.copy()
    r[order] += np.clip(add, 0.0, room)
    return Allocation(r)


def oracle_policy(inst: Instance, trace: AttackTrace, *,
                  tol_bal: float = TOL_BAL) -> RunMetrics:
    """Omniscient benchmark: sees each slot's attacks before allocating."""
    started = time.perf_counter()
    prev = initial_allocation(inst.nodes, inst.R)
    metrics = RunMetrics(policy="oracle", initial=prev)
    solver = TransferSolver(inst.costs, inst.R, tol_bal)
    for t in range(trace.T):
        observed = trace.y[t]
        target = _oracle_target(inst.nodes, inst.R, observed)
        plan, realized = _transfer_step(prev, target, inst, solver)
        dmg = slot_damage(realized, observed, inst.nodes)
        metrics.slots.append(SlotResult(
            t=t + 1, target=target, realized=realized, plan=plan, epsilon=None,
            realized_damage=dmg, transfer_cost=plan.total_cost,
        ))
        prev = realized
    return _finalize(metrics, started)


def run_episode(inst: Instance, policy_id: str, risk: RiskParams, trace: AttackTrace,
                **options) -> RunMetrics:
    """Dispatch one policy over one attack trace; deterministic per input."""
    if policy_id == "un_mean":
        return un_mean_policy(inst, risk, trace, **options)
    if policy_id == "kn_mean":
        return kn_mean_policy(inst, risk, trace, **options)
    if policy_id == "greedy":
        options.pop("variance_form", None)
        options.pop("collect_diagnostics", None)
        return greedy_policy(inst, trace, **options)
    if policy_id == "oracle":
        options.pop("variance_form", None)
        options.pop("collect_diagnostics", None)
        return oracle_policy(inst, trace, **options)
    raise ValueError(f"unknown policy {policy_id!r}; expected one of {POLICY_IDS}")
