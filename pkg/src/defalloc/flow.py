"""Resource transfer planning as minimum-cost flow on an augmented network.

Surplus nodes (previous allocation above the new target) hang off a
super-source, deficit nodes feed a super-sink, and every ordered pair of real
nodes carries an arc with capacity R and the pairwise unit cost.  Successive
shortest paths with node potentials solve the resulting LP exactly;
``min_cost_flow_lp_reference`` solves the same LP with scipy's HiGHS backend
and is the independent check used by the tests.

``build_flow_network`` + ``min_cost_flow`` assemble and solve one slot from
scratch.  ``TransferSolver`` keeps the arc skeleton of an episode cached
(source and sink arcs exist for every node, with zero capacity when the node
is balanced) and only rewrites capacities per slot; zero-capacity arcs are
invisible to the kernel, so it yields exactly the same plans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Allocation, InfeasibleError, TransferPlan, EMPTY_PLAN

__all__ = [
    "FlowNetwork",
    "TransferSolver",
    "build_flow_network",
    "min_cost_flow",
    "apply_transfers",
    "min_cost_flow_lp_reference",
]

TOL_BAL = 1e-9


@dataclass(frozen=True)
class FlowNetwork:
    """Augmented network: real nodes 1..n, source 0, sink n+1, CSR arc arrays."""

    n: int
    supplies: np.ndarray
    surplus: np.ndarray
    deficit: np.ndarray
    total_surplus: float
    total_deficit: float
    indptr: np.ndarray
    frm: np.ndarray
    to: np.ndarray
    cap: np.ndarray
    cost: np.ndarray
    rev: np.ndarray
    pair_costs: np.ndarray
    tol: float

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.n + 1


def _csr_arcs(n_nodes, frm, to, cap, cost):
    """Sort arc arrays by tail node (stable), remap reverse-arc indices, and
    return the old-index -> new-index map."""
    m = frm.shape[0]
    perm = np.argsort(frm, kind="stable")
    inv = np.empty(m, dtype=np.int64)
    inv[perm] = np.arange(m, dtype=np.int64)
    rev_old = np.arange(m, dtype=np.int64) ^ 1  # arcs are added in (fwd, bwd) pairs
    rev = inv[rev_old[perm]]
    counts = np.bincount(frm, minlength=n_nodes)
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, frm[perm], to[perm], cap[perm], cost[perm], rev, inv


def _interleave(fwd_frm, fwd_to, fwd_cap, fwd_cost):
    """Lay out each forward arc next to its zero-capacity reverse."""
    m = fwd_frm.size
    frm = np.empty(2 * m, np.int64)
    to = np.empty(2 * m, np.int64)
    cap = np.zeros(2 * m, np.float64)
    cost = np.empty(2 * m, np.float64)
    frm[0::2], frm[1::2] = fwd_frm, fwd_to
    to[0::2], to[1::2] = fwd_to, fwd_frm
    cap[0::2] = fwd_cap
    cost[0::2], cost[1::2] = fwd_cost, -fwd_cost
    return frm, to, cap, cost


def _pair_indices(n: int):
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    return ii.astype(np.int64), jj.astype(np.int64)


def _classify(supplies: np.ndarray, tol: float):
    surplus = np.flatnonzero(supplies > tol)
    deficit = np.flatnonzero(supplies < -tol)
    total_surplus = float(np.sum(supplies[surplus]))
    total_deficit = float(-np.sum(supplies[deficit]))
    if total_deficit > total_surplus + tol:
        raise InfeasibleError(
            f"total deficit {total_deficit} exceeds total surplus {total_surplus}"
        )
    return surplus, deficit, total_surplus, total_deficit


def _net_plan(ii, jj, amounts, n, pair_costs, tol) -> TransferPlan:
    """Net two-way pair flows (possible only on zero-cost cycles) and build
    the plan with its exact cost."""
    matrix = np.zeros((n, n))
    np.add.at(matrix, (ii, jj), amounts)
    matrix -= matrix.T
    pos_i, pos_j = np.nonzero(matrix > tol)
    flows = []
    total = 0.0
    for i, j in zip(pos_i.tolist(), pos_j.tolist()):
        amount = matrix[i, j]
        flows.append((i, j, amount))
        total += pair_costs[i, j] * amount
    return TransferPlan(flows=tuple(flows), total_cost=total)


def build_flow_network(prev: Allocation, target: Allocation, costs, R: float,
                       tol_bal: float = TOL_BAL) -> FlowNetwork:
    """Assemble the augmented transfer network for one slot."""
    costs = np.asarray(costs, dtype=np.float64)
    n = costs.shape[0]
    if prev.r.shape[0] != n or target.r.shape[0] != n:
        raise ValueError("allocations and cost matrix must agree on node count")
    supplies = prev.r - target.r
    surplus, deficit, total_surplus, total_deficit = _classify(supplies, tol_bal)

    sink = n + 1
    ii, jj = _pair_indices(n)
    fwd_frm = np.concatenate([np.zeros(surplus.size, np.int64), deficit + 1, ii + 1])
    fwd_to = np.concatenate([surplus + 1, np.full(deficit.size, sink, np.int64), jj + 1])
    fwd_cap = np.concatenate([supplies[surplus], -supplies[deficit], np.full(ii.size, R)])
    fwd_cost = np.concatenate([np.zeros(surplus.size + deficit.size), costs[ii, jj]])
    frm, to, cap, cost = _interleave(fwd_frm, fwd_to, fwd_cap, fwd_cost)
    indptr, frm, to, cap, cost, rev, _ = _csr_arcs(n + 2, frm, to, cap, cost)
    return FlowNetwork(
        n=n, supplies=supplies, surplus=surplus, deficit=deficit,
        total_surplus=total_surplus, total_deficit=total_deficit,
        indptr=indptr, frm=frm, to=to, cap=cap, cost=cost, rev=rev,
        pair_costs=costs, tol=tol_bal,
    )


def min_cost_flow(net: FlowNetwork) -> TransferPlan:
    """Minimum-cost transfer plan meeting every deficit of the network."""
    if net.total_deficit <= net.tol:
        return EMPTY_PLAN
    res = net.cap.copy()
    status = kernels.run_ssp(
        net.indptr, net.frm, net.to, res, net.cost, net.rev,
        net.n + 2, net.source, net.sink, net.total_deficit, net.tol,
    )
    if status == kernels.INFEASIBLE:
        raise InfeasibleError("transfer network cannot cover all deficits")
    if status == kernels.STALLED:
        raise RuntimeError("augmentation guard tripped; network is ill-conditioned")
    flow = net.cap - res  # per-arc flow; reverse pushes already cancelled
    mask = (flow > net.tol) & (net.frm >= 1) & (net.frm <= net.n) \
        & (net.to >= 1) & (net.to <= net.n)
    return _net_plan(net.frm[mask] - 1, net.to[mask] - 1, flow[mask],
                     net.n, net.pair_costs, net.tol)


class TransferSolver:
    """Episode-lifetime planner: fixed arc skeleton, per-slot capacities.

    Equivalent to ``min_cost_flow(build_flow_network(prev, target, ...))``
    slot by slot, without rebuilding the pairwise arcs each time.
    """

    def __init__(self, costs, R: float, tol_bal: float = TOL_BAL):
        costs = np.asarray(costs, dtype=np.float64)
        n = costs.shape[0]
        sink = n + 1
        nodes = np.arange(1, n + 1, dtype=np.int64)
        ii, jj = _pair_indices(n)
        fwd_frm = np.concatenate([np.zeros(n, np.int64), nodes, ii + 1])
        fwd_to = np.concatenate([nodes, np.full(n, sink, np.int64), jj + 1])
        fwd_cap = np.concatenate([np.zeros(2 * n), np.full(ii.size, R)])
        fwd_cost = np.concatenate([np.zeros(2 * n), costs[ii, jj]])
        frm, to, cap, cost = _interleave(fwd_frm, fwd_to, fwd_cap, fwd_cost)
        indptr, frm, to, cap, cost, rev, inv = _csr_arcs(n + 2, frm, to, cap, cost)
        self.n = n
        self.R = float(R)
        self.tol = tol_bal
        self.pair_costs = costs
        self.indptr, self.frm, self.to, self.rev = indptr, frm, to, rev
        self.cost = cost
        self.cap_template = cap
        # sorted positions of the per-node source/sink arcs and the pair arcs
        self.src_pos = inv[2 * np.arange(n, dtype=np.int64)]
        self.snk_pos = inv[2 * n + 2 * np.arange(n, dtype=np.int64)]
        self.pair_pos = inv[4 * n + 2 * np.arange(ii.size, dtype=np.int64)]
        self.pair_i, self.pair_j = ii, jj

    def plan(self, prev: Allocation, target: Allocation) -> TransferPlan:
        supplies = prev.r - target.r
        surplus, deficit, _, total_deficit = _classify(supplies, self.tol)
        if total_deficit <= self.tol:
            return EMPTY_PLAN
        res = self.cap_template.copy()
        res[self.src_pos[surplus]] = supplies[surplus]
        res[self.snk_pos[deficit]] = -supplies[deficit]
        status = kernels.run_ssp(
            self.indptr, self.frm, self.to, res, self.cost, self.rev,
            self.n + 2, 0, self.n + 1, total_deficit, self.tol,
        )
        if status == kernels.INFEASIBLE:
            raise InfeasibleError("transfer network cannot cover all deficits")
        if status == kernels.STALLED:
            raise RuntimeError("augmentation guard tripped; network is ill-conditioned")
        flow = self.R - res[self.pair_pos]
        mask = flow > self.tol
        return _net_plan(self.pair_i[mask], self.pair_j[mask], flow[mask],
                         self.n, self.pair_costs, self.tol)


def apply_transfers(prev: Allocation, plan: TransferPlan) -> Allocation:
    """Realized allocation after executing a plan: prev + inflow - outflow."""
    r = prev.r.copy()
    for i, j, amount in plan.flows:
        r[i] -= amount
        r[j] += amount
    return Allocation(r)


def min_cost_flow_lp_reference(net: FlowNetwork) -> float:
    """Optimal transfer cost via the LP formulation, solved with scipy HiGHS.

    Independent of the successive-shortest-path code path; used to verify
    optimality in tests.  Returns the optimal objective value.
    """
    from scipy.optimize import linprog

    fwd = np.flatnonzero(net.cap > 0.0)
    if net.total_deficit <= net.tol:
        return 0.0
    m = fwd.shape[0]
    c = net.cost[fwd]
    bounds = [(0.0, float(net.cap[a])) for a in fwd]
    # conservation at real nodes, sink arcs saturated
    a_eq = np.zeros((net.n + 1, m))
    b_eq = np.zeros(net.n + 1)
    for k, a in enumerate(fwd):
        u, v = int(net.frm[a]), int(net.to[a])
        if 1 <= u <= net.n:
            a_eq[u - 1, k] += 1.0
        if 1 <= v <= net.n:
            a_eq[v - 1, k] -= 1.0
        if v == net.sink:
            a_eq[net.n, k] += 1.0
    b_eq[net.n] = net.total_deficit
    result = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not result.success:
        raise InfeasibleError(f"reference LP failed: {result.message}")
    return float(result.fun)
