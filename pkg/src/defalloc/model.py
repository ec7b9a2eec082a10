"""Domain types and the damage/cost arithmetic shared by policies and solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "InfeasibleError",
    "NodeParams",
    "Nodes",
    "Instance",
    "Allocation",
    "AttackTrace",
    "TransferPlan",
    "RiskParams",
    "damage",
    "expected_damage",
    "slot_damage",
    "plan_cost",
    "load_instance",
    "save_instance",
    "instance_to_dict",
    "instance_from_dict",
]


class InfeasibleError(ValueError):
    """Raised when an instance or a subproblem admits no feasible solution."""


def _check_vector(x, name: str, n: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class NodeParams:
    """Importance weight and allocation thresholds of a single node."""

    w: float
    r_min: float
    r_max: float

    def __post_init__(self):
        # r_min = 0 is tolerated for bare damage arithmetic; Instance enforces
        # the strictly positive operability minimum.
        if not (0.0 <= self.r_min < self.r_max):
            raise ValueError(
                f"need 0 <= r_min < r_max, got r_min={self.r_min}, r_max={self.r_max}"
            )
        if self.w < 0.0:
            raise ValueError(f"weight must be nonnegative, got {self.w}")

    @property
    def span(self) -> float:
        return self.r_max - self.r_min


@dataclass(frozen=True)
class Nodes:
    """Column-wise view of node parameters; validated once at construction."""

    w: np.ndarray
    r_min: np.ndarray
    r_max: np.ndarray

    def __post_init__(self):
        w = _check_vector(self.w, "w")
        n = w.shape[0]
        r_min = _check_vector(self.r_min, "r_min", n)
        r_max = _check_vector(self.r_max, "r_max", n)
        if n < 1:
            raise ValueError("need at least one node")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if np.any(r_min < 0.0) or np.any(r_max <= r_min):
            raise ValueError("need 0 <= r_min < r_max per node")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "r_min", r_min)
        object.__setattr__(self, "r_max", r_max)

    def __len__(self) -> int:
        return self.w.shape[0]

    @property
    def span(self) -> np.ndarray:
        return self.r_max - self.r_min

    def params(self, i: int) -> NodeParams:
        return NodeParams(float(self.w[i]), float(self.r_min[i]), float(self.r_max[i]))

    @classmethod
    def from_params(cls, params) -> "Nodes":
        params = list(params)
        return cls(
            np.array([p.w for p in params]),
            np.array([p.r_min for p in params]),
            np.array([p.r_max for p in params]),
        )


@dataclass(frozen=True)
class Instance:
    """Static problem data for one simulated scenario.

    ``attack_probs`` is the hidden ground truth; only the known-statistics and
    oracle pathways may read it.
    """

    n: int
    T: int
    R: float
    nodes: Nodes
    costs: np.ndarray
    attack_probs: np.ndarray
    seed: int

    def __post_init__(self):
        if self.n < 1 or len(self.nodes) != self.n:
            raise ValueError(f"node count mismatch: n={self.n}, nodes={len(self.nodes)}")
        if self.T < 1:
            raise ValueError(f"need T >= 1, got {self.T}")
        costs = np.asarray(self.costs, dtype=np.float64)
        if costs.shape != (self.n, self.n):
            raise ValueError(f"costs must be {self.n}x{self.n}, got {costs.shape}")
        if not np.all(np.isfinite(costs)) or np.any(costs < 0.0):
            raise ValueError("costs must be finite and nonnegative")
        if np.any(np.diag(costs) != 0.0):
            raise ValueError("self-transfer costs must be zero")
        if np.any(self.nodes.r_min <= 0.0):
            raise ValueError("instance nodes need a strictly positive r_min")
        probs = _check_vector(self.attack_probs, "attack_probs", self.n)
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("attack probabilities must lie in [0, 1]")
        if float(np.sum(self.nodes.r_min)) > self.R:
            raise InfeasibleError(
                f"budget {self.R} below total minimum requirement "
                f"{float(np.sum(self.nodes.r_min))}"
            )
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "attack_probs", probs)
        object.__setattr__(self, "R", float(self.R))


@dataclass(frozen=True)
class Allocation:
    """Per-node resource vector for one slot."""

    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _check_vector(self.r, "r"))

    def is_feasible(self, nodes: Nodes, R: float, tol: float = 1e-9) -> bool:
        r = self.r
        return bool(
            np.all(r >= nodes.r_min - tol)
            and np.all(r <= nodes.r_max + tol)
            and float(np.sum(r)) <= R + tol
        )

    def assert_feasible(self, nodes: Nodes, R: float, tol: float = 1e-9) -> None:
        if not self.is_feasible(nodes, R, tol):
            raise InfeasibleError("allocation violates box or budget constraints")


@dataclass(frozen=True)
class AttackTrace:
    """T x n binary matrix of realized attacks."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 2:
            raise ValueError(f"trace must be 2-d, got shape {y.shape}")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValueError("trace entries must be exactly 0 or 1")
        object.__setattr__(self, "y", y.astype(np.int8))

    @property
    def T(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class TransferPlan:
    """Nonnegative pairwise flows realizing a target allocation."""

    flows: tuple
    total_cost: float

    def __post_init__(self):
        flows = tuple((int(i), int(j), float(a)) for i, j, a in self.flows)
        for i, j, a in flows:
            if a < 0.0:
                raise ValueError(f"flow amounts must be nonnegative, got {a} on ({i},{j})")
        object.__setattr__(self, "flows", flows)
        object.__setattr__(self, "total_cost", float(self.total_cost))


EMPTY_PLAN = TransferPlan(flows=(), total_cost=0.0)


@dataclass(frozen=True)
class RiskParams:
    """Risk level alpha in (0,1) and the derived bound coefficient kappa."""

    alpha: float
    kappa: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        object.__setattr__(self, "kappa", float(np.sqrt((1.0 - self.alpha) / self.alpha)))


def damage(node: NodeParams, r: float, y: int) -> float:
    """Realized damage at one node: y * clamp((r_max - r)/(r_max - r_min), 0, 1).

    Total on r >= 0, including the infeasible region r < r_min (used by tests
    and oracles).
    """
    if r < 0.0:
        raise ValueError(f"resource amount must be nonnegative, got {r}")
    if y not in (0, 1):
        raise ValueError(f"attack indicator must be 0 or 1, got {y}")
    frac = (node.r_max - r) / (node.r_max - node.r_min)
    return y * min(max(frac, 0.0), 1.0)


def expected_damage(node: NodeParams, r: float, p: float) -> float:
    """Expected damage under an attack probability p: p * damage(node, r, 1)."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p * damage(node, r, 1)


def slot_damage(alloc: Allocation, attacks: np.ndarray, nodes: Nodes) -> float:
    """Weighted realized damage of one slot: sum_i w_i * damage_i."""
    r = alloc.r
    y = np.asarray(attacks, dtype=np.float64)
    if r.shape != y.shape or r.shape[0] != len(nodes):
        raise ValueError("allocation, attacks, and nodes must have matching length")
    frac = np.clip((nodes.r_max - r) / nodes.span, 0.0, 1.0)
    return float(np.sum(nodes.w * y * frac))


def plan_cost(plan: TransferPlan, costs: np.ndarray) -> float:
    """Recompute the transfer cost of a plan from the cost matrix."""
    costs = np.asarray(costs, dtype=np.float64)
    n = costs.shape[0]
    total = 0.0
    for i, j, amount in plan.flows:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"flow endpoint ({i},{j}) outside [0,{n})")
        total += costs[i, j] * amount
    return total


def instance_to_dict(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "T": inst.T,
        "R": inst.R,
        "nodes": [
            {"w": float(w), "r_min": float(lo), "r_max": float(hi)}
            for w, lo, hi in zip(inst.nodes.w, inst.nodes.r_min, inst.nodes.r_max)
        ],
        "costs": inst.costs.tolist(),
        "attack_probs": inst.attack_probs.tolist(),
        "seed": inst.seed,
    }


def instance_from_dict(data: dict) -> Instance:
    try:
        nodes = Nodes(
            np.array([d["w"] for d in data["nodes"]], dtype=np.float64),
            np.array([d["r_min"] for d in data["nodes"]], dtype=np.float64),
            np.array([d["r_max"] for d in data["nodes"]], dtype=np.float64),
        )
        return Instance(
            n=int(data["n"]),
            T=int(data["T"]),
            R=float(data["R"]),
            nodes=nodes,
            costs=np.asarray(data["costs"], dtype=np.float64),
            attack_probs=np.asarray(data["attack_probs"], dtype=np.float64),
            seed=int(data["seed"]),
        )
    except KeyError as exc:
        raise ValueError(f"instance JSON missing field {exc}") from exc


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n")


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))
