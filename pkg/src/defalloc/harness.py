"""Instance generation, attack sampling, experiment sweeps, and CSV output.

Randomness is counter-based (Philox) with per-purpose substreams, so the
instance draw, the attack draw, and any future stream never perturb each
other.  Within one seed every policy and every sweep level reuses the same
attack uniforms (paired design): attack indicators are ``uniform < p`` with
``p = p_max * p_raw``, which couples sweep levels monotonically.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import AttackTrace, Instance, Nodes
from .policies import RiskParams, run_episode

__all__ = [
    "ExperimentConfig",
    "rng_stream",
    "generate_instance",
    "sample_attacks",
    "compare_methods",
    "sweep_alpha",
    "sweep_attack",
    "sweep_resource",
    "learning_curve",
    "pareto_nondominated",
    "Table",
]

PURPOSE_CODES = {"instance": 1, "attacks": 2, "tiebreak": 3}
DEFAULT_ALPHA_LADDER = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25)
DEFAULT_PMAX_LADDER = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_R_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


def rng_stream(seed: int, purpose: str) -> np.random.Generator:
    """Independent deterministic substream for one (seed, purpose) pair."""
    code = PURPOSE_CODES[purpose]
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(code,))
    return np.random.Generator(np.random.Philox(ss))


def _check_range(name, rng, positive=False):
    lo, hi = float(rng[0]), float(rng[1])
    if hi < lo:
        raise ValueError(f"{name} must be ordered (lo <= hi), got {rng}")
    if positive and lo <= 0.0:
        raise ValueError(f"{name} must be strictly positive, got {rng}")
    return (lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one experiment family; JSON round-trippable."""

    n: int = 25
    T: int = 20
    seeds: tuple = tuple(range(30))
    alpha: float = 0.05
    alphas: tuple = DEFAULT_ALPHA_LADDER
    p_max: float = 0.5
    p_max_ladder: tuple = DEFAULT_PMAX_LADDER
    r_mode: str = "random"
    r_fraction: float = 0.5
    r_fractions: tuple = DEFAULT_R_FRACTIONS
    weight_range: tuple = (0.5, 2.0)
    cost_range: tuple = (0.1, 2.0)
    r_min_range: tuple = (1.0, 3.0)
    r_gap_range: tuple = (2.0, 8.0)
    policies: tuple = ("un_mean", "kn_mean", "greedy", "oracle")
    sweep_policy: str = "un_mean"
    variance_form: str = "linear"
    phase1_h_tol: float = 1e-9
    phase1_max_iter: int = 200
    tol_bal: float = 1e-9
    record_timing: bool = True
    collect_diagnostics: bool = False

    def __post_init__(self):
        if self.n < 1 or self.T < 1:
            raise ValueError(f"need n >= 1 and T >= 1, got n={self.n}, T={self.T}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 <= self.p_max <= 1.0):
            raise ValueError(f"p_max must lie in [0, 1], got {self.p_max}")
        if self.r_mode not in ("random", "fraction"):
            raise ValueError(f"r_mode must be 'random' or 'fraction', got {self.r_mode!r}")
        if not (0.0 <= self.r_fraction <= 1.0):
            raise ValueError(f"r_fraction must lie in [0, 1], got {self.r_fraction}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "p_max_ladder", tuple(float(p) for p in self.p_max_ladder))
        object.__setattr__(self, "r_fractions", tuple(float(f) for f in self.r_fractions))
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "weight_range", _check_range("weight_range", self.weight_range))
        object.__setattr__(self, "cost_range", _check_range("cost_range", self.cost_range))
        object.__setattr__(self, "r_min_range",
                           _check_range("r_min_range", self.r_min_range, positive=True))
        object.__setattr__(self, "r_gap_range",
                           _check_range("r_gap_range", self.r_gap_range, positive=True))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _experiment_id(kind: str, cfg: ExperimentConfig) -> str:
    digest = hashlib.sha1((kind + "|" + cfg.canonical_json()).encode()).hexdigest()[:8]
    return f"{kind}-{digest}"


def generate_instance(cfg: ExperimentConfig, seed: int,
                      p_max: float | None = None,
                      r_fraction: float | None = None) -> Instance:
    """Draw one instance; deterministic per seed, paired across sweep levels.

    ``p_max`` and ``r_fraction`` override the config level without consuming
    different stream positions, so sweeps stay paired within a seed.
    """
    rng = rng_stream(seed, "instance")
    n = cfg.n
    w = rng.uniform(*cfg.weight_range, n)
    costs = rng.uniform(*cfg.cost_range, (n, n))
    np.fill_diagonal(costs, 0.0)
    r_min = rng.uniform(*cfg.r_min_range, n)
    r_max = r_min + rng.uniform(*cfg.r_gap_range, n)
    p_raw = rng.random(n)
    cap = cfg.p_max if p_max is None else p_max
    probs = cap * p_raw
    lo, hi = float(np.sum(r_min)), float(np.sum(r_max))
    if cfg.r_mode == "random" and r_fraction is None:
        budget = float(rng.uniform(lo, hi))
    else:
        frac = cfg.r_fraction if r_fraction is None else r_fraction
        # hit the interval endpoints exactly despite rounding
        budget = hi if frac == 1.0 else lo + frac * (hi - lo)
    return Instance(
        n=n, T=cfg.T, R=budget, nodes=Nodes(w, r_min, r_max),
        costs=costs, attack_probs=probs, seed=int(seed),
    )


def sample_attacks(p, T: int, seed: int) -> AttackTrace:
    """Independent Bernoulli(p_i) draws per slot; deterministic per seed."""
    p = np.asarray(p, dtype=np.float64)
    u = rng_stream(seed, "attacks").random((T, p.shape[0]))
    return AttackTrace((u < p).astype(np.int8))


@dataclass
class Table:
    """Column-named result rows plus the comment header echoed into the CSV."""

    columns: list
    rows: list
    header: dict

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = [f"# {key}: {value}" for key, value in self.header.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_cell(x) for x in row))
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        records = [dict(zip(self.columns, row)) for row in self.rows]
        return json.dumps({"header": self.header, "rows": records}, sort_keys=True, indent=2)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _header(kind: str, cfg: ExperimentConfig) -> dict:
    return {"experiment": kind, "config": cfg.canonical_json()}


def _episode_options(cfg: ExperimentConfig, policy: str) -> dict:
    opts = {"tol_bal": cfg.tol_bal}
    if policy in ("un_mean", "kn_mean"):
        opts["variance_form"] = cfg.variance_form
        opts["collect_diagnostics"] = cfg.collect_diagnostics
    return opts


def _wall(cfg: ExperimentConfig, metrics) -> float:
    return metrics.wall_seconds if cfg.record_timing else 0.0


def _run_map(worker, cfg: ExperimentConfig, jobs: int, tasks):
    """Run `worker(cfg_dict, task)` over tasks, preserving order."""
    cfg_dict = cfg.to_dict()
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(cfg_dict, task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, [cfg_dict] * len(tasks), tasks))


# ---------------------------------------------------------------------------
# compare


def _compare_worker(cfg_dict: dict, seed: int):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    inst = generate_instance(cfg, seed)
    trace = sample_attacks(inst.attack_probs, cfg.T, seed)
    risk = RiskParams(cfg.alpha)
    out = []
    for policy in cfg.policies:
        metrics = run_episode(inst, policy, risk, trace, **_episode_options(cfg, policy))
        total_eps = metrics.total_epsilon if policy in ("un_mean", "kn_mean") else None
        row = [policy, seed, cfg.n, cfg.T, cfg.alpha, cfg.p_max, inst.R,
               metrics.total_damage, metrics.total_transfer_cost, total_eps,
               _wall(cfg, metrics)]
        slot_rows = [
            [policy, seed, s.t, s.epsilon, s.realized_damage, s.transfer_cost,
             s.mean_err_max, s.var_err_max]
            for s in metrics.slots
        ]
        out.append((row, slot_rows))
    return out


def compare_methods(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Run every configured policy on every seed with a shared trace."""
    kind = "compare"
    exp_id = _experiment_id(kind, cfg)
    results = _run_map(_compare_worker, cfg, jobs, list(cfg.seeds))
    per_seed_rows, per_slot_rows = [], []
    for seed_result in results:
        for row, slot_rows in seed_result:
            per_seed_rows.append([exp_id] + row)
            per_slot_rows.extend([exp_id] + r for r in slot_rows)
    per_seed = Table(
        columns=["experiment_id", "policy", "seed", "n", "T", "alpha", "p_max", "R",
                 "total_damage", "total_transfer_cost", "total_epsilon", "wall_seconds"],
        rows=per_seed_rows,
        header=_header(kind, cfg),
    )
    agg_rows = []
    for policy in cfg.policies:
        rows = [r for r in per_seed_rows if r[1] == policy]
        eps_vals = [r[10] for r in rows if r[10] is not None]
        agg_rows.append([
            exp_id, policy, len(rows),
            float(np.mean([r[8] for r in rows])),
            float(np.mean([r[9] for r in rows])),
            float(np.mean(eps_vals)) if eps_vals else None,
            float(np.mean([r[11] for r in rows])),
        ])
    aggregate = Table(
        columns=["experiment_id", "policy", "seeds", "mean_total_damage",
                 "mean_total_transfer_cost", "mean_total_epsilon", "mean_wall_seconds"],
        rows=agg_rows,
        header=_header(kind, cfg),
    )
    per_slot = Table(
        columns=["experiment_id", "policy", "seed", "t", "epsilon", "realized_damage",
                 "transfer_cost", "mean_err_max", "var_err_max"],
        rows=per_slot_rows,
        header=_header(kind, cfg),
    )
    return {"per_seed": per_seed, "aggregate": aggregate, "per_slot": per_slot}


# ---------------------------------------------------------------------------
# alpha sweep


def _alpha_worker(cfg_dict: dict, seed: int):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    inst = generate_instance(cfg, seed)
    trace = sample_attacks(inst.attack_probs, cfg.T, seed)
    rows = []
    for alpha in cfg.alphas:
        metrics = run_episode(inst, cfg.sweep_policy, RiskParams(alpha), trace,
                              **_episode_options(cfg, cfg.sweep_policy))
        rows.append([alpha, seed, metrics.total_damage, metrics.total_transfer_cost,
                     metrics.total_epsilon])
    return rows


def pareto_nondominated(z1, z2) -> np.ndarray:
    """Boolean mask of points not dominated in the minimize-both sense."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    n = z1.shape[0]
    flags = np.ones(n, dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if (z1[j] <= z1[i] and z2[j] <= z2[i]
                    and (z1[j] < z1[i] or z2[j] < z2[i])):
                flags[i] = False
                break
    return flags


def sweep_alpha(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Trade-off sweep over the risk ladder with Pareto flags per level."""
    kind = "sweep-alpha"
    exp_id = _experiment_id(kind, cfg)
    results = _run_map(_alpha_worker, cfg, jobs, list(cfg.seeds))
    per_seed_rows = [
        [exp_id, cfg.sweep_policy] + row for seed_rows in results for row in seed_rows
    ]
    per_seed = Table(
        columns=["experiment_id", "policy", "alpha", "seed", "total_damage",
                 "total_transfer_cost", "total_epsilon"],
        rows=per_seed_rows,
        header=_header(kind, cfg),
    )
    mean_damage, mean_cost, mean_eps = [], [], []
    for alpha in cfg.alphas:
        rows = [r for r in per_seed_rows if r[2] == alpha]
        mean_damage.append(float(np.mean([r[4] for r in rows])))
        mean_cost.append(float(np.mean([r[5] for r in rows])))
        mean_eps.append(float(np.mean([r[6] for r in rows])))
    flags = pareto_nondominated(mean_damage, mean_cost)
    agg_rows = [
        [exp_id, cfg.sweep_policy, alpha, cfg.n, cfg.T, cfg.p_max, len(cfg.seeds),
         mean_damage[i], mean_cost[i], mean_eps[i], int(flags[i])]
        for i, alpha in enumerate(cfg.alphas)
    ]
    aggregate = Table(
        columns=["experiment_id", "policy", "alpha", "n", "T", "p_max", "seeds",
                 "mean_total_damage", "mean_total_transfer_cost", "mean_total_epsilon",
                 "pareto"],
        rows=agg_rows,
        header=_header(kind, cfg),
    )
    return {"per_seed": per_seed, "aggregate": aggregate}


# ---------------------------------------------------------------------------
# attack-probability sweep


SWEEP_PAIR = ("un_mean", "oracle")


def _attack_worker(cfg_dict: dict, seed: int):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    risk = RiskParams(cfg.alpha)
    rows = []
    for level in cfg.p_max_ladder:
        inst = generate_instance(cfg, seed, p_max=level)
        trace = sample_attacks(inst.attack_probs, cfg.T, seed)
        for policy in SWEEP_PAIR:
            metrics = run_episode(inst, policy, risk, trace,
                                  **_episode_options(cfg, policy))
            rows.append([level, policy, seed, metrics.total_damage,
                         metrics.total_transfer_cost])
    return rows


def sweep_attack(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Damage versus attack-probability cap for the learned policy and Oracle."""
    kind = "sweep-attack"
    exp_id = _experiment_id(kind, cfg)
    results = _run_map(_attack_worker, cfg, jobs, list(cfg.seeds))
    per_seed_rows = [[exp_id] + row for seed_rows in results for row in seed_rows]
    per_seed = Table(
        columns=["experiment_id", "p_max", "policy", "seed", "total_damage",
                 "total_transfer_cost"],
        rows=per_seed_rows,
        header=_header(kind, cfg),
    )
    agg_rows = []
    for level in cfg.p_max_ladder:
        for policy in SWEEP_PAIR:
            rows = [r for r in per_seed_rows if r[1] == level and r[2] == policy]
            agg_rows.append([
                exp_id, policy, level, cfg.n, cfg.T, cfg.alpha, len(rows),
                float(np.mean([r[4] for r in rows])),
                float(np.mean([r[5] for r in rows])),
            ])
    aggregate = Table(
        columns=["experiment_id", "policy", "p_max", "n", "T", "alpha", "seeds",
                 "mean_total_damage", "mean_total_transfer_cost"],
        rows=agg_rows,
        header=_header(kind, cfg),
    )
    return {"per_seed": per_seed, "aggregate": aggregate}


# ---------------------------------------------------------------------------
# resource sweep


def _resource_worker(cfg_dict: dict, seed: int):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    risk = RiskParams(cfg.alpha)
    rows = []
    for frac in cfg.r_fractions:
        inst = generate_instance(cfg, seed, r_fraction=frac)
        trace = sample_attacks(inst.attack_probs, cfg.T, seed)
        for policy in SWEEP_PAIR:
            metrics = run_episode(inst, policy, risk, trace,
                                  **_episode_options(cfg, policy))
            rows.append([frac, policy, seed, inst.R, metrics.total_damage,
                         metrics.total_transfer_cost])
    return rows


def sweep_resource(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Damage versus budget fraction of [sum r_min, sum r_max]."""
    kind = "sweep-resource"
    exp_id = _experiment_id(kind, cfg)
    results = _run_map(_resource_worker, cfg, jobs, list(cfg.seeds))
    per_seed_rows = [[exp_id] + row for seed_rows in results for row in seed_rows]
    per_seed = Table(
        columns=["experiment_id", "r_fraction", "policy", "seed", "R", "total_damage",
                 "total_transfer_cost"],
        rows=per_seed_rows,
        header=_header(kind, cfg),
    )
    agg_rows = []
    for frac in cfg.r_fractions:
        for policy in SWEEP_PAIR:
            rows = [r for r in per_seed_rows if r[1] == frac and r[2] == policy]
            agg_rows.append([
                exp_id, policy, frac, float(np.mean([r[4] for r in rows])),
                cfg.n, cfg.T, cfg.alpha, cfg.p_max, len(rows),
                float(np.mean([r[5] for r in rows])),
                float(np.mean([r[6] for r in rows])),
            ])
    aggregate = Table(
        columns=["experiment_id", "policy", "r_fraction", "mean_R", "n", "T", "alpha",
                 "p_max", "seeds", "mean_total_damage", "mean_total_transfer_cost"],
        rows=agg_rows,
        header=_header(kind, cfg),
    )
    return {"per_seed": per_seed, "aggregate": aggregate}


# ---------------------------------------------------------------------------
# learning curve


def _learning_worker(cfg_dict: dict, seed: int):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    inst = generate_instance(cfg, seed)
    trace = sample_attacks(inst.attack_probs, cfg.T, seed)
    risk = RiskParams(cfg.alpha)
    un = run_episode(inst, "un_mean", risk, trace, **_episode_options(cfg, "un_mean"))
    kn = run_episode(inst, "kn_mean", risk, trace, **_episode_options(cfg, "kn_mean"))
    return [u.realized_damage - k.realized_damage for u, k in zip(un.slots, kn.slots)]


def learning_curve(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Per-slot damage gap between learned and known statistics, paired traces."""
    kind = "learning-curve"
    exp_id = _experiment_id(kind, cfg)
    results = _run_map(_learning_worker, cfg, jobs, list(cfg.seeds))
    gaps = np.asarray(results, dtype=np.float64)  # seeds x T
    rows = [
        [exp_id, t + 1, len(cfg.seeds),
         float(np.mean(gaps[:, t])), float(np.mean(np.abs(gaps[:, t])))]
        for t in range(gaps.shape[1])
    ]
    curve = Table(
        columns=["experiment_id", "t", "seeds", "mean_damage_gap", "mean_abs_damage_gap"],
        rows=rows,
        header=_header(kind, cfg),
    )
    return {"curve": curve, "gaps": gaps}
