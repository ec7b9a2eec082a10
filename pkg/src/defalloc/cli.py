"""Command-line front end for the simulator."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .harness import ExperimentConfig
from .model import InfeasibleError, instance_to_dict, load_instance, save_instance
from .policies import RiskParams, run_episode

POLICY_FLAGS = {"un-mean": "un_mean", "kn-mean": "kn_mean",
                "greedy": "greedy", "oracle": "oracle"}


def _parse_floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defalloc",
        description="Simulate defensive resource allocation under Bernoulli attacks: "
                    "risk-bounded per-slot allocation plus minimum-cost transfers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config file")
    common.add_argument("--n", type=int, help="node count override")
    common.add_argument("--t", type=int, help="slot count override")
    common.add_argument("--alpha", type=float, help="risk parameter override")
    common.add_argument("--seed", type=int, help="single seed override")
    common.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    common.add_argument("--p-max", type=float, help="attack probability cap override")
    common.add_argument("--r-fraction", type=float,
                        help="fix the budget at this fraction of [sum r_min, sum r_max]")
    common.add_argument("--variance-form", choices=("linear", "squared"),
                        help="variance term of the damage bound")
    common.add_argument("--no-timing", action="store_true",
                        help="write wall_seconds as 0.0 for byte-stable output")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for multi-seed runs (default: CPUs)")
    common.add_argument("--out", type=Path, help="output file path")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="serialization for aggregate tables")

    p = sub.add_parser("generate", parents=[common],
                       help="write one instance as JSON")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", parents=[common],
                       help="run a single policy on one seed")
    p.add_argument("--policy", choices=sorted(POLICY_FLAGS), default="un-mean")
    p.add_argument("--instance", type=Path, help="instance JSON (else generated)")
    p.add_argument("--per-slot", type=Path, help="write per-slot rows to this CSV")
    p.add_argument("--plans", type=Path, help="write transfer plan rows to this CSV")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", parents=[common],
                       help="run all configured policies over all seeds")
    p.add_argument("--per-slot", type=Path, help="write per-slot rows to this CSV")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep-alpha", parents=[common],
                       help="trade-off sweep over the risk ladder")
    p.add_argument("--policy", choices=sorted(POLICY_FLAGS), help="swept policy")
    p.add_argument("--alphas", type=_parse_floats, help="comma-separated alpha ladder")
    p.add_argument("--per-seed", type=Path, help="write per-seed rows to this CSV")
    p.set_defaults(func=_cmd_sweep_alpha)

    p = sub.add_parser("sweep-attack", parents=[common],
                       help="damage versus attack-probability cap")
    p.add_argument("--p-max-ladder", type=_parse_floats,
                   help="comma-separated p_max ladder")
    p.add_argument("--per-seed", type=Path, help="write per-seed rows to this CSV")
    p.set_defaults(func=_cmd_sweep_attack)

    p = sub.add_parser("sweep-resource", parents=[common],
                       help="damage versus budget fraction")
    p.add_argument("--r-fractions", type=_parse_floats,
                   help="comma-separated budget fractions")
    p.add_argument("--per-seed", type=Path, help="write per-seed rows to this CSV")
    p.set_defaults(func=_cmd_sweep_resource)

    p = sub.add_parser("learning-curve", parents=[common],
                       help="per-slot damage gap between learned and known statistics")
    p.set_defaults(func=_cmd_learning_curve)

    return parser


def _effective_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
    overrides = {
        "n": args.n,
        "T": args.t,
        "alpha": args.alpha,
        "p_max": getattr(args, "p_max", None),
        "variance_form": getattr(args, "variance_form", None),
        "alphas": getattr(args, "alphas", None),
        "p_max_ladder": getattr(args, "p_max_ladder", None),
        "r_fractions": getattr(args, "r_fractions", None),
    }
    if getattr(args, "r_fraction", None) is not None:
        overrides["r_mode"] = "fraction"
        overrides["r_fraction"] = args.r_fraction
    if args.seeds is not None:
        overrides["seeds"] = tuple(range(args.seeds))
    elif args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "policy", None):
        overrides["sweep_policy"] = POLICY_FLAGS[args.policy]
    if args.no_timing:
        overrides["record_timing"] = False
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def _emit(table: harness.Table, path: Path | None, fmt: str = "csv") -> None:
    text = table.to_csv_text() if fmt == "csv" else table.to_json_text()
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
        print(f"wrote {path}")


def _cmd_generate(args) -> int:
    cfg = _effective_config(args)
    seed = cfg.seeds[0]
    inst = harness.generate_instance(cfg, seed)
    if args.out is None:
        print(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True))
    else:
        save_instance(inst, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = _effective_config(args)
    seed = cfg.seeds[0]
    if args.instance:
        inst = load_instance(args.instance)
    else:
        inst = harness.generate_instance(cfg, seed)
    trace = harness.sample_attacks(inst.attack_probs, inst.T, seed)
    policy = POLICY_FLAGS[args.policy]
    opts = {"tol_bal": cfg.tol_bal}
    if policy in ("un_mean", "kn_mean"):
        opts["variance_form"] = cfg.variance_form
        opts["collect_diagnostics"] = args.per_slot is not None
    metrics = run_episode(inst, policy, RiskParams(cfg.alpha), trace, **opts)
    wall = metrics.wall_seconds if cfg.record_timing else 0.0
    print(f"# config: {cfg.canonical_json()}")
    print(f"policy={policy} seed={seed} total_damage={metrics.total_damage!r} "
          f"total_transfer_cost={metrics.total_transfer_cost!r} "
          f"total_epsilon={metrics.total_epsilon!r} wall_seconds={wall!r}")
    if args.out:
        total_eps = metrics.total_epsilon if policy in ("un_mean", "kn_mean") else None
        table = harness.Table(
            columns=["experiment_id", "policy", "seed", "n", "T", "alpha", "p_max", "R",
                     "total_damage", "total_transfer_cost", "total_epsilon",
                     "wall_seconds"],
            rows=[["run", policy, seed, inst.n, inst.T, cfg.alpha, cfg.p_max, inst.R,
                   metrics.total_damage, metrics.total_transfer_cost, total_eps, wall]],
            header={"experiment": "run", "config": cfg.canonical_json()},
        )
        _emit(table, args.out)
    if args.per_slot:
        rows = [["run", policy, seed, s.t, s.epsilon, s.realized_damage,
                 s.transfer_cost, s.mean_err_max, s.var_err_max]
                for s in metrics.slots]
        table = harness.Table(
            columns=["experiment_id", "policy", "seed", "t", "epsilon",
                     "realized_damage", "transfer_cost", "mean_err_max", "var_err_max"],
            rows=rows, header={"experiment": "run", "config": cfg.canonical_json()},
        )
        _emit(table, args.per_slot)
    if args.plans:
        rows = [[s.t, i, j, amount, inst.costs[i, j] * amount]
                for s in metrics.slots for i, j, amount in s.plan.flows]
        table = harness.Table(
            columns=["t", "i", "j", "amount", "cost"],
            rows=rows, header={"experiment": "run", "config": cfg.canonical_json()},
        )
        _emit(table, args.plans)
    return 0


def _cmd_compare(args) -> int:
    cfg = _effective_config(args)
    print(f"# config: {cfg.canonical_json()}")
    result = harness.compare_methods(cfg, jobs=args.jobs)
    if args.out:
        _emit(result["per_seed"], args.out)
    if args.per_slot:
        _emit(result["per_slot"], args.per_slot)
    _emit(result["aggregate"], None, args.format)
    return 0


def _sweep_command(args, runner, out_key="aggregate") -> int:
    cfg = _effective_config(args)
    print(f"# config: {cfg.canonical_json()}")
    result = runner(cfg, jobs=args.jobs)
    _emit(result[out_key], args.out, args.format)
    per_seed = getattr(args, "per_seed", None)
    if per_seed and "per_seed" in result:
        _emit(result["per_seed"], per_seed)
    return 0


def _cmd_sweep_alpha(args) -> int:
    return _sweep_command(args, harness.sweep_alpha)


def _cmd_sweep_attack(args) -> int:
    return _sweep_command(args, harness.sweep_attack)


def _cmd_sweep_resource(args) -> int:
    return _sweep_command(args, harness.sweep_resource)


def _cmd_learning_curve(args) -> int:
    return _sweep_command(args, harness.learning_curve, out_key="curve")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
