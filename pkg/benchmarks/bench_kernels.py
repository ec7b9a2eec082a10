"""Compare the numba and numpy flow kernels on representative workloads.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from defalloc import kernels
from defalloc.flow import TransferSolver
from defalloc.harness import ExperimentConfig, generate_instance, sample_attacks
from defalloc.model import Allocation, RiskParams
from defalloc.policies import run_episode


def time_flow_solves(n, n_slots, backend, seed=0):
    rng = np.random.default_rng(seed)
    costs = rng.uniform(0.1, 2.0, (n, n))
    np.fill_diagonal(costs, 0.0)
    solver = TransferSolver(costs, R=float(4 * n))
    prev = Allocation(rng.uniform(1, 4, n))
    targets = []
    for _ in range(n_slots):
        t = rng.uniform(1, 4, n)
        targets.append(Allocation(t * (prev.r.sum() / t.sum())))
    previous = kernels.set_backend(backend)
    try:
        solver.plan(prev, targets[0])  # warm any jit path
        started = time.perf_counter()
        for target in targets:
            solver.plan(prev, target)
        elapsed = time.perf_counter() - started
    finally:
        kernels.set_backend(previous)
    return elapsed / n_slots


def time_episode(policy, backend, n=50, T=20, seed=0):
    cfg = ExperimentConfig(n=n, T=T, seeds=(seed,))
    inst = generate_instance(cfg, seed)
    trace = sample_attacks(inst.attack_probs, T, seed)
    previous = kernels.set_backend(backend)
    try:
        run_episode(inst, policy, RiskParams(0.05), trace)  # warm
        started = time.perf_counter()
        metrics = run_episode(inst, policy, RiskParams(0.05), trace)
        elapsed = time.perf_counter() - started
    finally:
        kernels.set_backend(previous)
    return elapsed, metrics.total_damage


def main():
    kernels.warmup()
    print(f"default backend: {kernels.active_backend()}")
    print("\nflow solve, mean seconds per slot (20 slots, random rebalance)")
    print(f"{'n':>6} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for n in (25, 100, 200):
        t_nb = time_flow_solves(n, 20, "numba")
        t_np = time_flow_solves(n, 20, "numpy")
        print(f"{n:>6} {t_nb:>12.6f} {t_np:>12.6f} {t_np / t_nb:>8.1f}x")

    print("\nfull episode (n=50, T=20), seconds")
    print(f"{'policy':>10} {'numba':>12} {'numpy':>12} {'speedup':>9} {'same result':>12}")
    for policy in ("un_mean", "greedy", "oracle"):
        t_nb, dmg_nb = time_episode(policy, "numba")
        t_np, dmg_np = time_episode(policy, "numpy")
        print(f"{policy:>10} {t_nb:>12.4f} {t_np:>12.4f} {t_np / t_nb:>8.1f}x "
              f"{str(dmg_nb == dmg_np):>12}")


if __name__ == "__main__":
    main()
