import numpy as np
import pytest

from defalloc import kernels
from defalloc.flow import (
    TransferSolver,
    apply_transfers,
    build_flow_network,
    min_cost_flow,
    min_cost_flow_lp_reference,
)
from defalloc.model import Allocation, InfeasibleError, TransferPlan, plan_cost


def random_slot(rng, n=None, metric=False):
    n = n or int(rng.integers(2, 6))
    if metric:
        pts = rng.uniform(0, 3, (n, 2))
        costs = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    else:
        costs = rng.uniform(0.1, 2.0, (n, n))
        np.fill_diagonal(costs, 0.0)
    prev = rng.uniform(1, 5, n)
    target = rng.uniform(1, 5, n)
    target *= prev.sum() / target.sum()
    return Allocation(prev), Allocation(target), costs, float(prev.sum())


class TestBuildNetwork:
    def test_balanced_slot_has_empty_sides(self):
        alloc = Allocation(np.array([3.0, 2.0]))
        costs = np.array([[0.0, 1.0], [1.0, 0.0]])
        net = build_flow_network(alloc, alloc, costs, R=5.0)
        assert net.surplus.size == 0 and net.deficit.size == 0
        assert net.total_deficit == 0.0

    def test_two_node_supply_arithmetic(self):
        net = build_flow_network(Allocation(np.array([5.0, 1.0])),
                                 Allocation(np.array([3.0, 3.0])),
                                 np.array([[0.0, 1.5], [2.0, 0.0]]), R=6.0)
        assert list(net.surplus) == [0] and list(net.deficit) == [1]
        assert net.total_surplus == 2.0 and net.total_deficit == 2.0

    def test_one_surplus_two_deficits(self):
        net = build_flow_network(Allocation(np.array([6.0, 1.0, 1.0])),
                                 Allocation(np.array([2.0, 3.0, 3.0])),
                                 np.zeros((3, 3)), R=8.0)
        assert list(net.surplus) == [0] and list(net.deficit) == [1, 2]

    def test_pairwise_arcs_have_capacity_R(self):
        prev, target, costs, R = random_slot(np.random.default_rng(0), n=3)
        net = build_flow_network(prev, target, costs, R)
        pair = (net.frm >= 1) & (net.frm <= 3) & (net.to >= 1) & (net.to <= 3) \
            & (net.cap > 0)
        assert int(pair.sum()) == 3 * 2
        assert np.all(net.cap[pair] == R)

    def test_deficit_exceeding_surplus_rejected(self):
        with pytest.raises(InfeasibleError):
            build_flow_network(Allocation(np.array([3.0, 1.0])),
                               Allocation(np.array([3.0, 3.0])),
                               np.zeros((2, 2)), R=6.0)


class TestMinCostFlow:
    def test_empty_network_empty_plan(self):
        alloc = Allocation(np.array([3.0, 2.0]))
        net = build_flow_network(alloc, alloc, np.zeros((2, 2)), R=5.0)
        plan = min_cost_flow(net)
        assert plan.flows == () and plan.total_cost == 0.0

    def test_unique_direct_route(self):
        net = build_flow_network(Allocation(np.array([5.0, 1.0])),
                                 Allocation(np.array([3.0, 3.0])),
                                 np.array([[0.0, 1.5], [2.0, 0.0]]), R=6.0)
        plan = min_cost_flow(net)
        assert plan.flows == ((0, 1, 2.0),)
        assert plan.total_cost == pytest.approx(3.0, abs=1e-12)

    def test_two_hop_beats_expensive_direct(self):
        costs = np.array([[0.0, 1.0, 10.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        net = build_flow_network(Allocation(np.array([5.0, 2.0, 1.0])),
                                 Allocation(np.array([3.0, 2.0, 3.0])), costs, R=8.0)
        plan = min_cost_flow(net)
        assert plan.total_cost == pytest.approx(4.0, abs=1e-9)
        assert set((i, j) for i, j, _ in plan.flows) == {(0, 1), (1, 2)}

    def test_matches_lp_reference_on_random_slots(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            prev, target, costs, R = random_slot(rng)
            net = build_flow_network(prev, target, costs, R)
            plan = min_cost_flow(net)
            ref = min_cost_flow_lp_reference(net)
            assert plan.total_cost == pytest.approx(ref, rel=1e-6, abs=1e-9)
            assert plan.total_cost == pytest.approx(plan_cost(plan, costs), rel=1e-12,
                                                    abs=1e-12)

    def test_metric_costs_never_use_multi_hop(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            prev, target, costs, R = random_slot(rng, metric=True)
            net = build_flow_network(prev, target, costs, R)
            plan = min_cost_flow(net)
            surplus = set(net.surplus.tolist())
            deficit = set(net.deficit.tolist())
            for i, j, _ in plan.flows:
                assert i in surplus and j in deficit

    def test_zero_cost_iff_prev_covers_deficits(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            prev, target, costs, R = random_slot(rng)
            net = build_flow_network(prev, target, costs, R)
            plan = min_cost_flow(net)
            covered = bool(np.all(prev.r >= target.r - 1e-9))
            assert (plan.total_cost == 0.0) == covered


class TestApplyTransfers:
    def test_empty_plan_is_identity(self):
        prev = Allocation(np.array([2.0, 3.0]))
        out = apply_transfers(prev, TransferPlan((), 0.0))
        assert np.array_equal(out.r, prev.r)

    def test_two_node_balance(self):
        prev = Allocation(np.array([5.0, 1.0]))
        out = apply_transfers(prev, TransferPlan(((0, 1, 2.0),), 3.0))
        assert np.allclose(out.r, [3.0, 3.0])

    def test_retained_surplus(self):
        # surplus 3 at node 0, deficits total 2: node 0 keeps 1 above target
        prev = Allocation(np.array([6.0, 1.0, 1.0]))
        target = Allocation(np.array([3.0, 2.0, 2.0]))
        net = build_flow_network(prev, target, np.zeros((3, 3)), R=8.0)
        realized = apply_transfers(prev, min_cost_flow(net))
        assert realized.r[0] == pytest.approx(4.0, abs=1e-9)
        assert np.all(realized.r >= target.r - 1e-9)

    def test_conservation_on_random_slots(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            prev, target, costs, R = random_slot(rng)
            net = build_flow_network(prev, target, costs, R)
            realized = apply_transfers(prev, min_cost_flow(net))
            assert float(realized.r.sum()) == pytest.approx(float(prev.r.sum()), abs=1e-9)
            deficit = net.deficit
            assert np.all(realized.r[deficit] >= target.r[deficit] - 1e-9)


class TestTransferSolver:
    def test_identical_to_fresh_network_solve(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            prev, target, costs, R = random_slot(rng)
            plan_a = min_cost_flow(build_flow_network(prev, target, costs, R))
            plan_b = TransferSolver(costs, R).plan(prev, target)
            assert plan_a.flows == plan_b.flows
            assert plan_a.total_cost == plan_b.total_cost

    def test_reusable_across_slots(self):
        rng = np.random.default_rng(13)
        costs = rng.uniform(0.1, 2.0, (4, 4))
        np.fill_diagonal(costs, 0.0)
        solver = TransferSolver(costs, R=20.0)
        prev = Allocation(rng.uniform(2, 5, 4))
        for _ in range(5):
            target = rng.uniform(2, 5, 4)
            target *= prev.r.sum() / target.sum()
            target = Allocation(target)
            plan = solver.plan(prev, target)
            ref = min_cost_flow(build_flow_network(prev, target, costs, 20.0))
            assert plan.flows == ref.flows
            prev = apply_transfers(prev, plan)


class TestBackends:
    def test_numpy_and_numba_agree_bitwise(self):
        if kernels.active_backend() != "numba":
            pytest.skip("numba backend unavailable")
        rng = np.random.default_rng(53)
        for _ in range(25):
            prev, target, costs, R = random_slot(rng)
            net = build_flow_network(prev, target, costs, R)
            plan_nb = min_cost_flow(net)
            previous = kernels.set_backend("numpy")
            try:
                plan_np = min_cost_flow(net)
            finally:
                kernels.set_backend(previous)
            assert plan_nb.flows == plan_np.flows
            assert plan_nb.total_cost == plan_np.total_cost

    def test_backend_switching(self):
        previous = kernels.set_backend("numpy")
        assert kernels.active_backend() == "numpy"
        kernels.set_backend(previous)
        with pytest.raises(ValueError):
            kernels.set_backend("cuda")
