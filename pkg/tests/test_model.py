import json

import numpy as np
import pytest
from hypothesis import given, strategies as stn

from defalloc.model import (
    Allocation,
    AttackTrace,
    InfeasibleError,
    Instance,
    NodeParams,
    Nodes,
    RiskParams,
    TransferPlan,
    damage,
    expected_damage,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    plan_cost,
    save_instance,
    slot_damage,
)


def make_instance(n=3, T=4, R=None, seed=0):
    rng = np.random.default_rng(seed)
    r_min = rng.uniform(1, 3, n)
    r_max = r_min + rng.uniform(2, 8, n)
    costs = rng.uniform(0.1, 2.0, (n, n))
    np.fill_diagonal(costs, 0.0)
    return Instance(
        n=n, T=T, R=float(R if R is not None else (r_min.sum() + r_max.sum()) / 2),
        nodes=Nodes(rng.uniform(0.5, 2, n), r_min, r_max),
        costs=costs, attack_probs=rng.uniform(0, 0.5, n), seed=seed,
    )


class TestNodeParams:
    def test_valid(self):
        p = NodeParams(w=1.5, r_min=2.0, r_max=10.0)
        assert p.span == 8.0

    def test_rejects_inverted_thresholds(self):
        with pytest.raises(ValueError):
            NodeParams(w=1.0, r_min=5.0, r_max=5.0)
        with pytest.raises(ValueError):
            NodeParams(w=1.0, r_min=-1.0, r_max=5.0)

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            NodeParams(w=-0.1, r_min=1.0, r_max=2.0)


class TestDamage:
    def test_linear_segment_midpoint(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert damage(node, 6.0, 1) == 0.5

    def test_above_safe_threshold(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert damage(node, 12.0, 1) == 0.0

    def test_no_attack_no_damage(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert damage(node, 1.0, 0) == 0.0

    def test_full_damage_at_or_below_minimum(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert damage(node, 2.0, 1) == 1.0
        assert damage(node, 0.5, 1) == 1.0

    def test_rejects_bad_inputs(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        with pytest.raises(ValueError):
            damage(node, -1.0, 1)
        with pytest.raises(ValueError):
            damage(node, 1.0, 2)

    @given(stn.floats(0.1, 20), stn.floats(0.1, 20), stn.floats(0, 40), stn.floats(0, 40))
    def test_nonincreasing_in_resource(self, r_min, gap, a, b):
        node = NodeParams(w=1.0, r_min=r_min, r_max=r_min + gap)
        lo, hi = min(a, b), max(a, b)
        assert damage(node, lo, 1) >= damage(node, hi, 1)
        assert 0.0 <= damage(node, a, 1) <= 1.0


class TestExpectedDamage:
    def test_at_minimum_equals_probability(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert expected_damage(node, 2.0, 0.3) == 0.3

    def test_zero_segment(self):
        node = NodeParams(w=1.0, r_min=2.0, r_max=10.0)
        assert expected_damage(node, 10.0, 0.9) == 0.0

    def test_middle_segment_hand_value(self):
        node = NodeParams(w=1.0, r_min=0.0, r_max=4.0)
        assert expected_damage(node, 1.0, 0.5) == 0.375

    @given(stn.floats(0, 1), stn.floats(0, 30))
    def test_bernoulli_linearity(self, p, r):
        node = NodeParams(w=2.0, r_min=1.0, r_max=9.0)
        assert expected_damage(node, r, p) == pytest.approx(p * damage(node, r, 1), abs=1e-15)

    @given(stn.floats(0, 1), stn.floats(0, 1))
    def test_nondecreasing_in_probability(self, a, b):
        node = NodeParams(w=1.0, r_min=1.0, r_max=5.0)
        lo, hi = min(a, b), max(a, b)
        assert expected_damage(node, 3.0, lo) <= expected_damage(node, 3.0, hi)


class TestSlotDamage:
    def setup_method(self):
        self.nodes = Nodes(np.array([1.0, 2.0]), np.array([2.0, 2.0]), np.array([10.0, 10.0]))

    def test_no_attacks(self):
        assert slot_damage(Allocation(np.array([3.0, 4.0])), np.zeros(2), self.nodes) == 0.0

    def test_fully_protected(self):
        assert slot_damage(Allocation(np.array([10.0, 10.0])), np.ones(2), self.nodes) == 0.0

    def test_weighted_sum_by_hand(self):
        # contributions 0.5 and 0.25 weighted by (1, 2)
        alloc = Allocation(np.array([6.0, 8.0]))
        assert slot_damage(alloc, np.ones(2), self.nodes) == pytest.approx(1.0, abs=1e-12)

    def test_linear_in_weights(self):
        alloc = Allocation(np.array([5.0, 6.0]))
        y = np.array([1, 1])
        base = slot_damage(alloc, y, self.nodes)
        doubled = Nodes(self.nodes.w * 2, self.nodes.r_min, self.nodes.r_max)
        assert slot_damage(alloc, y, doubled) == pytest.approx(2 * base, rel=1e-12)


class TestPlanCost:
    costs = np.array([[0.0, 1.5], [2.0, 0.0]])

    def test_empty_plan(self):
        assert plan_cost(TransferPlan((), 0.0), self.costs) == 0.0

    def test_single_flow(self):
        assert plan_cost(TransferPlan(((0, 1, 2.0),), 3.0), self.costs) == 3.0

    def test_additivity(self):
        plan = TransferPlan(((0, 1, 2.0), (1, 0, 1.0)), 5.0)
        assert plan_cost(plan, self.costs) == 3.0 + 2.0

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            plan_cost(TransferPlan(((0, 5, 1.0),), 0.0), self.costs)

    def test_rejects_negative_amount(self):
        with pytest.raises(ValueError):
            TransferPlan(((0, 1, -1.0),), 0.0)


class TestInstance:
    def test_rejects_budget_below_minimums(self):
        with pytest.raises(InfeasibleError):
            make_instance(R=1.0)

    def test_rejects_nonzero_diagonal(self):
        inst = make_instance()
        costs = inst.costs.copy()
        costs[0, 0] = 1.0
        with pytest.raises(ValueError):
            Instance(n=inst.n, T=inst.T, R=inst.R, nodes=inst.nodes, costs=costs,
                     attack_probs=inst.attack_probs, seed=0)

    def test_rejects_bad_probabilities(self):
        inst = make_instance()
        with pytest.raises(ValueError):
            Instance(n=inst.n, T=inst.T, R=inst.R, nodes=inst.nodes, costs=inst.costs,
                     attack_probs=np.array([0.5, 1.5, 0.1]), seed=0)

    def test_json_round_trip(self, tmp_path):
        inst = make_instance(n=4, seed=3)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded.n == inst.n and loaded.T == inst.T and loaded.R == inst.R
        assert np.array_equal(loaded.costs, inst.costs)
        assert np.array_equal(loaded.attack_probs, inst.attack_probs)
        assert np.array_equal(loaded.nodes.w, inst.nodes.w)
        # byte-stable serialization
        save_instance(loaded, tmp_path / "again.json")
        assert (tmp_path / "inst.json").read_bytes() == (tmp_path / "again.json").read_bytes()

    def test_from_dict_missing_field(self):
        data = instance_to_dict(make_instance())
        del data["costs"]
        with pytest.raises(ValueError):
            instance_from_dict(data)


class TestAttackTrace:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            AttackTrace(np.array([[0, 2]]))

    def test_empty_trace_allowed(self):
        assert AttackTrace(np.zeros((0, 3))).T == 0


class TestRiskParams:
    def test_kappa_values(self):
        assert RiskParams(0.5).kappa == pytest.approx(1.0, abs=1e-15)
        assert RiskParams(0.2).kappa == pytest.approx(2.0, abs=1e-12)

    def test_kappa_decreasing_in_alpha(self):
        alphas = [0.01, 0.05, 0.1, 0.25, 0.5, 0.9]
        kappas = [RiskParams(a).kappa for a in alphas]
        assert all(kappas[i] > kappas[i + 1] for i in range(len(kappas) - 1))

    def test_rejects_boundary(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                RiskParams(bad)
