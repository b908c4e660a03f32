import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridop.benchmarks import ConstantRewardModel, LinearModel
from hybridop.hybrid_sets import CONTINUOUS, DISCRETE, DwellState, Interval, SetNode, dwell_of, is_dwell_valid
from hybridop.planners import (
    Planner,
    PlannerConfig,
    PlanningProblem,
    Variant,
    fallback_action,
    plan,
    receding_horizon_run,
    select_step_and_type,
)

from conftest import CountingModel


def linear_problem(Delta=2, **kw):
    return PlanningProblem(LinearModel(), M=3, Delta=Delta, gamma=0.8, L_f=0.6, L_rho=1.0, **kw)


def bare(modes=(), intervals=()):
    return SetNode(0, None, 0, tuple(intervals), tuple(modes), dwell_of(modes))


def test_select_step_examples():
    p = PlanningProblem(ConstantRewardModel(), M=3, Delta=2, gamma=0.5, L_f=0.5, L_rho=1.0)
    assert select_step_and_type(bare(), p) == (DISCRETE, 0)
    assert select_step_and_type(bare((0,)), p) == (DISCRETE, 1)  # lambda_0 = 1 ties the tail
    p3 = PlanningProblem(ConstantRewardModel(), M=3, Delta=2, gamma=0.5, L_f=0.5, L_rho=3.0)
    assert select_step_and_type(bare((0,)), p3) == (CONTINUOUS, 0)


def test_step_tie_goes_to_earliest():
    # L_f = 0 makes lambda_k = L_rho a_k gamma^k; equal after refining step 0 once
    p = PlanningProblem(ConstantRewardModel(), M=2, Delta=1, gamma=0.5, L_f=0.0, L_rho=10.0)
    n = bare((0, 0), (Interval(0, 1, 2), Interval(0, 0, 2)))
    assert select_step_and_type(n, p) == (CONTINUOUS, 0)


def _set_bounds(pl, bounds):
    pl._bheap.clear()
    for node, B in bounds:
        node.v, node.delta = 0.0, B
        pl._index(node)


def test_ophis_select_prefers_bound_then_depth():
    pl = Planner(PlanningProblem(ConstantRewardModel()), PlannerConfig(Variant.OPHIS, 100), 0.0)
    assert pl.ophis_select() is pl.root
    a, b = pl.expand(pl.root)
    _set_bounds(pl, [(a, 4.2), (b, 3.9)])
    assert pl.ophis_select() is a
    # equal bounds: the deeper node wins
    c, d = pl.expand(b, (DISCRETE, 1))
    _set_bounds(pl, [(a, 4.2), (c, 4.2), (d, 1.0)])
    assert pl.ophis_select() is c


def test_expand_costs():
    pl = Planner(linear_problem(), PlannerConfig(Variant.OPHIS, 100), 0.0)
    kids = pl.expand(pl.root)
    assert len(kids) == 2 and pl.ledger.used == 2
    a, b = pl.expand(kids[0], (DISCRETE, 1))  # modes (0,0), (0,1)
    used = pl.ledger.used
    (forced,) = pl.expand(b, (DISCRETE, 2))
    assert pl.ledger.used - used == 1
    used = pl.ledger.used
    assert len(pl.expand(a, (CONTINUOUS, 0))) == 3  # D=2: two re-simulated children, two steps each
    assert pl.ledger.used - used == 4
    assert forced.dwell == DwellState(1, 2, True)


def test_middle_child_reuse_toggle():
    for reuse, cost in [(True, 2), (False, 3)]:
        pl = Planner(linear_problem(), PlannerConfig(Variant.OPHIS, 100, reuse_middle_child=reuse), 0.0)
        (k0, _) = pl.expand(pl.root)
        before = pl.ledger.used
        kids = pl.expand(k0, (CONTINUOUS, 0))
        assert pl.ledger.used - before == cost
        assert kids[1].v == pytest.approx(k0.v, abs=1e-15)


def test_unaffordable_split_leaves_tree_untouched():
    pl = Planner(linear_problem(), PlannerConfig(Variant.OPHIS, 1), 0.0)
    assert pl.expand(pl.root) is None
    assert len(pl.nodes) == 1 and pl.ledger.used == 0 and not pl.root.expanded


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(0, 300),
    Delta=st.integers(1, 3),
    variant=st.sampled_from(list(Variant)),
    reuse=st.booleans(),
)
def test_budget_is_exact(n, Delta, variant, reuse):
    model = CountingModel(LinearModel())
    prob = PlanningProblem(model, M=3, Delta=Delta, gamma=0.8, L_f=0.6, L_rho=1.0)
    res = plan(prob, PlannerConfig(variant, n, reuse_middle_child=reuse), 0.1)
    assert model.calls == res.diagnostics.budget_used <= n


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 400), Delta=st.integers(1, 4), variant=st.sampled_from(list(Variant)), run=st.integers(1, 3))
def test_returned_actions_are_dwell_valid(n, Delta, variant, run):
    initial = DwellState(1, min(run, Delta), True)
    res = plan(linear_problem(Delta, initial_dwell=initial), PlannerConfig(variant, n), 0.0)
    assert is_dwell_valid([d for _, d in res.actions], Delta, initial)


def test_determinism():
    a = Planner(linear_problem(), PlannerConfig(Variant.SOPHIS, 500), 0.0)
    b = Planner(linear_problem(), PlannerConfig(Variant.SOPHIS, 500), 0.0)
    ra, rb = a.run(), b.run()
    assert ra.actions == rb.actions and ra.v_star == rb.v_star and ra.delta_min == rb.delta_min
    assert [(n.modes, n.intervals) for n in a.nodes] == [(n.modes, n.intervals) for n in b.nodes]


def test_ophis_expands_maximal_bound():
    pl = Planner(linear_problem(), PlannerConfig(Variant.OPHIS, 800), 0.0)
    pl.run()
    # replay: at each step the expanded node beat every leaf open at that time
    order = {nid: i for i, nid in enumerate(pl.expansion_log)}
    for step, nid in enumerate(pl.expansion_log):
        bound = pl.nodes[nid].B
        for other in pl.nodes:
            created_before = other.parent is None or order.get(other.parent, math.inf) < step
            still_open = order.get(other.id, math.inf) > step
            if other.id != nid and created_before and still_open:
                assert bound >= other.B - 1e-12


@pytest.mark.parametrize("variant", list(Variant))
def test_budget_monotonicity_linear(variant):
    cfg = lambda n: PlannerConfig(variant, n, h_max=6 if variant is Variant.SOPHIS else None)
    results = [plan(linear_problem(), cfg(n), 0.0) for n in (100, 400, 1600)]
    for r1, r2 in zip(results, results[1:]):
        assert r2.v_star >= r1.v_star - 1e-12
        assert r2.delta_min <= r1.delta_min + 1e-12


def test_sophis_stops_at_h_max():
    pl = Planner(linear_problem(), PlannerConfig(Variant.SOPHIS, 10**6, h_max=3), 0.0)
    res = pl.run()
    assert res.diagnostics.budget_used < 10**6
    assert all(n.depth < 3 for n in pl.nodes if n.expanded)
    assert pl.sophis_sweep(3) == 0


def test_sophis_sweep_skips_closed_depth():
    pl = Planner(linear_problem(), PlannerConfig(Variant.SOPHIS, 10**6, h_max=5), 0.0)
    first = pl.sophis_sweep(5)
    assert pl.expansion_log[0] == 0 and pl.nodes[pl.expansion_log[1]].depth == 1
    assert first == 5  # one expansion per depth 0..4
    assert pl.smallest_open_depth() == 1
    for depth in (1, 2):
        while (node := pl._peek_v(depth)) is not None:
            pl.expand(node)
    assert pl.smallest_open_depth() == 3
    start = len(pl.expansion_log)
    pl.sophis_sweep(5)
    assert [pl.nodes[i].depth for i in pl.expansion_log[start:]] == [3, 4]


def test_h_max_default():
    assert PlannerConfig(n=8).resolved_h_max() == 2
    assert PlannerConfig(n=20000).resolved_h_max() == 28
    assert PlannerConfig(n=1000, epsilon=0.25).resolved_h_max() == 6


def test_constant_reward_value():
    prob = PlanningProblem(ConstantRewardModel(), gamma=0.8, L_f=1.0, L_rho=1.0)
    for variant in Variant:
        res = plan(prob, PlannerConfig(variant, 50), 0.0)
        D = len(res.actions)
        assert res.v_star == pytest.approx((1 - 0.8**D) / 0.2)


def test_zero_budget_warns():
    res = plan(linear_problem(), PlannerConfig(Variant.OPHIS, 0), 0.0)
    assert res.actions == [] and res.delta_min == pytest.approx(5.0)
    assert res.diagnostics.warning is not None


def test_single_step_episode_matches_plan():
    prob = linear_problem()
    cfg = PlannerConfig(Variant.SOPHIS, 300)
    ep = receding_horizon_run(prob, cfg, 0.0, 1)
    res = plan(prob, cfg, 0.0)
    c, d = res.actions[0]
    x1, r = prob.model.step(0.0, c, d)
    assert (ep.records[0].c, ep.records[0].mode, ep.records[0].reward) == (c, d, r)
    assert ep.final_state == x1


def test_episode_keeps_dwell_across_plans():
    prob = linear_problem(Delta=3)
    ep = receding_horizon_run(prob, PlannerConfig(Variant.SOPHIS, 200), 0.9, 25)
    assert is_dwell_valid(ep.modes, 3)


def test_fallback_action():
    assert fallback_action(DwellState()) == (0.5, 0)
    assert fallback_action(DwellState(1, 2, True)) == (0.5, 1)
    ep = receding_horizon_run(linear_problem(initial_dwell=DwellState(1, 1, True)), PlannerConfig(n=0), 0.0, 2)
    assert ep.modes == [1, 1]


def test_delta_one_is_unconstrained():
    prob = PlanningProblem(LinearModel(), M=3, Delta=1, gamma=0.8, L_f=0.6, L_rho=0.0)
    pl = Planner(prob, PlannerConfig(Variant.OPHIS, 500), 0.0)
    pl.run()
    for nid, kids in pl.children.items():
        assert pl.nodes[nid].split[0] == DISCRETE
        assert len(kids) == 2


def test_problem_validation():
    with pytest.raises(ValueError):
        PlanningProblem(LinearModel(), gamma=0.8, L_f=1.3)
    with pytest.raises(ValueError):
        PlanningProblem(LinearModel(), Delta=0)
    with pytest.raises(ValueError):
        PlannerConfig(n=-1)
