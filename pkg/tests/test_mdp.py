import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fixture, one_cycle_ring, random_absorbing_mdp, random_spider_instance
from multreward.exactnum import ResourceError, Sign
from multreward.graph import mecs
from multreward.mc import mc_values
from multreward.mdp import (
    BsccKind,
    classify_max_bscc,
    compute_Astar,
    extract_md_scheduler,
    mdp_values,
    mec_log_mp_classify,
    preprocess_ecs,
    solve_lp1,
    spider_remove,
    threshold,
)
from multreward.mdp.spider import CENTER, STAY, SpiderPreconditionError, tau_name
from multreward.model import INF, AnalysisMode, build_model
from multreward.sim import bellman_step, enumerate_md_values, value_iteration_oracle

F = Fraction
SUP, INF_MODE = AnalysisMode.SUP, AnalysisMode.INF


def loop_model(reward):
    return build_model([("a", reward)], {("a", "x"): {"a": 1}}, "a")


def mec_named(m, *names):
    want = {m.index[n] for n in names}
    return next(c for c in mecs(m) if c.states == want)


def inf_special_without_exit():
    return build_model(
        [("s1", 2), ("s2", F(1, 2)), ("s3", 1)],
        {("s1", "a"): {"s1": F(1, 2), "s2": F(1, 2)}, ("s2", "a"): {"s1": F(1, 2), "s2": F(1, 2)}, ("s3", "a"): {"s3": 1}},
        "s1",
    )


# --- MEC classification -------------------------------------------------------


def test_absorbing_mecs():
    one = loop_model(1)
    cls = mec_log_mp_classify(one, mecs(one)[0])
    assert cls.sign is Sign.ZERO and cls.a_max == {0: {0}}
    two = loop_model(2)
    assert mec_log_mp_classify(two, mecs(two)[0]).sign is Sign.POSITIVE


def test_inf_special_mec():
    m = fixture("inf_special")
    cls = mec_log_mp_classify(m, mec_named(m, "s1", "s2"))
    assert cls.sign is Sign.ZERO
    s1, s2 = m.index["s1"], m.index["s2"]
    assert cls.a_max == {s1: {m.action_index(s1, "a")}, s2: {m.action_index(s2, "a")}}
    assert len(cls.gambling_bsccs) == 1 and not cls.nongambling_bsccs


def test_enumeration_cap():
    m = fixture("inf_special")
    with pytest.raises(ResourceError):
        mec_log_mp_classify(m, mec_named(m, "s1", "s2"), cap=0)


# --- A* ----------------------------------------------------------------------


def test_astar_inf_special():
    m = fixture("inf_special")
    comp = mec_named(m, "s1", "s2")
    for x in comp.states:
        a_star = compute_Astar(m, comp.states, comp.internal_actions, x)
        assert a_star == {}
    choice = {s: next(iter(a)) for s, a in comp.internal_actions.items()}
    assert classify_max_bscc(choice, {}) is BsccKind.GAMBLING


def test_astar_dirac_and_ring():
    m = build_model(
        [("a", F(1, 8)), ("b", 2), ("c", 4)],
        {("a", "x"): {"b": 1}, ("b", "x"): {"c": 1}, ("c", "x"): {"a": 1}},
        "a",
    )
    comp = mecs(m)[0]
    for x in range(3):
        a_star = compute_Astar(m, comp.states, comp.internal_actions, x)
        assert a_star == {s: {0} for s in range(3)}
    assert classify_max_bscc({s: 0 for s in range(3)}, a_star) is BsccKind.NON_GAMBLING
    one = loop_model(1)
    assert classify_max_bscc({0: 0}, compute_Astar(one, {0}, {0: {0}})) is BsccKind.NON_GAMBLING


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_astar_independent_of_target(seed):
    rng = random.Random(seed)
    ring = None
    while ring is None:
        ring = one_cycle_ring(rng, rng.randint(2, 5))
    names, rewards, dists = ring
    trans = {(n, "b"): dists[i] for i, n in enumerate(names)}
    # a second action that usually breaks the 1-cycle property
    trans[(names[0], "g")] = {names[0]: F(1, 2), names[-1]: F(1, 2)}
    m = build_model(list(zip(names, rewards)), trans, names[0], prune=False)
    cls = mec_log_mp_classify(m, mecs(m)[0])
    if cls.sign is not Sign.ZERO:
        return
    for ec in mecs(m, cls.a_max):
        results = {
            frozenset(compute_Astar(m, ec.states, ec.internal_actions, x).items()) for x in sorted(ec.states)
        }
        assert len(results) == 1
        a_star = compute_Astar(m, ec.states, ec.internal_actions)
        for s in ec.states:
            b = m.action_index(s, "b")
            if b in ec.internal_actions[s]:
                assert b in a_star[s]


# --- spider ------------------------------------------------------------------


def spider_fixture():
    m = fixture("spider")
    bscc = {m.index[n]: m.action_index(m.index[n], "b") for n in ("s", "t", "u")}
    return m, bscc


def aux_reward(m, state, action):
    (mid, _), = m.actions[state][m.action_index(state, action)].dist
    return m.rewards[mid]


def test_spider_figure_rewards():
    m, bscc = spider_fixture()
    t = m.index["t"]
    out, rec = spider_remove(m, bscc, t, SUP)
    assert rec.value == 8 and rec.stay_reward == 4
    assert aux_reward(out, t, STAY) == 4
    assert aux_reward(out, out.index["s"], CENTER) == 1
    assert aux_reward(out, t, tau_name("s", "x")) == F(1, 2)
    assert len(rec.taus) == 3
    assert all(len(out.actions[out.index[n]]) == 1 for n in ("s", "u"))


def test_spider_inf_mode_stay():
    m, bscc = spider_fixture()
    _, rec = spider_remove(m, bscc, m.index["t"], INF_MODE)
    assert rec.value == 1 and rec.stay_reward == F(1, 2)


def test_spider_without_stay():
    m, bscc = spider_fixture()
    out, rec = spider_remove(m, bscc, m.index["t"], None)
    assert rec.stay_reward is None
    assert STAY not in {a.name for a in out.actions[out.index["t"]]}


def test_spider_rejects_n_cycles():
    m = fixture("inf_special")
    with pytest.raises(SpiderPreconditionError):
        spider_remove(m, {0: 0, 1: 0}, 0, SUP)


def test_spider_preserves_fixture_value():
    m, bscc = spider_fixture()
    out, _ = spider_remove(m, bscc, m.index["t"], SUP)
    assert enumerate_md_values(m) == enumerate_md_values(out) == mdp_values(m).value_at()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_spider_value_preservation(seed):
    m, bscc, center = random_spider_instance(random.Random(seed))
    out, rec = spider_remove(m, bscc, center, SUP)
    before, sched = enumerate_md_values(m, with_scheduler=True)
    assert enumerate_md_values(out) == before
    res = mdp_values(m)
    assert res.value_at() == before
    assert len(res.report["spiders"]) <= m.num_actions()
    if before != INF:
        assert mc_values(m.induced_chain(res.scheduler))[0]["init"] == before


# --- preprocessing and LP1 ------------------------------------------------------


def test_preprocess_inf_special_inf_mode():
    pre = preprocess_ecs(fixture("inf_special"), INF_MODE)
    assert pre.model.initial in pre.infinite
    assert pre.witnesses[0]["kind"] == "gamble-and-exit"


def test_preprocess_collapses_without_exit():
    m = inf_special_without_exit()
    pre = preprocess_ecs(m, INF_MODE)
    assert not pre.infinite
    assert set(pre.collapsed) == {"s1", "s2"}
    assert mdp_values(m, INF_MODE).values == {"s1": 0, "s2": 0}
    assert mdp_values(m, SUP).value_at() == INF


def test_preprocess_contrast_unchanged():
    m = fixture("contrast")
    pre = preprocess_ecs(m, SUP)
    assert pre.model == m and not pre.spiders and not pre.infinite
    assert [len(v.component.states) for v in pre.verdicts] == [1]


def test_lp1_examples():
    div = fixture("divergence")
    values, status = solve_lp1(div)
    assert status == "infeasible" and values[div.index["s1"]] == INF
    assert solve_lp1(loop_model(1))[0] == {0: 1}


def test_extract_contrast():
    m = fixture("contrast")
    values, _ = solve_lp1(m)
    choice = extract_md_scheduler(m, values)
    s1 = m.index["s1"]
    assert m.actions[s1][choice[s1]].name == "a"
    assert mdp_values(m).scheduler["s1"] == "a"


def test_single_action_scheduler():
    m = fixture("divergence")
    assert mdp_values(m).scheduler == {"s1": "a", "s2": "a"}


def test_pipeline_examples():
    for mode in AnalysisMode:
        assert mdp_values(fixture("contrast"), mode).value_at() == 6
        assert mdp_values(fixture("plant"), mode).value_at() == 0
    res = mdp_values(fixture("inf_special"), SUP)
    assert res.value_at() == INF and res.witness["kind"] == "gambling-bscc"


def test_threshold():
    m = fixture("contrast")
    assert threshold(m, SUP, 6)
    assert not threshold(m, SUP, F(13, 2))
    assert threshold(fixture("plant"), SUP, 0)


def test_lp1_is_bellman_fixed_point_and_least():
    m = fixture("contrast")
    values, _ = solve_lp1(m)
    x = {m.names[s]: v for s, v in values.items()}
    assert bellman_step(m, x) == x
    iterates = value_iteration_oracle(m, 100)
    assert all(it[k] <= x[k] for it in iterates for k in x)
    # geometric series at s2: sum 2^i (3/5)(2/5)^(i-1)
    s2 = [it["s2"] for it in iterates]
    assert s2 == sorted(s2) and s2[-1] < 6 and 6 - s2[-1] < F(1, 10**6)


# --- random MDPs --------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_mdp_properties(seed):
    m = random_absorbing_mdp(random.Random(seed))
    sup = mdp_values(m, SUP)
    inf = mdp_values(m, INF_MODE)
    for name in m.names:
        assert inf.values[name] <= sup.values[name]
    best = enumerate_md_values(m)
    if best != INF and sup.value_at() != INF:
        assert sup.value_at() == best
        assert mc_values(m.induced_chain(sup.scheduler))[0][m.names[m.initial]] == best
    # MD values never exceed the supremum
    assert best <= sup.value_at()


def md_insufficiency_example():
    """Every MD-scheduler is worth at most 1/80, yet mixing a0 and a1 at s2 diverges."""
    return build_model(
        [("s0", F(1, 3)), ("s1", 3), ("s2", 1), ("s3", F(1, 3)), ("s4", 1)],
        {
            ("s0", "a0"): {"s0": F(3, 28), "s2": F(1, 7), "s3": F(3, 4)},
            ("s1", "a0"): {"s1": F(3, 10), "s2": F(1, 2), "s3": F(1, 5)},
            ("s2", "a0"): {"s0": F(1, 4), "s3": F(1, 2), "s4": F(1, 4)},
            ("s2", "a1"): {"s0": F(1, 8), "s1": F(1, 16), "s2": F(1, 16), "s3": F(3, 4)},
            ("s3", "loop"): {"s3": 1},
            ("s4", "loop"): {"s4": 1},
        },
        "s0",
    )


def counting_scheduler_chain(m, k):
    """Play a1 at s2 for the first k visits, a0 afterwards."""
    states, trans = [], {}
    for c in range(k + 1):
        for s in range(m.n):
            states.append((f"{m.names[s]}#{c}", m.rewards[s]))
    for c in range(k + 1):
        for s, name in enumerate(m.names):
            if name == "s2":
                act = m.actions[s][m.action_index(s, "a1" if c < k else "a0")]
                nxt = min(c + 1, k)
            else:
                act, nxt = m.actions[s][0], c
            trans[(f"{name}#{c}", "go")] = {f"{m.names[t]}#{nxt}": p for t, p in act.dist}
    return build_model(states, trans, "s0#0")


def test_md_schedulers_insufficient_for_transient_divergence():
    m = md_insufficiency_example()
    assert enumerate_md_values(m) == F(1, 80)
    assert mdp_values(m).value_at() == INF
    values = [mc_values(counting_scheduler_chain(m, k))[0]["s0#0"] for k in (0, 5, 20)]
    assert values[0] == F(1, 80)
    assert values[0] < values[1] < values[2]
    # the optimality operator grows without bound from 0
    x = {n: 0.0 for n in m.names}
    for _ in range(3000):
        x = bellman_step(m, x, exact=False)
    assert x["s0"] > 1
