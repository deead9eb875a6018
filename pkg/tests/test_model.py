import json
import random
from fractions import Fraction

import pytest

from helpers import fixture, random_absorbing_mdp
from multreward.mdp import mdp_values, minimize_values
from multreward.model import (
    AnalysisMode,
    ModelError,
    build_model,
    invert_rewards,
    parse_model,
    serialize_model,
    zero_reward_preprocess,
)
from multreward.sim import enumerate_md_values

F = Fraction


def doc(states, transitions, initial):
    return json.dumps({"states": states, "transitions": transitions, "initial": initial})


def edge(src, act, *targets):
    return {"from": src, "action": act, "to": [{"target": t, "prob": p} for t, p in targets]}


def test_parse_plant():
    m = fixture("plant")
    assert m.n == 2 and m.is_markov_chain()
    assert m.rewards == (F(13, 10), F(3, 4))
    assert all(len(a) == 1 for a in m.actions)


def test_probability_sum_error():
    text = doc([{"name": "a", "reward": 1}], [edge("a", "x", ("a", "9/10"))], "a")
    with pytest.raises(ModelError, match="sum"):
        parse_model(text)


def test_single_absorbing_state():
    m = parse_model(doc([{"name": "a", "reward": 1}], [edge("a", "loop", ("a", 1))], "a"))
    assert m.n == 1 and m.is_absorbing(0)


@pytest.mark.parametrize(
    "text, where",
    [
        ('{"states": [', "line 1"),
        (doc([{"name": "a", "reward": 1}], [edge("a", "x", ("b", 1))], "a"), "transitions[0].to[0].target"),
        (doc([{"name": "a", "reward": -1}], [edge("a", "x", ("a", 1))], "a"), "states[0].reward"),
        (doc([{"name": "a", "reward": 1}, {"name": "b", "reward": 1}], [edge("a", "x", ("b", 1))], "a"), "transitions"),
        (doc([{"name": "a", "reward": 0.5}], [edge("a", "x", ("a", 1))], "a"), "states[0].reward"),
        (doc([{"name": "a", "reward": "1/2"}], [edge("a", "x", ("a", "0.5"))], "a"), "transitions[0].to[0].prob"),
    ],
)
def test_parse_errors_are_located(text, where):
    with pytest.raises(ModelError) as info:
        parse_model(text)
    assert info.value.where.startswith(where)


def test_unreachable_states_pruned():
    m = parse_model(
        doc(
            [{"name": "a", "reward": 1}, {"name": "b", "reward": 2}],
            [edge("a", "x", ("a", 1)), edge("b", "x", ("a", 1))],
            "a",
        )
    )
    assert m.names == ("a",)


def test_zero_reward_preprocess_chain():
    m = build_model(
        [("a", 1), ("b", 0), ("c", 2)],
        {("a", "x"): {"b": 1}, ("b", "x"): {"c": 1}, ("c", "x"): {"c": 1}},
        "a",
    )
    out, zeroed = zero_reward_preprocess(m)
    assert out.names == ("a", "b")
    assert out.is_absorbing(out.index["b"])
    assert zeroed == {"b"}


def test_zero_reward_preprocess_unchanged_and_idempotent():
    m = fixture("contrast")
    assert zero_reward_preprocess(m)[0] is m
    z = build_model([("a", 0), ("b", 1)], {("a", "x"): {"b": 1}, ("b", "x"): {"b": 1}}, "a")
    once, _ = zero_reward_preprocess(z)
    assert zero_reward_preprocess(once)[0] == once


def test_invert_rewards():
    m = build_model([("a", 2), ("b", F(1, 2))], {("a", "x"): {"b": 1}, ("b", "x"): {"a": 1}}, "a")
    assert invert_rewards(m).rewards == (F(1, 2), F(2))
    plant = fixture("plant")
    assert invert_rewards(plant).rewards == (F(10, 13), F(4, 3))
    assert invert_rewards(invert_rewards(plant)) == plant


def test_invert_rejects_zero():
    m = build_model([("a", 0)], {("a", "x"): {"a": 1}}, "a")
    with pytest.raises(ModelError):
        invert_rewards(m)


def test_minimize_plant_matches_enumeration():
    plant = fixture("plant")
    for mode in AnalysisMode:
        got = minimize_values(plant, mode).value_at()
        inverted = enumerate_md_values(invert_rewards(plant), mode.swapped())
        expected = 0 if inverted == float("inf") else 1 / inverted
        assert got == expected


@pytest.mark.parametrize("name", ["plant", "contrast", "inf_special", "spider", "infinitely_many"])
def test_round_trip_fixtures(name):
    m = fixture(name)
    assert parse_model(serialize_model(m)) == m


def test_round_trip_random():
    rng = random.Random(7)
    for _ in range(50):
        m = random_absorbing_mdp(rng)
        assert parse_model(serialize_model(m)) == m


def test_induced_chain_and_markov_predicate():
    m = fixture("contrast")
    assert not m.is_markov_chain()
    c = m.induced_chain({"s1": "b"})
    assert c.is_markov_chain()
    assert c.actions[c.index["s1"]][0].name == "b"
    with pytest.raises(KeyError):
        m.induced_chain({"s1": "zzz"})


def test_contrast_minimum_is_reciprocal_transform():
    # the reciprocal transform is not the true minimum once branching is probabilistic
    m = fixture("contrast")
    res = minimize_values(m, AnalysisMode.SUP)
    assert res.value_at() == F(8, 3)
    assert mdp_values(m).value_at() == 6
