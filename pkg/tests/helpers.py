"""Shared fixtures and random instance generators for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from multreward.graph import mecs, sccs
from multreward.model import Model, build_model, load_model

MODELS = Path(__file__).resolve().parent.parent / "models"
REWARDS = [Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)]


def fixture(name: str) -> Model:
    return load_model(MODELS / f"{name}.json")


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.json")


def _random_dist(rng: random.Random, targets: list[int]) -> dict[int, Fraction]:
    k = rng.randint(1, min(3, len(targets)))
    chosen = rng.sample(targets, k)
    weights = [rng.randint(1, 4) for _ in chosen]
    total = sum(weights)
    return {t: Fraction(w, total) for t, w in zip(chosen, weights)}


def random_absorbing_mdp(rng: random.Random, max_states: int = 5, max_actions: int = 2) -> Model:
    """Random MDP whose only end components are absorbing states.

    Every action of a non-absorbing state puts positive probability on a state of
    larger index, so the largest non-absorbing state of any candidate end component
    can always leave it.  Back edges are allowed, so values may still diverge.
    """
    n = rng.randint(2, max_states)
    n_abs = rng.randint(1, min(2, n - 1))
    first_abs = n - n_abs
    names = [f"s{i}" for i in range(n)]
    states = []
    for i in range(n):
        if i >= first_abs:
            r = rng.choices(REWARDS, weights=[1, 1, 6, 1, 1])[0]
        else:
            r = rng.choice(REWARDS)
        states.append((names[i], r))
    transitions = {}
    for i in range(n):
        if i >= first_abs:
            transitions[(names[i], "loop")] = {names[i]: 1}
            continue
        for a in range(rng.randint(1, max_actions)):
            forward = rng.choice(range(i + 1, n))
            others = [t for t in range(n) if t != forward]
            dist = _random_dist(rng, others) if rng.random() < 0.7 else {}
            p_fwd = Fraction(rng.randint(1, 3), 4) if dist else Fraction(1)
            full = {forward: p_fwd}
            for t, p in dist.items():
                full[t] = full.get(t, 0) + p * (1 - p_fwd)
            transitions[(names[i], f"a{a}")] = {names[t]: p for t, p in full.items()}
    return build_model(states, transitions, names[0])


def only_absorbing_ecs(m: Model) -> bool:
    return all(len(c.states) == 1 and m.is_absorbing(next(iter(c.states))) for c in mecs(m))


def one_cycle_ring(rng: random.Random, size: int, prefix: str = "e"):
    """Strongly connected chain on ``size`` states in which every cycle has product 1.

    States sit on layers arranged in a ring; a state's successors all lie on the next
    layer, and rewards are ratios of per-layer potentials.  Returns (names, rewards,
    successor distributions) or None when the sampled graph is not strongly connected.
    """
    layers = rng.randint(1, size)
    layer_of = [i % layers for i in range(size)]
    rng.shuffle(layer_of)
    if len(set(layer_of)) != layers:
        return None
    pot = [Fraction(rng.choice([1, 2, 3, 4, 6, 8]), rng.choice([1, 2, 3])) for _ in range(layers)]
    names = [f"{prefix}{i}" for i in range(size)]
    rewards, dists = [], []
    for i in range(size):
        nxt = (layer_of[i] + 1) % layers
        rewards.append(pot[layer_of[i]] / pot[nxt])
        cands = [j for j in range(size) if layer_of[j] == nxt]
        d = _random_dist(rng, cands)
        dists.append({names[j]: p for j, p in d.items()})
    chain = build_model(
        list(zip(names, rewards)), {(names[i], "b"): dists[i] for i in range(size)}, names[0], prune=False
    )
    if len(sccs(chain)) != 1:
        return None
    return names, rewards, dists


def random_strongly_connected_chain(rng: random.Random, max_states: int = 8) -> Model:
    """Either a ring of 1-cycles or a random chain with rewards that often multiply to 1."""
    while True:
        n = rng.randint(1, max_states)
        if rng.random() < 0.5:
            ring = one_cycle_ring(rng, n)
            if ring is None:
                continue
            names, rewards, dists = ring
            if rng.random() < 0.3:
                # perturb one reward: this usually creates an n-cycle
                k = rng.randrange(n)
                rewards = list(rewards)
                rewards[k] *= rng.choice([2, 3, Fraction(1, 2)])
            return build_model(list(zip(names, rewards)), {(names[i], "b"): dists[i] for i in range(n)}, names[0])
        names = [f"c{i}" for i in range(n)]
        rewards = [rng.choice([Fraction(1, 2), Fraction(1), Fraction(2)]) for _ in range(n)]
        trans = {}
        for i in range(n):
            succ = _random_dist(rng, list(range(n)))
            trans[(names[i], "b")] = {names[j]: p for j, p in succ.items()}
        m = build_model(list(zip(names, rewards)), trans, names[0], prune=False)
        if len(sccs(m)) == 1:
            return m


def random_spider_instance(rng: random.Random):
    """MDP with an embedded non-gambling BSCC E plus exits; returns (model, bscc map, centre)."""
    while True:
        size = rng.randint(2, 3)
        ring = one_cycle_ring(rng, size)
        if ring is None:
            continue
        names, rewards, dists = ring
        n_abs = rng.randint(1, 4 - size)
        sinks = [(f"z{k}", rng.choice([Fraction(0), Fraction(1), Fraction(1), Fraction(1, 2)])) for k in range(n_abs)]
        # one transient state outside E, leading to the sinks only
        w = ("w", rng.choice(REWARDS))
        states = [("init", Fraction(1))] + list(zip(names, rewards)) + [w] + sinks
        sink_names = [z for z, _ in sinks]
        trans = {("init", "go"): {rng.choice(names): 1}}
        for i, name in enumerate(names):
            trans[(name, "b")] = dists[i]
        for z in sink_names:
            trans[(z, "stay")] = {z: 1}
        trans[("w", "go")] = {z: Fraction(1, len(sink_names)) for z in sink_names}
        exits = 0
        outside = sink_names + ["w"]
        for name in names:
            for k in range(rng.randint(0, 2)):
                d = _random_dist(rng, list(range(len(outside))))
                trans[(name, f"x{k}")] = {outside[j]: p for j, p in d.items()}
                exits += 1
        if exits == 0:
            continue
        m = build_model(states, trans, "init", prune=False)
        bscc = {m.index[name]: m.action_index(m.index[name], "b") for name in names}
        center = rng.choice(sorted(bscc))
        return m, bscc, center
