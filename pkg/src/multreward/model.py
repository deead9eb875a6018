"""MDP / Markov chain representation, the JSON model format, and reward transforms.

A model file is a JSON object::

    {
      "states": [{"name": "good", "reward": "13/10"}, {"name": "bad", "reward": "3/4"}],
      "transitions": [
        {"from": "good", "action": "a",
         "to": [{"target": "good", "prob": "1/2"}, {"target": "bad", "prob": "1/2"}]},
        ...
      ],
      "initial": "good"
    }

Rewards and probabilities are integers or ``"p/q"`` strings; floats and
decimal strings are rejected so that parsing stays bit-exact.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Union

from .exactnum import as_rational, format_rational

ExtendedValue = Union[Fraction, float]
"""A non-negative Fraction, or ``math.inf``."""

INF = math.inf

# scheduler: state name -> action name
MdScheduler = dict


class ModelError(ValueError):
    """Invalid model input; ``where`` locates the offending part of the document."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class AnalysisMode(str, enum.Enum):
    SUP = "sup"
    INF = "inf"

    def swapped(self) -> "AnalysisMode":
        return AnalysisMode.INF if self is AnalysisMode.SUP else AnalysisMode.SUP


def is_infinite(v: ExtendedValue) -> bool:
    return v == INF


def format_value(v: ExtendedValue) -> str:
    return "inf" if is_infinite(v) else format_rational(v)


def parse_value(text: str) -> ExtendedValue:
    return INF if text == "inf" else as_rational(text)


@dataclass(frozen=True)
class Action:
    name: str
    dist: tuple[tuple[int, Fraction], ...]

    @property
    def targets(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.dist)


@dataclass(frozen=True)
class Model:
    """States are dense indices ``0..n-1``; ``names`` carries the labels.

    ``auxiliary`` marks states introduced by transformations (they are never
    used as spider centres and are dropped when reporting results).
    """

    names: tuple[str, ...]
    rewards: tuple[Fraction, ...]
    actions: tuple[tuple[Action, ...], ...]
    initial: int = 0
    auxiliary: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.names)
        if len(self.rewards) != n or len(self.actions) != n:
            raise ModelError("names, rewards and actions must have equal length")
        if len(set(self.names)) != n:
            raise ModelError("state names must be unique")
        if not 0 <= self.initial < n:
            raise ModelError("initial state out of range")
        for s, (name, r, acts) in enumerate(zip(self.names, self.rewards, self.actions)):
            if r < 0:
                raise ModelError("negative reward", f"state {name}")
            if not acts:
                raise ModelError("no enabled action", f"state {name}")
            if len({a.name for a in acts}) != len(acts):
                raise ModelError("duplicate action name", f"state {name}")
            for a in acts:
                if not a.dist:
                    raise ModelError("empty distribution", f"state {name}, action {a.name}")
                if any(p <= 0 for _, p in a.dist):
                    raise ModelError("probabilities must be positive", f"state {name}, action {a.name}")
                if any(not 0 <= t < n for t, _ in a.dist):
                    raise ModelError("unknown successor", f"state {name}, action {a.name}")
                if len({t for t, _ in a.dist}) != len(a.dist):
                    raise ModelError("duplicate successor", f"state {name}, action {a.name}")
                if sum(p for _, p in a.dist) != 1:
                    raise ModelError(
                        f"probabilities sum to {sum(p for _, p in a.dist)}, not 1",
                        f"state {name}, action {a.name}",
                    )

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def action_index(self, s: int, name: str) -> int:
        for i, a in enumerate(self.actions[s]):
            if a.name == name:
                return i
        raise KeyError(f"state {self.names[s]} has no action {name!r}")

    def successors(self, s: int) -> set[int]:
        return {t for a in self.actions[s] for t, _ in a.dist}

    def is_markov_chain(self) -> bool:
        return all(len(acts) == 1 for acts in self.actions)

    def is_absorbing(self, s: int) -> bool:
        return all(a.dist == ((s, Fraction(1)),) for a in self.actions[s])

    def num_actions(self) -> int:
        return sum(len(acts) for acts in self.actions)

    def original_states(self) -> list[int]:
        return [s for s in range(self.n) if s not in self.auxiliary]

    def induced_chain(self, scheduler: Mapping[str, str]) -> "Model":
        """Markov chain obtained by fixing ``scheduler`` (state name -> action name)."""
        acts = []
        for s in range(self.n):
            choice = scheduler.get(self.names[s])
            a = self.actions[s][self.action_index(s, choice) if choice is not None else 0]
            acts.append((a,))
        return Model(self.names, self.rewards, tuple(acts), self.initial, self.auxiliary)

    def with_rewards(self, rewards) -> "Model":
        return Model(self.names, tuple(rewards), self.actions, self.initial, self.auxiliary)

    def reachable(self, start: int | None = None) -> set[int]:
        start = self.initial if start is None else start
        seen = {start}
        queue = deque([start])
        while queue:
            s = queue.popleft()
            for t in self.successors(s):
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return seen

    def restrict(self, keep) -> "Model":
        """Sub-model on ``keep`` (must be closed under all actions and contain the initial state)."""
        keep = sorted(keep)
        remap = {s: i for i, s in enumerate(keep)}
        acts = []
        for s in keep:
            acts.append(tuple(Action(a.name, tuple((remap[t], p) for t, p in a.dist)) for a in self.actions[s]))
        return Model(
            tuple(self.names[s] for s in keep),
            tuple(self.rewards[s] for s in keep),
            tuple(acts),
            remap[self.initial],
            frozenset(remap[s] for s in self.auxiliary if s in remap),
        )

    def prune_unreachable(self) -> "Model":
        reach = self.reachable()
        return self if len(reach) == self.n else self.restrict(reach)


def build_model(
    states: list[tuple[str, object]],
    transitions: Mapping[tuple[str, str], Mapping[str, object]],
    initial: str,
    *,
    prune: bool = True,
) -> Model:
    """Programmatic constructor: ``transitions[(state, action)] = {target: prob}``."""
    names = tuple(name for name, _ in states)
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise ModelError("state names must be unique")
    acts: list[list[Action]] = [[] for _ in names]
    for (src, act), dist in transitions.items():
        if src not in index:
            raise ModelError(f"unknown state {src!r}")
        pairs = []
        for tgt, p in dist.items():
            if tgt not in index:
                raise ModelError(f"unknown state {tgt!r}", f"{src}/{act}")
            pairs.append((index[tgt], as_rational(p)))
        acts[index[src]].append(Action(act, tuple(sorted(pairs))))
    if initial not in index:
        raise ModelError(f"unknown initial state {initial!r}")
    m = Model(names, tuple(as_rational(r) for _, r in states), tuple(tuple(a) for a in acts), index[initial])
    return m.prune_unreachable() if prune else m


def _rational(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise ModelError("floats are not allowed; use an integer or a \"p/q\" string", where)
    try:
        return as_rational(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ModelError(str(exc), where) from None


def _require(obj, keys: set[str], where: str, optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ModelError("expected an object", where)
    missing = keys - obj.keys()
    if missing:
        raise ModelError(f"missing field(s) {sorted(missing)}", where)
    extra = obj.keys() - keys - optional
    if "reward" in extra:
        raise ModelError("transition rewards are not supported; rewards are per state", where)
    if extra:
        raise ModelError(f"unknown field(s) {sorted(extra)}", where)


def parse_model(text: str) -> Model:
    """Parse and validate a model document; unreachable states are pruned."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    _require(doc, {"states", "transitions", "initial"}, "document")
    if not isinstance(doc["states"], list) or not doc["states"]:
        raise ModelError("expected a non-empty array", "states")
    states = []
    seen = set()
    for i, st in enumerate(doc["states"]):
        where = f"states[{i}]"
        _require(st, {"name", "reward"}, where)
        name = st["name"]
        if not isinstance(name, str) or not name:
            raise ModelError("state name must be a non-empty string", where)
        if name in seen:
            raise ModelError(f"duplicate state {name!r}", where)
        seen.add(name)
        reward = _rational(st["reward"], where + ".reward")
        if reward < 0:
            raise ModelError("negative reward", where + ".reward")
        states.append((name, reward))
    if not isinstance(doc["transitions"], list):
        raise ModelError("expected an array", "transitions")
    transitions: dict[tuple[str, str], dict[str, Fraction]] = {}
    for i, tr in enumerate(doc["transitions"]):
        where = f"transitions[{i}]"
        _require(tr, {"from", "action", "to"}, where)
        src, act = tr["from"], tr["action"]
        if src not in seen:
            raise ModelError(f"unknown state {src!r}", where + ".from")
        if not isinstance(act, str) or not act:
            raise ModelError("action must be a non-empty string", where + ".action")
        if (src, act) in transitions:
            raise ModelError(f"duplicate action {act!r} for state {src!r}", where)
        if not isinstance(tr["to"], list) or not tr["to"]:
            raise ModelError("expected a non-empty array", where + ".to")
        dist: dict[str, Fraction] = {}
        for j, entry in enumerate(tr["to"]):
            w = f"{where}.to[{j}]"
            _require(entry, {"target", "prob"}, w)
            tgt = entry["target"]
            if tgt not in seen:
                raise ModelError(f"unknown state {tgt!r}", w + ".target")
            if tgt in dist:
                raise ModelError(f"duplicate target {tgt!r}", w)
            p = _rational(entry["prob"], w + ".prob")
            if p <= 0 or p > 1:
                raise ModelError("probability must lie in (0, 1]", w + ".prob")
            dist[tgt] = p
        total = sum(dist.values())
        if total != 1:
            raise ModelError(f"probabilities sum to {format_rational(total)}, not 1", where)
        transitions[(src, act)] = dist
    for name, _ in states:
        if not any(src == name for src, _ in transitions):
            raise ModelError(f"state {name!r} has no enabled action", "transitions")
    initial = doc["initial"]
    if initial not in seen:
        raise ModelError(f"unknown state {initial!r}", "initial")
    return build_model(states, transitions, initial)


def model_to_dict(m: Model) -> dict:
    return {
        "states": [{"name": n, "reward": format_rational(r)} for n, r in zip(m.names, m.rewards)],
        "transitions": [
            {
                "from": m.names[s],
                "action": a.name,
                "to": [{"target": m.names[t], "prob": format_rational(p)} for t, p in a.dist],
            }
            for s in range(m.n)
            for a in m.actions[s]
        ],
        "initial": m.names[m.initial],
    }


def serialize_model(m: Model) -> str:
    return json.dumps(model_to_dict(m), indent=2)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


SINK_ACTION = "sink"


def zero_reward_preprocess(m: Model) -> tuple[Model, frozenset[str]]:
    """Make reward-0 states absorbing and drop what becomes unreachable.

    Returns the new model and the names of the zero-reward states kept in it.
    """
    if all(r != 0 for r in m.rewards):
        return m, frozenset()
    out = absorb_zero_rewards(m).prune_unreachable()
    return out, frozenset(out.names[s] for s in range(out.n) if out.rewards[s] == 0)


def absorb_zero_rewards(m: Model) -> Model:
    """Give every reward-0 state a single self-loop; state indices are unchanged."""
    acts = list(m.actions)
    changed = False
    for s in range(m.n):
        if m.rewards[s] == 0 and not (len(m.actions[s]) == 1 and m.is_absorbing(s)):
            acts[s] = (Action(SINK_ACTION, ((s, Fraction(1)),)),)
            changed = True
    return Model(m.names, m.rewards, tuple(acts), m.initial, m.auxiliary) if changed else m


def invert_rewards(m: Model) -> Model:
    """Replace every reward by its reciprocal (all rewards must be positive)."""
    if any(r == 0 for r in m.rewards):
        raise ModelError("cannot invert a zero reward; minimisation with zero rewards is unsupported")
    return m.with_rewards(1 / r for r in m.rewards)
