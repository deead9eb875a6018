"""Removal of non-gambling max-BSCCs by re-homing their exits at a centre state."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..mc import AllOneCycles, one_cycle_analysis
from ..model import Action, AnalysisMode, Model, ModelError

STAY = "stay"
CENTER = "center"
AUX_ACTION = "go"


class SpiderPreconditionError(ModelError):
    pass


def tau_name(t: str, beta: str) -> str:
    return f"tau[{t}:{beta}]"


@dataclass(frozen=True)
class SpiderRecord:
    """What one application changed, in state/action names, for translating schedulers back."""

    center: str
    bscc: tuple[tuple[str, str], ...]  # (state, action B(state)) pairs
    taus: tuple[tuple[str, str, str], ...]  # (tau action name, state t, original action beta)
    stay_reward: Fraction | None
    value: Fraction | None
    aux_states: tuple[str, ...]

    def translate(self, scheduler: Mapping[str, str]) -> dict[str, str]:
        """Scheduler on the transformed model -> scheduler on the model before this step."""
        out = {s: a for s, a in scheduler.items() if s not in self.aux_states}
        members = dict(self.bscc)
        choice = out.get(self.center)
        for t, b in members.items():
            out[t] = b
        for name, t, beta in self.taus:
            if name == choice:
                out[t] = beta
                break
        return out

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "states": [s for s, _ in self.bscc],
            "stay_reward": None if self.stay_reward is None else str(self.stay_reward),
            "value": None if self.value is None else str(self.value),
            "rehomed_actions": len(self.taus),
        }


def _fresh(names: set[str], base: str) -> str:
    name, k = base, 1
    while name in names:
        k += 1
        name = f"{base}~{k}"
    names.add(name)
    return name


def spider_remove(
    m: Model,
    bscc: Mapping[int, int],
    center: int,
    mode: AnalysisMode | None,
    *,
    tag: str = "",
) -> tuple[Model, SpiderRecord]:
    """Apply the construction to ``bscc`` (state -> action index) around ``center``.

    ``mode`` selects the value of the stay action (max or min path product);
    ``None`` omits the stay action and the fresh bottom state altogether.
    """
    if center not in bscc:
        raise SpiderPreconditionError("centre must belong to the BSCC")
    if center in m.auxiliary:
        raise SpiderPreconditionError("centre must be a state of the original model")
    members = sorted(bscc)
    sub_states = set(members)
    for s in members:
        if any(t not in sub_states for t, _ in m.actions[s][bscc[s]].dist):
            raise SpiderPreconditionError("the given actions do not form a closed component")
    # the BFS only follows B, so restrict each member to its BSCC action
    restricted = Model(
        m.names,
        m.rewards,
        tuple((m.actions[s][bscc[s]],) if s in sub_states else m.actions[s] for s in range(m.n)),
        m.initial,
        m.auxiliary,
    )
    structure = one_cycle_analysis(restricted, center, members)
    if not isinstance(structure, AllOneCycles) or set(structure.table) != sub_states:
        raise SpiderPreconditionError("the component contains a cycle whose reward product is not 1")
    # R(center, t) and R(t, center) = 1 / R(center, t)
    r_from = structure.table
    rc = m.rewards[center]

    names = list(m.names)
    rewards = list(m.rewards)
    actions: list[tuple[Action, ...]] = list(m.actions)
    aux = set(m.auxiliary)
    taken = set(names)

    def add_state(base: str, reward: Fraction, acts: tuple[Action, ...], auxiliary=True) -> int:
        idx = len(names)
        names.append(_fresh(taken, base))
        rewards.append(reward)
        actions.append(acts)
        if auxiliary:
            aux.add(idx)
        return idx

    def via(base: str, reward: Fraction, dist) -> tuple:
        """Route ``dist`` through a fresh intermediate state carrying ``reward``."""
        mid = add_state(base, reward, (Action(AUX_ACTION, tuple(dist)),))
        return ((mid, Fraction(1)),)

    new_aux_start = len(names)
    center_acts: list[Action] = []
    value = stay_reward = None
    if mode is not None:
        row = list(r_from.values())
        value = max(row) if mode is AnalysisMode.SUP else min(row)
        stay_reward = value / rc
        bot = len(names)
        bot_name = _fresh(taken, f"#bot{tag}")
        names.append(bot_name)
        rewards.append(Fraction(1))
        actions.append((Action("loop", ((bot, Fraction(1)),)),))
        aux.add(bot)
        center_acts.append(Action(STAY, via(f"#{tag}{m.names[center]}:stay", stay_reward, [(bot, Fraction(1))])))

    taus = []
    for t in members:
        for b, beta in enumerate(m.actions[t]):
            if b == bscc[t]:
                continue
            name = tau_name(m.names[t], beta.name)
            reward = r_from[t] * m.rewards[t] / rc
            center_acts.append(Action(name, via(f"#{tag}{m.names[center]}:{name}", reward, beta.dist)))
            taus.append((name, m.names[t], beta.name))
    if not center_acts:
        raise SpiderPreconditionError("the component has no exit and no stay action was requested")

    for t in members:
        if t == center:
            continue
        reward = (1 / r_from[t]) / m.rewards[t]
        actions[t] = (Action(CENTER, via(f"#{tag}{m.names[t]}:center", reward, [(center, Fraction(1))])),)
    actions[center] = tuple(center_acts)

    out = Model(tuple(names), tuple(rewards), tuple(actions), m.initial, frozenset(aux))
    record = SpiderRecord(
        center=m.names[center],
        bscc=tuple((m.names[s], m.actions[s][bscc[s]].name) for s in members),
        taus=tuple(taus),
        stay_reward=stay_reward,
        value=value,
        aux_states=tuple(names[i] for i in range(new_aux_start, len(names))),
    )
    return out, record
