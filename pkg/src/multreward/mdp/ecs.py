"""Logarithmic mean-payoff classification of end components, A^max and A*."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from ..exactnum import ResourceError, Sign, SymbolicLogValue
from ..graph import Component, attractor_choice, bottom_sccs, mecs
from ..linalg import LinearSystem, solve_square
from ..mc import AllOneCycles, log_mean_payoff, one_cycle_analysis
from ..model import Action, Model

DEFAULT_ENUM_CAP = 1 << 20

ActionMap = dict[int, frozenset[int]]


class BsccKind(str, enum.Enum):
    GAMBLING = "gambling"
    NON_GAMBLING = "non-gambling"


@dataclass
class MecClassification:
    component: Component
    sign: Sign
    a_max: ActionMap
    best: SymbolicLogValue | None = None
    # each entry maps state -> the single action it uses in that BSCC
    gambling_bsccs: list[dict[int, int]] = field(default_factory=list)
    nongambling_bsccs: list[dict[int, int]] = field(default_factory=list)
    schedulers_checked: int = 0
    absorbing: bool = False


def _absorbing_singleton(m: Model, comp: Component) -> bool:
    if len(comp.states) != 1:
        return False
    (s,) = comp.states
    return m.is_absorbing(s)


def bscc_log_mp(m: Model, choice: Mapping[int, int]) -> SymbolicLogValue | None:
    """Log mean payoff of the closed set ``choice`` (None when a reward is 0)."""
    if any(m.rewards[s] == 0 for s in choice):
        return None
    return log_mean_payoff(_choice_chain(m, choice))[0]


def _choice_chain(m: Model, choice: Mapping[int, int]) -> Model:
    """The closed sub-chain on ``choice``'s states, renumbered 0..k-1 in sorted order."""
    states = sorted(choice)
    remap = {s: i for i, s in enumerate(states)}
    acts = []
    for s in states:
        a = m.actions[s][choice[s]]
        acts.append((Action(a.name, tuple((remap[t], p) for t, p in a.dist)),))
    return Model(tuple(m.names[s] for s in states), tuple(m.rewards[s] for s in states), tuple(acts))


def enumerate_bsccs(m: Model, comp: Component, cap: int = DEFAULT_ENUM_CAP):
    """Yield the distinct BSCCs (as state -> action maps) induced by MD-schedulers on ``comp``."""
    states = sorted(comp.states)
    options = [sorted(comp.internal_actions[s]) for s in states]
    total = 1
    for o in options:
        total *= len(o)
    if total > cap:
        raise ResourceError(f"{total} MD-schedulers in an end component of {len(states)} states exceed the cap {cap}")
    seen = set()
    for combo in itertools.product(*options):
        choice = dict(zip(states, combo))
        allowed = {s: [a] for s, a in choice.items()}
        for b in bottom_sccs(m, allowed):
            key = frozenset((s, choice[s]) for s in b.states)
            if key not in seen:
                seen.add(key)
                yield {s: choice[s] for s in sorted(b.states)}


def mec_log_mp_classify(m: Model, mec: Component, cap: int = DEFAULT_ENUM_CAP) -> MecClassification:
    """Maximal log mean payoff over MD-schedulers of ``mec``, its sign and A^max."""
    if _absorbing_singleton(m, mec):
        (s,) = mec.states
        r = m.rewards[s]
        sign = Sign.NEGATIVE if r == 0 else Sign.of(r - 1)
        acts = frozenset(mec.internal_actions[s])
        best = SymbolicLogValue(((Fraction(1), r),)) if r else None
        cls = MecClassification(mec, sign, {s: acts}, best, schedulers_checked=1, absorbing=True)
        if sign is Sign.ZERO:
            cls.nongambling_bsccs.append({s: min(acts)})
        return cls
    best: SymbolicLogValue | None = None
    best_sets: list[dict[int, int]] = []
    count = 0
    for choice in enumerate_bsccs(m, mec, cap):
        count += 1
        value = bscc_log_mp(m, choice)
        if value is None:
            continue
        if best is None:
            best, best_sets = value, [choice]
            continue
        cmp = value.compare(best)
        if cmp is Sign.POSITIVE:
            best, best_sets = value, [choice]
        elif cmp is Sign.ZERO:
            best_sets.append(choice)
    sign = Sign.NEGATIVE if best is None else best.sign()
    a_max: dict[int, set[int]] = {}
    for choice in best_sets:
        for s, a in choice.items():
            a_max.setdefault(s, set()).add(a)
    cls = MecClassification(mec, sign, {s: frozenset(a) for s, a in a_max.items()}, best)
    cls.schedulers_checked = count
    if sign is Sign.ZERO:
        for choice in best_sets:
            kind = classify_choice(m, choice)
            (cls.nongambling_bsccs if kind is BsccKind.NON_GAMBLING else cls.gambling_bsccs).append(choice)
    return cls


def classify_choice(m: Model, choice: Mapping[int, int]) -> BsccKind:
    """Cycle structure of a zero-mean-payoff BSCC, decided by the 1-cycle BFS."""
    sub = _choice_chain(m, choice)
    res = one_cycle_analysis(sub, 0)
    return BsccKind.NON_GAMBLING if isinstance(res, AllOneCycles) else BsccKind.GAMBLING


def max_ecs(m: Model, cls: MecClassification) -> list[Component]:
    """End components of the MEC restricted to A^max actions."""
    return mecs(m, cls.a_max)


def expected_visits(m: Model, states, choice: Mapping[int, int], x: int) -> dict[int, dict[int, Fraction]]:
    """``evt[s][u]``: expected visits to ``u`` starting from ``s`` before first reaching ``x``."""
    rest = sorted(set(states) - {x})
    pos = {s: i for i, s in enumerate(rest)}
    k = len(rest)
    mat = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
    for s in rest:
        for t, p in m.actions[s][choice[s]].dist:
            if t in pos:
                mat[pos[s]][pos[t]] -= p
    evt: dict[int, dict[int, Fraction]] = {s: {} for s in rest}
    for u in rest:
        rhs = [Fraction(int(s == u)) for s in rest]
        col = solve_square(LinearSystem(mat, rhs))
        for s in rest:
            if col[pos[s]]:
                evt[s][u] = col[pos[s]]
    return evt


def log_potential(
    m: Model, states, allowed: Mapping[int, frozenset[int]], x: int | None = None
) -> dict[int, SymbolicLogValue]:
    """Q(u, x): expected sum of log-rewards collected from ``u`` until ``x`` is reached."""
    states = sorted(states)
    x = states[0] if x is None else x
    choice = attractor_choice(m, {x}, states, allowed)
    missing = set(states) - set(choice) - {x}
    if missing:
        raise ValueError("target state is not reachable from every state of the component")
    evt = expected_visits(m, states, choice, x)
    q = {x: SymbolicLogValue()}
    for s, row in evt.items():
        q[s] = SymbolicLogValue(tuple((c, m.rewards[u]) for u, c in sorted(row.items())))
    return q


def compute_Astar(
    m: Model, states, allowed: Mapping[int, frozenset[int]], x: int | None = None
) -> dict[int, frozenset[int]]:
    """Actions of a zero-mean-payoff strongly connected sub-MDP whose successors share one potential."""
    q = log_potential(m, states, allowed, x)
    out = {}
    for s in sorted(states):
        keep = set()
        for a in sorted(allowed.get(s, ())):
            succ = [t for t, _ in m.actions[s][a].dist]
            if all(q[succ[0]].compare(q[t]) is Sign.ZERO for t in succ[1:]):
                keep.add(a)
        if keep:
            out[s] = frozenset(keep)
    return out


def classify_max_bscc(choice: Mapping[int, int], a_star: Mapping[int, frozenset[int]]) -> BsccKind:
    ok = all(a in a_star.get(s, ()) for s, a in choice.items())
    return BsccKind.NON_GAMBLING if ok else BsccKind.GAMBLING


def find_nongambling_bscc(m: Model, cls: MecClassification) -> dict[int, int] | None:
    """Some non-gambling max-BSCC of a zero-sign MEC, or None if all are gambling."""
    for ec in max_ecs(m, cls):
        a_star = compute_Astar(m, ec.states, ec.internal_actions)
        for sub in mecs(m, a_star):
            first = {s: min(sub.internal_actions[s]) for s in sub.states}
            for b in bottom_sccs(m, {s: [a] for s, a in first.items()}):
                choice = {s: first[s] for s in sorted(b.states)}
                if classify_choice(m, choice) is BsccKind.NON_GAMBLING:
                    return choice
    return None
