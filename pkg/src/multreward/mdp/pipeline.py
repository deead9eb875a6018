"""MDP optimisation: EC preprocessing, LP1, scheduler extraction and back-translation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from ..exactnum import Sign, as_rational
from ..graph import attractor_choice, can_reach_set, mecs, reach_set, sccs
from ..linalg import LinearProgram, lp_solve
from ..model import (
    INF,
    SINK_ACTION,
    Action,
    AnalysisMode,
    ExtendedValue,
    MdScheduler,
    Model,
    absorb_zero_rewards,
    format_value,
    invert_rewards,
)
from .ecs import (
    DEFAULT_ENUM_CAP,
    MecClassification,
    bscc_log_mp,
    enumerate_bsccs,
    find_nongambling_bscc,
    mec_log_mp_classify,
)
from .spider import SpiderRecord, spider_remove


@dataclass
class Preprocessed:
    """Model satisfying the LP1 assumptions on its finite part, plus what it took to get there."""

    model: Model
    spiders: list[SpiderRecord]
    verdicts: list[MecClassification]
    infinite: set[int]
    witnesses: list[dict]
    collapsed: list[str] = field(default_factory=list)
    normalized: list[str] = field(default_factory=list)
    # state -> action index realising an infinite value, where an MD choice does so
    infinite_choice: dict[int, int] = field(default_factory=dict)


def _verdict_dict(m: Model, v: MecClassification) -> dict:
    out = {
        "states": [m.names[s] for s in sorted(v.component.states)],
        "sign": v.sign.name.lower(),
    }
    if v.sign is Sign.ZERO and not v.absorbing:
        out["gambling_bsccs"] = len(v.gambling_bsccs)
        out["nongambling_bsccs"] = len(v.nongambling_bsccs)
    return out


def _realise(m: Model, choice: Mapping[int, int], region: set[int]) -> dict[int, int]:
    """Play ``choice`` inside its states and steer every other state of ``region`` there."""
    out = dict(choice)
    out.update(attractor_choice(m, set(choice), region - set(choice)))
    return out


def preprocess_ecs(
    m: Model,
    mode: AnalysisMode,
    *,
    cap: int = DEFAULT_ENUM_CAP,
    stay: bool = True,
) -> Preprocessed:
    """Remove non-gambling max-BSCCs and settle every state whose value is decided by an EC.

    With ``stay=False`` (shortest-path variant) no bottom state is added and every
    remaining zero-sign end component counts as infinite, as in the limsup case.
    """
    bound = m.num_actions()
    spiders: list[SpiderRecord] = []
    while True:
        verdicts = [mec_log_mp_classify(m, c, cap) for c in mecs(m)]
        found = None
        for v in verdicts:
            if v.sign is Sign.ZERO and not v.absorbing:
                found = find_nongambling_bscc(m, v)
                if found is not None:
                    break
        if found is None:
            break
        assert len(spiders) < bound, "spider construction exceeded its iteration bound"
        center = min(s for s in found if s not in m.auxiliary)
        m, rec = spider_remove(m, found, center, mode if stay else None, tag=str(len(spiders) + 1))
        spiders.append(rec)

    sources: dict[int, dict] = {}
    realise: list[tuple[dict[int, int], set[int]]] = []
    collapse: list[MecClassification] = []
    for v in verdicts:
        states = set(v.component.states)
        names = [m.names[s] for s in sorted(states)]
        if v.sign is Sign.POSITIVE:
            w = {"kind": "positive-mec", "states": names}
            if v.absorbing:
                (s,) = states
                choice = {s: min(v.a_max[s])}
            else:
                choice = _best_choice(m, v)
            realise.append((choice, states))
        elif v.sign is Sign.ZERO and not v.absorbing:
            if mode is AnalysisMode.INF and stay:
                exits = {t for t in range(m.n) if m.is_absorbing(t) and m.rewards[t] == 1}
                if not (reach_set(m, states) & exits):
                    collapse.append(v)
                    continue
                w = {
                    "kind": "gamble-and-exit",
                    "states": names,
                    "description": (
                        "inside the component, play until the accumulated product exceeds 4^i, "
                        "then move to an absorbing reward-1 state; the value grows without bound in i"
                    ),
                }
            else:
                choice = v.gambling_bsccs[0] if v.gambling_bsccs else _best_choice(m, v)
                w = {"kind": "gambling-bscc", "states": [m.names[s] for s in sorted(choice)]}
                realise.append((choice, states))
        else:
            continue
        for s in states:
            sources.setdefault(s, w)
    infinite = can_reach_set(m, sources)
    witnesses = []
    seen = set()
    for w in sources.values():
        if id(w) not in seen:
            seen.add(id(w))
            witnesses.append(w)
    infinite_choice: dict[int, int] = {}
    for choice, states in realise:
        region = can_reach_set(m, states) - set(infinite_choice)
        infinite_choice.update(_realise(m, choice, region | set(choice)))

    verdict_log = verdicts
    collapsed: list[str] = []
    acts = list(m.actions)
    rewards = list(m.rewards)
    for v in collapse:
        for s in v.component.states:
            if s in infinite:
                continue
            acts[s] = (Action(SINK_ACTION, ((s, Fraction(1)),)),)
            rewards[s] = Fraction(0)
            collapsed.append(m.names[s])
    normalized = []
    for s in range(m.n):
        if s not in infinite and m.is_absorbing(s) and 0 < rewards[s] < 1:
            rewards[s] = Fraction(0)
            normalized.append(m.names[s])
    if collapsed or normalized:
        m = Model(m.names, tuple(rewards), tuple(acts), m.initial, m.auxiliary)
    return Preprocessed(m, spiders, verdict_log, infinite, witnesses, collapsed, normalized, infinite_choice)


def _best_choice(m: Model, v: MecClassification) -> dict[int, int]:
    """Some BSCC attaining the MEC's maximal log mean payoff."""
    for choice in enumerate_bsccs(m, v.component):
        value = bscc_log_mp(m, choice)
        if value is not None and v.best is not None and value.compare(v.best) is Sign.ZERO:
            return choice
    raise AssertionError("no BSCC attains the recorded maximum")


def _lp_values(m: Model, unknown: list[int], known: Mapping[int, ExtendedValue]) -> dict[int, Fraction] | None:
    pos = {s: i for i, s in enumerate(unknown)}
    k = len(unknown)
    ge = []
    for s in unknown:
        r = m.rewards[s]
        for a in m.actions[s]:
            row = [Fraction(0)] * k
            row[pos[s]] += 1
            const = Fraction(0)
            for t, p in a.dist:
                if t in pos:
                    row[pos[t]] -= r * p
                else:
                    const += r * p * known[t]
            ge.append((row, const))
    res = lp_solve(LinearProgram([Fraction(1)] * k, ge=ge))
    if not res.feasible:
        return None
    return {s: res.x[pos[s]] for s in unknown}


def solve_lp1(m: Model, states: Iterable[int] | None = None) -> tuple[dict[int, ExtendedValue], str]:
    """Values from LP1 on a closed set of states whose only non-negative ECs are absorbing.

    Absorbing states must carry reward 0 or 1.  When the joint LP is infeasible the
    states are settled SCC by SCC, bottom-up, so that only diverging ones get infinity.
    """
    states = sorted(range(m.n) if states is None else states)
    value: dict[int, ExtendedValue] = {}
    unknown = []
    for s in states:
        if m.is_absorbing(s):
            assert m.rewards[s] in (0, 1), "absorbing rewards must be normalised to 0 or 1"
            value[s] = m.rewards[s]
        else:
            unknown.append(s)
    if not unknown:
        return value, "optimal"
    sol = _lp_values(m, unknown, value)
    if sol is not None:
        value.update(sol)
        return value, "optimal"
    unk = set(unknown)
    for comp in sccs(m, {s: range(len(m.actions[s])) for s in unknown}):
        members = sorted(comp.states)
        succ = {t for s in members for a in m.actions[s] for t, _ in a.dist if t not in comp.states}
        if any(value[t] == INF for t in succ):
            value.update(dict.fromkeys(members, INF))
            continue
        assert all(t not in unk or t in value for t in succ)
        part = _lp_values(m, members, value)
        value.update(part if part is not None else dict.fromkeys(members, INF))
    return value, "infeasible"


def tight_actions(m: Model, values: Mapping[int, ExtendedValue], s: int) -> list[int]:
    r = m.rewards[s]
    return [
        a
        for a, act in enumerate(m.actions[s])
        if r * sum((p * values[t] for t, p in act.dist), Fraction(0)) == values[s]
    ]


def extract_md_scheduler(m: Model, values: Mapping[int, ExtendedValue]) -> dict[int, int]:
    """Optimal MD choice on the finite-valued states of ``values``.

    Among actions whose LP1 constraint is tight, each positive-valued state takes
    the lowest-indexed one that moves closer to an absorbing reward-1 state, so
    the chain cannot get trapped in a tight but value-0 loop.
    """
    finite = [s for s, v in values.items() if v != INF]
    choice: dict[int, int] = {}
    goal = {s for s in finite if m.is_absorbing(s) and values[s] > 0}
    positive = [s for s in finite if values[s] > 0 and s not in goal]
    for s in finite:
        if s in goal or values[s] == 0:
            choice[s] = 0
    allowed = {s: tight_actions(m, values, s) for s in positive}
    for s in positive:
        if not allowed[s]:
            raise AssertionError(f"no tight action at state {m.names[s]}")
    attract = attractor_choice(m, goal, positive, allowed)
    missing = [m.names[s] for s in positive if s not in attract]
    if missing:
        raise AssertionError(f"tight actions do not lead to positive absorption from {missing}")
    choice.update(attract)
    return choice


def translate_back(
    scheduler: Mapping[str, str], spiders: list[SpiderRecord], original: Model
) -> MdScheduler:
    """Undo the spider steps in reverse order and fall back to the first action elsewhere."""
    sched = dict(scheduler)
    for rec in reversed(spiders):
        sched = rec.translate(sched)
    out = {}
    for s in range(original.n):
        name = original.names[s]
        valid = {a.name for a in original.actions[s]}
        chosen = sched.get(name)
        out[name] = chosen if chosen in valid else original.actions[s][0].name
    return out


@dataclass
class PipelineResult:
    values: dict[str, ExtendedValue]
    scheduler: MdScheduler
    # False when some state's value is not attained by any MD-scheduler we could build
    scheduler_optimal: bool
    witness: dict | None
    report: dict
    model: Model | None = None

    def value_at(self, name: str | None = None) -> ExtendedValue:
        if name is None:
            assert self.model is not None
            name = self.model.names[self.model.initial]
        return self.values[name]


def choice_names(m: Model, choice: Mapping[int, int]) -> dict[str, str]:
    return {m.names[s]: m.actions[s][a].name for s, a in choice.items()}


def mdp_values(m: Model, mode: AnalysisMode = AnalysisMode.SUP, *, cap: int = DEFAULT_ENUM_CAP) -> PipelineResult:
    """Optimal (supremum) values of every state, an MD-scheduler and a report."""
    base = absorb_zero_rewards(m)
    pre = preprocess_ecs(base, mode, cap=cap)
    work = pre.model
    finite = [s for s in range(work.n) if s not in pre.infinite]
    values, lp_status = solve_lp1(work, finite)
    divergent = [s for s in finite if values[s] == INF]
    witnesses = list(pre.witnesses)
    if divergent:
        witnesses.append(
            {"kind": "transient-divergence", "states": [work.names[s] for s in divergent if s not in work.auxiliary]}
        )
    for s in pre.infinite:
        values[s] = INF
    choice = extract_md_scheduler(work, {s: v for s, v in values.items() if v != INF})
    choice.update(pre.infinite_choice)
    optimal = all(s in choice for s in range(work.n) if values[s] == INF)
    scheduler = translate_back(choice_names(work, choice), pre.spiders, m)
    out_values = {name: values[work.index[name]] for name in m.names}

    witness = None
    init_name = m.names[m.initial]
    for w in witnesses:
        if out_values[init_name] == INF and _witness_reaches(work, w, m.initial):
            witness = w
            break
    if witness is None and witnesses:
        witness = witnesses[0]
    report = {
        "mecs": [_verdict_dict(work, v) for v in pre.verdicts],
        "spiders": [r.to_dict() for r in pre.spiders],
        "collapsed": pre.collapsed,
        "normalized": pre.normalized,
        "lp_status": lp_status,
        "infinite_states": [n for n in m.names if out_values[n] == INF],
    }
    if len(witnesses) > 1:
        report["witnesses"] = witnesses
    return PipelineResult(out_values, scheduler, optimal, witness, report, m)


def _witness_reaches(m: Model, w: dict, source: int) -> bool:
    targets = {m.index[n] for n in w["states"]}
    return bool(reach_set(m, [source]) & targets)


def threshold(m: Model, mode: AnalysisMode, theta, *, cap: int = DEFAULT_ENUM_CAP) -> bool:
    """Is the optimal value at the initial state at least ``theta``?"""
    theta = as_rational(theta)
    v = mdp_values(m, mode, cap=cap).value_at()
    return v == INF or v >= theta


def _reciprocal(v: ExtendedValue) -> ExtendedValue:
    if v == INF:
        return Fraction(0)
    if v == 0:
        return INF
    return 1 / v


def minimize_values(m: Model, mode: AnalysisMode, *, cap: int = DEFAULT_ENUM_CAP) -> PipelineResult:
    """Reward inversion: maximise with reciprocal rewards in the swapped mode, then invert back.

    For limsup/liminf of a single path the inversion is exact; the expectation of a
    reciprocal is not the reciprocal of an expectation, so for probabilistic branching
    the result is the inverse of the optimum of the inverted model, not the true minimum.
    """
    res = mdp_values(invert_rewards(m), mode.swapped(), cap=cap)
    res.values = {k: _reciprocal(v) for k, v in res.values.items()}
    res.report["minimize"] = "reciprocal of the optimum with inverted rewards and swapped mode"
    return res


def values_to_strings(values: Mapping[str, ExtendedValue]) -> dict[str, str]:
    return {k: format_value(v) for k, v in values.items()}
