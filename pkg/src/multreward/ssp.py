"""Multiplicative stochastic shortest path: optimise among schedulers reaching a target surely."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .graph import almost_sure_reach_max, bottom_sccs, reach_set
from .mdp.ecs import DEFAULT_ENUM_CAP
from .mdp.pipeline import choice_names, extract_md_scheduler, preprocess_ecs, solve_lp1, translate_back
from .model import INF, Action, AnalysisMode, ExtendedValue, MdScheduler, Model, ModelError, absorb_zero_rewards


class NoAdmissibleScheduler(ModelError):
    """No scheduler reaches the target with probability one from the initial state."""


@dataclass
class SspResult:
    value: ExtendedValue
    scheduler: MdScheduler | None
    witness: dict | None = None
    removed_states: set[str] = field(default_factory=set)
    values: dict[str, ExtendedValue] = field(default_factory=dict)
    report: dict = field(default_factory=dict)


def _admissible_submodel(m: Model, target: int) -> tuple[Model, set[int]]:
    keep = almost_sure_reach_max(m, {target})
    if m.initial not in keep:
        raise NoAdmissibleScheduler(f"the target {m.names[target]} cannot be reached almost surely")
    acts = []
    for s in range(m.n):
        if s in keep:
            inside = tuple(a for a in m.actions[s] if all(t in keep for t, _ in a.dist))
            acts.append(inside)
        else:
            # placeholder, the state is dropped by restrict() below
            acts.append((Action("none", ((s, Fraction(1)),)),))
    pruned = Model(m.names, m.rewards, tuple(acts), m.initial, m.auxiliary)
    return pruned.restrict(keep), keep


def reaches_surely(m: Model, scheduler: MdScheduler, target: str) -> bool:
    """Does the induced chain reach ``target`` with probability one from the initial state?"""
    chain = m.induced_chain(scheduler)
    reach = reach_set(chain, [chain.initial])
    t = chain.index[target]
    for b in bottom_sccs(chain):
        if b.states & reach and b.states != {t}:
            return False
    return True


def mssp(m: Model, target: str, *, cap: int = DEFAULT_ENUM_CAP) -> SspResult:
    """Supremum of the expected multiplicative reward over schedulers reaching ``target`` almost surely."""
    if target not in m.index:
        raise ModelError(f"unknown target state {target!r}")
    t = m.index[target]
    if not m.is_absorbing(t) or m.rewards[t] != 1:
        raise ModelError("the target must be absorbing with reward 1", f"state {target}")
    base = absorb_zero_rewards(m)
    sub, keep = _admissible_submodel(base, t)
    removed = {m.names[s] for s in range(m.n) if s not in keep}
    pre = preprocess_ecs(sub, AnalysisMode.SUP, cap=cap, stay=False)
    work = pre.model
    finite = [s for s in range(work.n) if s not in pre.infinite]
    values, lp_status = solve_lp1(work, finite)
    for s in pre.infinite:
        values[s] = INF
    out_values = {name: values[work.index[name]] for name in sub.names}
    init_value = out_values[m.names[m.initial]]
    report = {
        "removed_states": sorted(removed),
        "spiders": [r.to_dict() for r in pre.spiders],
        "lp_status": lp_status,
    }
    witness = None
    if init_value == INF:
        if pre.witnesses:
            witness = dict(pre.witnesses[0])
            witness["description"] = (
                "stay in the component until the accumulated product exceeds any bound, "
                "then follow an almost-sure path to the target"
            )
        else:
            witness = {"kind": "transient-divergence", "states": [n for n, v in out_values.items() if v == INF]}
        return SspResult(INF, None, witness, removed, out_values, report)
    choice = extract_md_scheduler(work, {s: v for s, v in values.items() if v != INF})
    sub_sched = translate_back(choice_names(work, choice), pre.spiders, sub)
    scheduler = {name: sub_sched.get(name, m.actions[m.index[name]][0].name) for name in m.names}
    if not reaches_surely(m, scheduler, target):
        raise AssertionError("extracted scheduler does not reach the target almost surely")
    return SspResult(init_value, scheduler, None, removed, out_values, report)
