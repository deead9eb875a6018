"""Expected multiplicative reward of Markov chains (limsup and liminf)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .exactnum import Sign, SymbolicLogValue
from .graph import Component, bottom_sccs, can_reach_set, sccs
from .linalg import LinearProgram, LinearSystem, lp_solve, solve_or_none, solve_square
from .model import INF, AnalysisMode, ExtendedValue, Model, ModelError, absorb_zero_rewards, format_value


class NotStronglyConnectedError(ValueError):
    pass


@dataclass(frozen=True)
class AllOneCycles:
    """Every cycle has product 1; ``table[t]`` is the unique path product root -> t."""

    root: int
    table: dict[int, Fraction]


@dataclass(frozen=True)
class NCycleWitness:
    """A simple cycle (first state repeated implicitly) whose reward product is not 1."""

    cycle: tuple[int, ...]
    product: Fraction


@dataclass(frozen=True)
class NotApplicable:
    pass


CycleStructure = Union[AllOneCycles, NCycleWitness, NotApplicable]


@dataclass
class BsccClassification:
    states: tuple[int, ...]
    mp_sign: Sign
    cycle_structure: CycleStructure
    sup_value: dict[int, ExtendedValue]
    inf_value: dict[int, ExtendedValue]
    stationary: dict[int, Fraction] | None = None

    def values(self, mode: AnalysisMode) -> dict[int, ExtendedValue]:
        return self.sup_value if mode is AnalysisMode.SUP else self.inf_value


def _chain_succ(c: Model, s: int):
    if len(c.actions[s]) != 1:
        raise ModelError(f"state {c.names[s]} has {len(c.actions[s])} actions; a Markov chain is required")
    return c.actions[s][0].dist


def _check_scc(c: Model, states: Iterable[int]) -> list[int]:
    states = sorted(states)
    comps = sccs(c, {s: [0] for s in states})
    closed = all(t in states for s in states for t, _ in _chain_succ(c, s))
    if len(comps) != 1 or not closed:
        raise NotStronglyConnectedError("expected a closed, strongly connected set of states")
    return states


def stationary_distribution(c: Model, states: Iterable[int] | None = None) -> dict[int, Fraction]:
    """Unique stationary distribution of a closed strongly connected chain."""
    states = _check_scc(c, range(c.n) if states is None else states)
    pos = {s: i for i, s in enumerate(states)}
    k = len(states)
    # rows: (P^T - I) theta = 0, with the last row replaced by sum(theta) = 1
    a = [[Fraction(0)] * k for _ in range(k)]
    for s in states:
        for t, p in _chain_succ(c, s):
            a[pos[t]][pos[s]] += p
    for i in range(k):
        a[i][i] -= 1
    a[-1] = [Fraction(1)] * k
    b = [Fraction(0)] * (k - 1) + [Fraction(1)]
    theta = solve_square(LinearSystem(a, b))
    return {s: theta[pos[s]] for s in states}


def log_mean_payoff(c: Model, states: Iterable[int] | None = None) -> tuple[SymbolicLogValue, dict[int, Fraction]]:
    theta = stationary_distribution(c, states)
    return SymbolicLogValue(tuple((theta[s], c.rewards[s]) for s in sorted(theta))), theta


def scc_log_mp_sign(c: Model, states: Iterable[int] | None = None) -> Sign:
    """Sign of the expected mean payoff of log(reward) on a strongly connected chain."""
    states = list(range(c.n) if states is None else states)
    if any(c.rewards[s] == 0 for s in states):
        return Sign.NEGATIVE
    return log_mean_payoff(c, states)[0].sign()


def _decompose_walk(walk: list[int], c: Model) -> list[tuple[int, ...]]:
    """Split a closed walk (last state == first) into simple cycles."""
    cycles = []
    stack: list[int] = []
    pos: dict[int, int] = {}
    for s in walk:
        if s in pos:
            i = pos[s]
            cycles.append(tuple(stack[i:]))
            for v in stack[i + 1 :]:
                del pos[v]
            del stack[i + 1 :]
        else:
            pos[s] = len(stack)
            stack.append(s)
    return cycles


def cycle_product(c: Model, cycle: Iterable[int]) -> Fraction:
    prod = Fraction(1)
    for s in cycle:
        prod *= c.rewards[s]
    return prod


def _bfs_path(c: Model, src: int, dst: int, states: set[int]) -> list[int]:
    parent = {src: None}
    queue = deque([src])
    while queue:
        s = queue.popleft()
        if s == dst:
            break
        for t, _ in _chain_succ(c, s):
            if t in states and t not in parent:
                parent[t] = s
                queue.append(t)
    path = [dst]
    while path[-1] != src:
        path.append(parent[path[-1]])
    return path[::-1]


def one_cycle_analysis(c: Model, root: int, states: Iterable[int] | None = None) -> AllOneCycles | NCycleWitness:
    """BFS from ``root`` recording path products; a mismatch yields an n-cycle witness."""
    states = set(range(c.n) if states is None else states)
    prod = {root: Fraction(1)}
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        s = queue.popleft()
        for t, _ in _chain_succ(c, s):
            if t not in states:
                continue
            cand = prod[s] * c.rewards[s]
            if t not in prod:
                prod[t] = cand
                parent[t] = s
                queue.append(t)
            elif prod[t] != cand:
                return _witness(c, root, s, t, parent, states)
    return AllOneCycles(root, prod)


def _witness(c, root, s, t, parent, states) -> NCycleWitness:
    def tree_path(v):
        path = [v]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        return path[::-1]

    back = _bfs_path(c, t, root, states)
    # two closed walks through root with different products; one contains an n-cycle
    walks = [tree_path(t) + back[1:], tree_path(s) + [t] + back[1:]]
    for walk in walks:
        for cyc in _decompose_walk(walk, c):
            p = cycle_product(c, cyc)
            if p != 1:
                return NCycleWitness(cyc, p)
    raise AssertionError("path products differ but no n-cycle found")


def bscc_values(c: Model, states: Iterable[int] | None = None) -> BsccClassification:
    """Value classification of a BSCC for both modes."""
    states = tuple(sorted(range(c.n) if states is None else states))
    if any(c.rewards[s] == 0 for s in states):
        zero = {s: Fraction(0) for s in states}
        return BsccClassification(states, Sign.NEGATIVE, NotApplicable(), zero, dict(zero))
    mp, theta = log_mean_payoff(c, states)
    sign = mp.sign()
    if sign is Sign.NEGATIVE:
        zero = {s: Fraction(0) for s in states}
        return BsccClassification(states, sign, NotApplicable(), zero, dict(zero), theta)
    if sign is Sign.POSITIVE:
        inf = {s: INF for s in states}
        return BsccClassification(states, sign, NotApplicable(), inf, dict(inf), theta)
    structure = one_cycle_analysis(c, states[0], states)
    if isinstance(structure, NCycleWitness):
        return BsccClassification(
            states, sign, structure, {s: INF for s in states}, {s: Fraction(0) for s in states}, theta
        )
    table = structure.table
    sup, inf = {}, {}
    for s in states:
        # R(s, t) = R(root, t) / R(root, s)
        row = [table[t] / table[s] for t in states]
        sup[s], inf[s] = max(row), min(row)
    return BsccClassification(states, sign, structure, sup, inf, theta)


def r_table(c: Model, structure: AllOneCycles, source: int) -> dict[int, Fraction]:
    """R(source, t) for every t, from a table rooted elsewhere."""
    base = structure.table[source]
    return {t: v / base for t, v in structure.table.items()}


@dataclass
class McReport:
    bsccs: list[BsccClassification] = field(default_factory=list)
    zero_states: list[str] = field(default_factory=list)
    transient_states: list[str] = field(default_factory=list)
    lp_status: str | None = None
    # unique solution of the transient equation system, or None when singular
    equation_solution: dict[str, Fraction] | None = None
    equation_singular: bool | None = None
    infinite_sources: list[str] = field(default_factory=list)
    witness: dict | None = None

    def to_dict(self, m: Model) -> dict:
        out = {
            "bsccs": [
                {
                    "states": [m.names[s] for s in b.states],
                    "log_mp_sign": b.mp_sign.name.lower(),
                    "cycles": _structure_dict(m, b.cycle_structure),
                }
                for b in self.bsccs
            ],
            "zero_states": self.zero_states,
            "transient_states": self.transient_states,
            "lp_status": self.lp_status,
        }
        if self.equation_singular is not None:
            out["transient_system"] = (
                {"solution": "singular"}
                if self.equation_singular
                else {"solution": {k: format_value(v) for k, v in self.equation_solution.items()}}
            )
        if self.witness:
            out["witness"] = self.witness
        return out


def _structure_dict(m: Model, st: CycleStructure):
    if isinstance(st, AllOneCycles):
        return {"kind": "all-1-cycles", "root": m.names[st.root]}
    if isinstance(st, NCycleWitness):
        return {"kind": "n-cycle", "cycle": [m.names[s] for s in st.cycle], "product": format_value(st.product)}
    return None


def _transient_values(
    c: Model, unknown: list[int], known: dict[int, ExtendedValue]
) -> tuple[dict[int, ExtendedValue], LinearProgram]:
    """Least non-negative solution of x_s = r(s) * sum_t P(s,t) x_t over ``unknown``.

    Successors outside ``unknown`` take their value from ``known``.
    """
    pos = {s: i for i, s in enumerate(unknown)}
    k = len(unknown)
    eq = []
    for s in unknown:
        row = [Fraction(0)] * k
        row[pos[s]] += 1
        const = Fraction(0)
        for t, p in c.actions[s][0].dist:
            if t in pos:
                row[pos[t]] -= c.rewards[s] * p
            else:
                const += c.rewards[s] * p * known[t]
        eq.append((row, const))
    lp = LinearProgram([Fraction(1)] * k, eq=eq)
    res = lp_solve(lp)
    if res.feasible:
        return {s: res.x[pos[s]] for s in unknown}, lp
    return {}, lp


def mc_values(chain: Model, mode: AnalysisMode = AnalysisMode.SUP) -> tuple[dict[str, ExtendedValue], McReport]:
    """Per-state value of a Markov chain, keyed by state name."""
    if not chain.is_markov_chain():
        raise ModelError("mc_values needs a Markov chain (one action per state)")
    names = chain.names
    # zero-reward states become sinks; every state is kept, reachable or not
    c = absorb_zero_rewards(chain)
    report = McReport()
    value: dict[int, ExtendedValue] = {}
    bsccs = bottom_sccs(c)
    bscc_states: set[int] = set()
    for comp in bsccs:
        cls = bscc_values(c, comp.states)
        report.bsccs.append(cls)
        bscc_states |= comp.states
        value.update(cls.values(mode))
    infinite_bscc = [s for s in bscc_states if value[s] == INF]
    for s in can_reach_set(c, infinite_bscc):
        value[s] = INF
    if infinite_bscc:
        report.infinite_sources = [c.names[s] for s in sorted(infinite_bscc)]
        bad = next(b for b in report.bsccs if value[b.states[0]] == INF)
        kind = "positive-mec" if bad.mp_sign is Sign.POSITIVE else "gambling-bscc"
        report.witness = {"kind": kind, "states": [c.names[s] for s in bad.states]}
        if isinstance(bad.cycle_structure, NCycleWitness):
            report.witness["cycle"] = [c.names[s] for s in bad.cycle_structure.cycle]
    positive = [s for s in bscc_states if value[s] != INF and value[s] > 0]
    reach_pos = can_reach_set(c, positive)
    for s in range(c.n):
        if s not in value and s not in reach_pos:
            value[s] = Fraction(0)
    report.zero_states = [c.names[s] for s in range(c.n) if value.get(s) == 0]
    unknown = [s for s in range(c.n) if s not in value]
    report.transient_states = [c.names[s] for s in unknown]
    if unknown:
        known = dict(value)
        sol, lp = _transient_values(c, unknown, known)
        report.lp_status = "optimal" if sol else "infeasible"
        square = solve_or_none(LinearSystem([row for row, _ in lp.eq], [b for _, b in lp.eq]))
        report.equation_singular = square is None
        if square is not None:
            report.equation_solution = {c.names[s]: v for s, v in zip(unknown, square)}
        if sol:
            value.update(sol)
        else:
            _refine_divergent(c, unknown, value)
            report.witness = report.witness or {
                "kind": "transient-divergence",
                "states": [c.names[s] for s in unknown if value[s] == INF],
            }
    return {names[s]: value[c.index[names[s]]] for s in range(len(names))}, report


def _refine_divergent(c: Model, unknown: list[int], value: dict[int, ExtendedValue]) -> None:
    """Assign values SCC by SCC when the joint transient system has no non-negative solution."""
    unk = set(unknown)
    for comp in sccs(c, {s: [0] for s in unknown}):
        members = sorted(comp.states)
        succ_inf = any(
            t not in comp.states and value.get(t) == INF for s in members for t, _ in c.actions[s][0].dist
        )
        if succ_inf:
            for s in members:
                value[s] = INF
            continue
        known = {t: value[t] for s in members for t, _ in c.actions[s][0].dist if t not in comp.states}
        assert all(t not in unk or t in value for t in known)
        sol, _ = _transient_values(c, members, known)
        for s in members:
            value[s] = sol[s] if sol else INF
