"""Qualitative graph analyses on models: SCCs, MECs, reachability."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .model import Model

# state -> allowed action indices
ActionSets = Mapping[int, Iterable[int]]


@dataclass(frozen=True)
class Component:
    """A set of states with, per state, the action indices that stay inside it."""

    states: frozenset[int]
    internal_actions: Mapping[int, frozenset[int]]

    def is_bscc(self) -> bool:
        return all(len(self.internal_actions.get(s, ())) == 1 for s in self.states)

    def choice(self) -> dict[int, int]:
        """For a BSCC: the single internal action of every state."""
        return {s: next(iter(self.internal_actions[s])) for s in self.states}

    def key(self):
        return frozenset((s, a) for s, acts in self.internal_actions.items() for a in acts)


def tarjan(nodes: Iterable[int], succ: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Strongly connected components, emitted in reverse topological order (sinks first)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def _all_actions(m: Model, states: Iterable[int]) -> dict[int, set[int]]:
    return {s: set(range(len(m.actions[s]))) for s in states}


def _succ_fn(m: Model, allowed: Mapping[int, Iterable[int]]):
    def succ(s):
        seen = []
        for a in sorted(allowed.get(s, ())):
            for t, _ in m.actions[s][a].dist:
                if t in allowed and t not in seen:
                    seen.append(t)
        return seen

    return succ


def sccs(m: Model, allowed: ActionSets | None = None) -> list[Component]:
    """SCC decomposition of the graph of all (or the ``allowed``) action edges."""
    allowed = _all_actions(m, range(m.n)) if allowed is None else {s: set(a) for s, a in allowed.items()}
    out = []
    for comp in tarjan(sorted(allowed), _succ_fn(m, allowed)):
        cs = frozenset(comp)
        internal = {
            s: frozenset(a for a in allowed[s] if all(t in cs for t, _ in m.actions[s][a].dist)) for s in comp
        }
        out.append(Component(cs, internal))
    return out


def bottom_sccs(m: Model, allowed: ActionSets | None = None) -> list[Component]:
    """SCCs with no edge leaving them (for a Markov chain: its BSCCs)."""
    allowed = _all_actions(m, range(m.n)) if allowed is None else allowed
    return [
        c
        for c in sccs(m, allowed)
        if all(
            t in c.states for s in c.states for a in allowed[s] for t, _ in m.actions[s][a].dist
        )
    ]


def mecs(m: Model, allowed: ActionSets | None = None) -> list[Component]:
    """Maximal end components, by iterated SCC decomposition and pruning."""
    allowed = _all_actions(m, range(m.n)) if allowed is None else {s: set(a) for s, a in allowed.items()}
    allowed = {s: a for s, a in allowed.items() if a}
    while True:
        changed = False
        comp_of = {}
        for i, c in enumerate(sccs(m, allowed)):
            for s in c.states:
                comp_of[s] = i
        for s in list(allowed):
            keep = {
                a
                for a in allowed[s]
                if all(t in allowed and comp_of.get(t) == comp_of[s] for t, _ in m.actions[s][a].dist)
            }
            if keep != allowed[s]:
                changed = True
                if keep:
                    allowed[s] = keep
                else:
                    del allowed[s]
        if not changed:
            break
    out = []
    for c in sccs(m, allowed):
        if all(c.internal_actions[s] for s in c.states):
            out.append(c)
    return out


def can_reach(m: Model, source: int, targets: Iterable[int], allowed: ActionSets | None = None) -> bool:
    targets = set(targets)
    if source in targets:
        return True
    return bool(reach_set(m, [source], allowed) & targets)


def reach_set(m: Model, sources: Iterable[int], allowed: ActionSets | None = None) -> set[int]:
    """States reachable from ``sources`` (forward BFS)."""
    seen = set(sources)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        acts = range(len(m.actions[s])) if allowed is None else allowed.get(s, ())
        for a in acts:
            for t, _ in m.actions[s][a].dist:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
    return seen


def can_reach_set(m: Model, targets: Iterable[int], allowed: ActionSets | None = None) -> set[int]:
    """States from which some state of ``targets`` is reachable (backward BFS)."""
    preds: dict[int, set[int]] = {}
    for s in range(m.n):
        acts = range(len(m.actions[s])) if allowed is None else allowed.get(s, ())
        for a in acts:
            for t, _ in m.actions[s][a].dist:
                preds.setdefault(t, set()).add(s)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in preds.get(t, ()):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def almost_sure_reach_max(m: Model, targets: Iterable[int]) -> set[int]:
    """States from which some scheduler reaches ``targets`` with probability one."""
    targets = set(targets)
    keep = set(range(m.n))
    while True:
        allowed = {
            s: [a for a, act in enumerate(m.actions[s]) if all(t in keep for t, _ in act.dist)]
            for s in keep
            if s not in targets
        }
        new = can_reach_set(m, targets, allowed) & keep
        new |= targets
        if new == keep:
            return keep
        keep = new


def attractor_choice(
    m: Model, goal: Iterable[int], states: Iterable[int], allowed: ActionSets | None = None
) -> dict[int, int]:
    """For each state in ``states`` an allowed action with a successor one step closer to ``goal``.

    States that cannot reach ``goal`` through allowed actions get no entry.
    """
    attracted = set(goal)
    pending = set(states) - attracted
    choice: dict[int, int] = {}
    progress = True
    while pending and progress:
        progress = False
        for s in sorted(pending):
            acts = range(len(m.actions[s])) if allowed is None else sorted(allowed.get(s, ()))
            for a in acts:
                if any(t in attracted for t, _ in m.actions[s][a].dist):
                    choice[s] = a
                    break
        newly = {s for s in pending if s in choice}
        if newly:
            attracted |= newly
            pending -= newly
            progress = True
    return choice
