"""Test oracles: Monte Carlo simulation, cycle and scheduler enumeration, value iteration.

Nothing here is used by the exact pipeline.  Simulation is the only place in the
package that uses floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import networkx as nx
import numpy as np

from .exactnum import ResourceError
from .mc import cycle_product, mc_values
from .model import INF, AnalysisMode, ExtendedValue, Model

MAX_CYCLE_STATES = 10
DEFAULT_MD_CAP = 1 << 16


class UnreliableEstimateError(RuntimeError):
    """More than half of the episodes hit the horizon before absorption."""


@dataclass(frozen=True)
class SimStats:
    episodes: int
    mean: float
    std_error: float
    truncated: int


def simulate_absorbing(
    m: Model,
    scheduler: Mapping[str, str],
    episodes: int = 100_000,
    horizon: int = 10_000,
    seed: int = 0,
) -> SimStats:
    """Estimate the expected product of rewards until absorption under an MD-scheduler.

    Once an episode reaches a state whose chosen action is a self-loop, its product
    is final: unchanged for reward 1, zero below 1 and infinite above 1.  Episodes
    still running at ``horizon`` are counted as truncated and left out of the mean.
    Randomness comes from a Philox counter-based generator, so a seed reproduces
    the run bit for bit on every platform.
    """
    chain = m.induced_chain(scheduler)
    n = chain.n
    rewards = np.array([float(r) for r in chain.rewards])
    absorbing = np.array([chain.is_absorbing(s) for s in range(n)])
    width = max(len(chain.actions[s][0].dist) for s in range(n))
    succ = np.zeros((n, width), dtype=np.int64)
    cum = np.ones((n, width))
    for s in range(n):
        dist = chain.actions[s][0].dist
        acc = Fraction(0)
        for k, (t, p) in enumerate(dist):
            acc += p
            succ[s, k] = t
            cum[s, k] = float(acc)
        succ[s, len(dist) :] = dist[-1][0]
        cum[s, len(dist) - 1 :] = 1.0
    rng = np.random.Generator(np.random.Philox(seed))
    state = np.full(episodes, chain.initial, dtype=np.int64)
    prod = np.ones(episodes)
    active = ~absorbing[state]
    for _ in range(horizon):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cur = state[idx]
        prod[idx] *= rewards[cur]
        u = rng.random(idx.size)
        k = (u[:, None] >= cum[cur]).sum(axis=1)
        k = np.minimum(k, width - 1)
        nxt = succ[cur, k]
        state[idx] = nxt
        active[idx] = ~absorbing[nxt]
    final_r = rewards[state]
    with np.errstate(invalid="ignore"):
        prod = np.where(final_r == 1.0, prod, np.where(final_r < 1.0, 0.0, np.where(prod > 0, np.inf, 0.0)))
    done = ~active
    truncated = int(active.sum())
    if truncated * 2 > episodes:
        raise UnreliableEstimateError(f"{truncated} of {episodes} episodes were not absorbed within {horizon} steps")
    sample = prod[done]
    mean = float(sample.mean())
    se = float(sample.std(ddof=1) / math.sqrt(sample.size)) if sample.size > 1 else 0.0
    return SimStats(episodes, mean, se, truncated)


def enumerate_simple_cycles(c: Model) -> list[tuple[tuple[int, ...], Fraction]]:
    """All simple cycles of a chain's graph with their reward products, in canonical rotation."""
    if c.n > MAX_CYCLE_STATES:
        raise ResourceError(f"cycle enumeration is limited to {MAX_CYCLE_STATES} states")
    g = nx.DiGraph()
    g.add_nodes_from(range(c.n))
    for s in range(c.n):
        for a in c.actions[s]:
            g.add_edges_from((s, t) for t, _ in a.dist)
    out = []
    for cyc in nx.simple_cycles(g):
        i = cyc.index(min(cyc))
        canon = tuple(cyc[i:] + cyc[:i])
        out.append((canon, cycle_product(c, canon)))
    return sorted(out)


def md_schedulers(m: Model, cap: int = DEFAULT_MD_CAP):
    total = 1
    for acts in m.actions:
        total *= len(acts)
    if total > cap:
        raise ResourceError(f"{total} MD-schedulers exceed the enumeration cap {cap}")
    names = [[a.name for a in acts] for acts in m.actions]
    for combo in itertools.product(*names):
        yield dict(zip(m.names, combo))


def enumerate_md_values(
    m: Model, mode: AnalysisMode = AnalysisMode.SUP, cap: int = DEFAULT_MD_CAP, *, with_scheduler: bool = False
):
    """Best initial-state value over all MD-schedulers, each evaluated by the chain analysis."""
    init = m.names[m.initial]
    best: ExtendedValue | None = None
    best_sched = None
    for sched in md_schedulers(m, cap):
        v = mc_values(m.induced_chain(sched), mode)[0][init]
        if best is None or v > best:
            best, best_sched = v, sched
            if v == INF:
                break
    return (best, best_sched) if with_scheduler else best


def enumerate_md_values_where(m: Model, mode: AnalysisMode, admissible, cap: int = DEFAULT_MD_CAP):
    """Like enumerate_md_values, restricted to schedulers accepted by ``admissible``."""
    init = m.names[m.initial]
    best = None
    for sched in md_schedulers(m, cap):
        if admissible(sched):
            v = mc_values(m.induced_chain(sched), mode)[0][init]
            if best is None or v > best:
                best = v
    return best


def bellman_step(m: Model, x: Mapping[str, object], *, exact: bool = True) -> dict[str, object]:
    """One application of T: r(s) * max over actions of the expected successor value."""
    num = Fraction if exact else float
    out = {}
    for s, name in enumerate(m.names):
        r = num(m.rewards[s])
        if m.is_absorbing(s):
            out[name] = r
            continue
        out[name] = r * max(sum(num(p) * x[m.names[t]] for t, p in a.dist) for a in m.actions[s])
    return out


def value_iteration_oracle(m: Model, n: int, *, exact: bool = True) -> list[dict[str, object]]:
    """Iterates T^0(0), ..., T^n(0) of the optimality operator, absorbing states pinned to their reward."""
    x = {name: Fraction(0) if exact else 0.0 for name in m.names}
    out = [x]
    for _ in range(n):
        x = bellman_step(m, x, exact=exact)
        out.append(x)
    return out
