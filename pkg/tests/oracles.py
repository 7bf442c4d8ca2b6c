"""Independent reference implementations used to check the solvers."""
from __future__ import annotations

from itertools import chain, combinations

from sisdfence.program import FENCE_KINDS, SYNCWR, FenceConstraint, Write, insert_fences
from sisdfence.reachability import reachable


def powerset(items):
    items = list(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def brute_hits(family, cost) -> list[frozenset]:
    """Every minimum-cost hitting set, by enumerating all subsets of the union."""
    family = [frozenset(s) for s in family]
    universe = sorted(set().union(*family)) if family else []
    hitting = [frozenset(t) for t in powerset(universe)
               if all(frozenset(t) & s for s in family)]
    best = min(sum(cost(e) for e in t) for t in hitting)
    return sorted((t for t in hitting if sum(cost(e) for e in t) == best),
                  key=lambda t: tuple(sorted(t)))


def constraint_universe(p, menu) -> list[FenceConstraint]:
    out = []
    for label in p.labels:
        for kind in FENCE_KINDS:
            if kind not in menu:
                continue
            if kind == SYNCWR and not isinstance(p.stmt_of(label), Write):
                continue
            out.append(FenceConstraint(label, kind))
    return out


def brute_fencins(p, prop, cost, menu, bound: int | None = None):
    """(cheapest sound cost, all sound sets at that cost), or (None, []).

    Checks every fence set over labels x menu whose cost is at most
    ``bound`` (every fence set if ``bound`` is None).
    """
    universe = constraint_universe(p, menu)
    cheapest = min(cost[f.kind] for f in universe)
    sound: dict[int, list[frozenset]] = {}
    for r in range(len(universe) + 1):
        if bound is not None and r * cheapest > bound:
            break
        for fs in combinations(universe, r):
            c = sum(cost[f.kind] for f in fs)
            if bound is not None and c > bound:
                continue
            if reachable(insert_fences(p, fs), prop) is None:
                sound.setdefault(c, []).append(frozenset(fs))
    if not sound:
        return None, []
    best = min(sound)
    return best, sorted(sound[best], key=lambda t: tuple(sorted(t)))
