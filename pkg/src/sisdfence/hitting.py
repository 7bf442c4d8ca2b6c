"""All minimum-cost hitting sets, by branch and bound."""
from __future__ import annotations

from typing import Callable, Hashable, Iterable, TypeVar

T = TypeVar("T", bound=Hashable)


def set_sort_key(s: Iterable) -> tuple:
    """Order sets lexicographically by their sorted elements."""
    return tuple(sorted(s))


def hits(family: Iterable[Iterable[T]], cost: Callable[[T], int]) -> list[frozenset[T]]:
    """Every subset of the union of ``family`` that intersects each member and
    has minimum total ``cost``. Costs must be positive.

    ``hits([])`` is ``[frozenset()]``. The result is sorted with
    :func:`set_sort_key`.
    """
    sets = {frozenset(s) for s in family}
    if frozenset() in sets:
        raise ValueError("cannot hit an empty set")
    # a superset is hit whenever one of its subsets is
    sets = [s for s in sets if not any(o < s for o in sets)]
    if not sets:
        return [frozenset()]

    universe = sorted(set().union(*sets))
    price = {e: cost(e) for e in universe}
    if any(c <= 0 for c in price.values()):
        raise ValueError("costs must be positive")
    # branch on elements in order of cheapness, then by their natural order
    members = [sorted(s, key=lambda e: (price[e], e)) for s in sets]

    best = sum(price.values())
    found: set[frozenset] = set()

    def lower_bound(unhit: list[int], excluded: set) -> int | None:
        # each unhit set needs at least its cheapest non-excluded element
        lb = 0
        for i in unhit:
            avail = [price[e] for e in members[i] if e not in excluded]
            if not avail:
                return None
            lb = max(lb, min(avail))
        return lb

    def search(chosen: frozenset, spent: int, excluded: frozenset):
        nonlocal best
        unhit = [i for i, s in enumerate(sets) if not (s & chosen)]
        if not unhit:
            if spent < best:
                best = spent
                found.clear()
            if spent == best:
                found.add(chosen)
            return
        lb = lower_bound(unhit, excluded)
        if lb is None or spent + lb > best:
            return
        # branch on the unhit set with the fewest available elements
        pick = min(unhit, key=lambda i: (sum(e not in excluded for e in members[i]), i))
        skip = set(excluded)
        for e in members[pick]:
            if e in excluded:
                continue
            if spent + price[e] <= best:
                search(chosen | {e}, spent + price[e], frozenset(skip))
            skip.add(e)

    search(frozenset(), 0, frozenset())
    return sorted(found, key=set_sort_key)

