"""Counter-example guided inference of all optimal fence sets."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .hitting import hits, set_sort_key
from .program import (
    FENCE, FENCE_KINDS, LLFENCE, SSFENCE, SYNCWR, Cas, FenceConstraint, Program, Read,
    SyncWr, Write, anchor_of, insert_fences, present_constraints,
)
from .reachability import DEFAULT_MAX_STATES, SafetyProperty, WitnessRun, explore
from .semantics import EVICT, FETCH, WRLLC, Exec, MemModel, SysEvent

log = logging.getLogger(__name__)

FenceSet = frozenset  # frozenset[FenceConstraint]

KIND_ALIASES = {
    "full": FENCE, "fence": FENCE, "ss": SSFENCE, "ssfence": SSFENCE,
    "ll": LLFENCE, "llfence": LLFENCE, "syncwr": SYNCWR, "sw": SYNCWR,
}


class CostFn(dict):
    """Cost per fence kind, extended additively to constraints and sets."""

    PRESETS = {
        "overview": {LLFENCE: 1, SSFENCE: 1, FENCE: 2, SYNCWR: 1},
        "experiments": {FENCE: 10, SSFENCE: 5, LLFENCE: 5, SYNCWR: 1},
    }

    def __init__(self, costs: Mapping[str, int]):
        super().__init__({KIND_ALIASES.get(k, k): int(v) for k, v in costs.items()})
        for k, v in self.items():
            if k not in FENCE_KINDS:
                raise ValueError(f"unknown fence kind {k!r}")
            if v < 1:
                raise ValueError(f"cost of {k} must be a positive integer")

    @classmethod
    def parse(cls, spec: str) -> "CostFn":
        """``overview``, ``experiments`` or ``kind=cost,...`` (unset kinds
        take the ``experiments`` value)."""
        if spec in cls.PRESETS:
            return cls(cls.PRESETS[spec])
        costs = dict(cls.PRESETS["experiments"])
        for item in filter(None, (s.strip() for s in spec.split(","))):
            k, _, v = item.partition("=")
            if not v:
                raise ValueError(f"bad cost entry {item!r}")
            k = KIND_ALIASES.get(k.strip(), k.strip())
            costs[k] = int(v)
        return cls(costs)

    def __call__(self, c: FenceConstraint) -> int:
        return self[c.kind]

    def total(self, fences: Iterable[FenceConstraint]) -> int:
        return sum(self[c.kind] for c in fences)


class FenceMenu(frozenset):
    """The fence kinds the synthesizer may use; always includes the full fence."""

    def __new__(cls, kinds: Iterable[str]):
        kinds = frozenset(KIND_ALIASES.get(k, k) for k in kinds)
        unknown = kinds - set(FENCE_KINDS)
        if unknown:
            raise ValueError(f"unknown fence kinds {sorted(unknown)}")
        if FENCE not in kinds:
            raise ValueError("the fence menu must contain the full fence")
        return super().__new__(cls, kinds)

    @classmethod
    def parse(cls, spec: str) -> "FenceMenu":
        if spec == "all":
            return cls(FENCE_KINDS)
        return cls(s.strip() for s in spec.split(",") if s.strip())


ALL_FENCES = FenceMenu(FENCE_KINDS)
MIXED_NO_SYNCWR = FenceMenu([FENCE, SSFENCE, LLFENCE])
FULL_ONLY = FenceMenu([FENCE])


# -- witness analysis --------------------------------------------------------

class Access(NamedTuple):
    index: int  # position of the instruction in the run
    label: str
    kind: str  # read | write
    var: str
    point: int  # when the access takes effect at the LLC


class ReorderedPair(NamedTuple):
    earlier: Access
    later: Access
    category: str  # WW | RR | WR
    between: tuple[str, ...]  # labels run by the process in [earlier, later)


def _accesses(p: Program, run: WitnessRun) -> dict[str, list[Access]]:
    n = len(run.steps)
    # most recent step that made p's copy of x agree with the LLC
    synced: dict[tuple[str, str], int] = {}
    pending: dict[tuple[str, str], list[list]] = {}
    per_proc: dict[str, list[list]] = {q.pid: [] for q in p.procs}
    for i, (t, _) in enumerate(run.steps):
        if isinstance(t, SysEvent):
            key = (t.pid, t.var)
            if t.kind == FETCH:
                synced[key] = i
            elif t.kind == WRLLC:
                synced[key] = i
                for acc in pending.pop(key, ()):
                    acc[4] = i
            elif t.kind != EVICT:
                raise ValueError(f"malformed run: unknown event {t}")
            continue
        if not p.has_label(t.label):
            raise ValueError(f"malformed run: unknown label {t.label!r}")
        pid = p.proc_of(t.label).pid
        s = p.stmt_of(t.label)
        before = run.configuration_before(i)
        if isinstance(s, Read):
            line = before.locals[p.pid_index[pid]].l1[p.var_index[s.var]]
            if line is None:
                raise ValueError(f"malformed run: {t.label} reads an invalid entry")
            if line.dirty:
                continue  # served by the process's own pending write
            per_proc[pid].append([i, t.label, "read", s.var, synced[(pid, s.var)]])
        elif isinstance(s, Write):
            acc = [i, t.label, "write", s.var, n]
            pending.setdefault((pid, s.var), []).append(acc)
            per_proc[pid].append(acc)
        elif isinstance(s, (SyncWr, Cas)):
            per_proc[pid].append([i, t.label, "write", s.var, i])
    return {pid: [Access(*a) for a in accs] for pid, accs in per_proc.items()}


def detect_reorderings(p: Program, run: WitnessRun) -> list[ReorderedPair]:
    """Program-ordered access pairs of one process whose LLC effects happen
    in the opposite order along ``run``.

    A write takes effect at the next wrllc of its variable (or at the end of
    the run if that never happens); syncwr and cas take effect immediately.
    A read served from a clean copy takes effect when that copy was last
    synchronised with the LLC; reads of a dirty copy are skipped.
    """
    executed: dict[str, list[tuple[int, str]]] = {q.pid: [] for q in p.procs}
    for i, (t, _) in enumerate(run.steps):
        if isinstance(t, Exec):
            executed[p.proc_of(t.label).pid].append((i, t.label))

    pairs = []
    for pid, accs in _accesses(p, run).items():
        for j, b in enumerate(accs):
            for a in accs[:j]:
                if a.point <= b.point:
                    continue
                category = {("write", "write"): "WW", ("read", "read"): "RR",
                            ("write", "read"): "WR"}.get((a.kind, b.kind))
                if category is None:
                    continue
                between = []
                for i, label in executed[pid]:
                    if a.index <= i < b.index and label not in between:
                        between.append(label)
                pairs.append(ReorderedPair(a, b, category, tuple(between)))
    return pairs


_CANDIDATES = {
    "WW": (SSFENCE, FENCE),
    "RR": (LLFENCE, FENCE),
    "WR": (FENCE, SSFENCE, LLFENCE),
}


def analyze_witness(p: Program, run: WitnessRun, menu: Iterable[str] = ALL_FENCES
                    ) -> frozenset[FenceConstraint]:
    """Fence constraints that would break at least one reordering of ``run``.

    Labels of fences that were inserted into ``p`` are mapped back to the
    label they were inserted after, and constraints ``p`` already realises
    are left out. An empty result means the run needs no reordering.
    """
    menu = frozenset(menu)
    out = set()
    for pair in detect_reorderings(p, run):
        for label in pair.between:
            anchor = anchor_of(p, label)
            out.update(FenceConstraint(anchor, k) for k in _CANDIDATES[pair.category])
        if pair.category in ("WW", "WR") and isinstance(p.stmt_of(pair.earlier.label), Write):
            out.add(FenceConstraint(anchor_of(p, pair.earlier.label), SYNCWR))
    return frozenset(c for c in out if c.kind in menu) - present_constraints(p)


# -- the synthesis loop ------------------------------------------------------

@dataclass
class FencinsResult:
    sets: list[FenceSet]  # all optimal fence sets; [] if no fence set helps
    cost: int | None
    iterations: int = 0
    states_explored: int = 0
    requirements: list[FenceSet] = field(default_factory=list)

    @property
    def uncorrectable(self) -> bool:
        return not self.sets


def synthesize(p: Program, prop: SafetyProperty, cost: CostFn,
               menu: Iterable[str] = ALL_FENCES,
               max_states: int = DEFAULT_MAX_STATES) -> FencinsResult:
    """Find every optimal fence set for ``p`` w.r.t. ``prop`` under SiSd.

    Raises StateBudgetExceeded if any reachability check runs out of budget.
    """
    menu = FenceMenu(menu)
    opt: list[FenceSet] = []
    req: list[FenceSet] = []
    iterations = states = 0
    while True:
        candidates = [f for f in hits(req, cost) if f not in opt]
        if not candidates:
            break
        fences = candidates[0]
        iterations += 1
        fenced = insert_fences(p, fences)
        res = explore(fenced, prop, MemModel.SISD, max_states)
        states += res.states
        if res.witness is None:
            log.debug("sound: %s", _fmt(fences))
            opt.append(fences)
            continue
        needed = analyze_witness(fenced, res.witness, menu)
        log.debug("unsound: %s, requirement %s", _fmt(fences), _fmt(needed))
        if not needed:
            return FencinsResult([], None, iterations, states, req)
        req.append(needed)
    opt.sort(key=set_sort_key)
    return FencinsResult(opt, cost.total(opt[0]), iterations, states, req)


def fencins(p: Program, prop: SafetyProperty, cost: CostFn,
            menu: Iterable[str] = ALL_FENCES,
            max_states: int = DEFAULT_MAX_STATES) -> list[FenceSet]:
    """All optimal fence sets; ``[]`` when the bad states are reachable
    without any reordering, ``[frozenset()]`` when no fence is needed."""
    return synthesize(p, prop, cost, menu, max_states).sets


def _fmt(fences) -> str:
    return "{" + ", ".join(map(str, sorted(fences))) + "}"
