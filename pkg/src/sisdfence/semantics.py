"""Operational semantics under SiSd, SI and SC.

A configuration holds, per process, the next label, the register values and
the L1 contents, plus the LLC valuation.  L1 entries are ``None`` (invalid)
or a :class:`Line` with a dirty bit and a value.

Successor generation follows a fixed order: processes in declaration order;
within a process the instruction transition first, then fetch/wrllc/evict
by variable declaration order.
"""
from __future__ import annotations

import itertools
from dataclasses import replace
from enum import Enum
from typing import Callable, Iterator, NamedTuple, Union

from .program import (
    END, STAR, Cas, CBranch, Fence, Program, Read, RegAssign, SyncWr, Write,
    compile_expr, FENCE, SSFENCE, LLFENCE,
)


class MemModel(str, Enum):
    SISD = "sisd"
    SI = "si"
    SC = "sc"

    def __str__(self) -> str:
        return self.value


class Line(NamedTuple):
    """A valid L1 entry."""

    dirty: bool
    value: int

    def __repr__(self) -> str:
        return f"{'Dirty' if self.dirty else 'Clean'}({self.value})"


def clean(v: int) -> Line:
    return Line(False, v)


def dirty(v: int) -> Line:
    return Line(True, v)


L1State = tuple  # tuple[Line | None, ...], indexed like Program.vars


class LocalConf(NamedTuple):
    label: str
    regs: tuple[int, ...]
    l1: L1State


class Configuration(NamedTuple):
    locals: tuple[LocalConf, ...]
    llc: tuple[int, ...]


class Exec(NamedTuple):
    """Execution of the instruction at ``label``."""

    label: str

    def __str__(self) -> str:
        return self.label


class SysEvent(NamedTuple):
    kind: str  # fetch | wrllc | evict
    pid: str
    var: str

    def __str__(self) -> str:
        return f"{self.kind}({self.pid},{self.var})"


Transition = Union[Exec, SysEvent]

FETCH, WRLLC, EVICT = "fetch", "wrllc", "evict"


class TransitionNotEnabled(ValueError):
    pass


def parse_transition(text: str) -> Transition:
    text = text.strip()
    if text.endswith(")") and "(" in text:
        kind, rest = text[:-1].split("(", 1)
        pid, var = (s.strip() for s in rest.split(","))
        if kind not in (FETCH, WRLLC, EVICT):
            raise ValueError(f"unknown system event {kind!r}")
        return SysEvent(kind, pid, var)
    return Exec(text)


def to_si_view(p: Program) -> Program:
    """Reinterpret every plain write as a synchronized write."""
    if not any(isinstance(i.stmt, Write) for q in p.procs for i in q.instrs):
        return p
    procs = []
    for q in p.procs:
        instrs = tuple(
            replace(i, stmt=SyncWr(i.stmt.var, i.stmt.expr)) if isinstance(i.stmt, Write) else i
            for i in q.instrs
        )
        procs.append(replace(q, instrs=instrs))
    return replace(p, procs=tuple(procs))


def initial_configurations(p: Program) -> list[Configuration]:
    """One configuration per choice of values for ``*``-initialised variables."""
    choices = [range(p.domain) if init == STAR else (init,) for _, init in p.vars]
    empty_l1 = (None,) * len(p.vars)
    locals_ = tuple(
        LocalConf(q.instrs[0].label, (0,) * len(q.registers), empty_l1) for q in p.procs
    )
    return [Configuration(locals_, tuple(llc)) for llc in itertools.product(*choices)]


# -- compiled transition tables ----------------------------------------------

# op codes
_READ, _WRITE, _ASSIGN, _FENCE, _SSFENCE, _LLFENCE, _SYNCWR, _CAS, _BRANCH = range(9)
_FENCE_OPS = {FENCE: _FENCE, SSFENCE: _SSFENCE, LLFENCE: _LLFENCE}


class _ProcTable(NamedTuple):
    pid: str
    ops: dict  # label -> op tuple
    events: tuple  # per variable: (fetch, wrllc, evict) transitions


class _Compiled(NamedTuple):
    procs: tuple[_ProcTable, ...]
    nvars: int
    clean: tuple[Line, ...]
    dirty: tuple[Line, ...]


def _compile(p: Program) -> _Compiled:
    n = p.domain
    tables = []
    for q in p.procs:
        reg_index = {r: i for i, r in enumerate(q.registers)}
        ops = {}
        for k, ins in enumerate(q.instrs):
            nxt = q.instrs[k + 1].label if k + 1 < len(q.instrs) else END
            s = ins.stmt
            t = Exec(ins.label)
            if isinstance(s, Read):
                op = (_READ, t, nxt, reg_index[s.reg], p.var_index[s.var])
            elif isinstance(s, Write):
                op = (_WRITE, t, nxt, p.var_index[s.var], compile_expr(s.expr, reg_index, n))
            elif isinstance(s, RegAssign):
                op = (_ASSIGN, t, nxt, reg_index[s.reg], compile_expr(s.expr, reg_index, n))
            elif isinstance(s, Fence):
                op = (_FENCE_OPS[s.kind], t, nxt)
            elif isinstance(s, SyncWr):
                op = (_SYNCWR, t, nxt, p.var_index[s.var], compile_expr(s.expr, reg_index, n))
            elif isinstance(s, Cas):
                op = (_CAS, t, nxt, p.var_index[s.var],
                      compile_expr(s.expected, reg_index, n), compile_expr(s.new, reg_index, n))
            elif isinstance(s, CBranch):
                op = (_BRANCH, t, nxt, compile_expr(s.cond, reg_index, n), s.target)
            else:
                raise TypeError(s)
            ops[ins.label] = op
        events = tuple(
            (SysEvent(FETCH, q.pid, x), SysEvent(WRLLC, q.pid, x), SysEvent(EVICT, q.pid, x))
            for x in p.var_names
        )
        tables.append(_ProcTable(q.pid, ops, events))
    return _Compiled(
        tuple(tables), len(p.vars),
        tuple(Line(False, v) for v in range(n)), tuple(Line(True, v) for v in range(n)),
    )


_CACHE_ATTR = "_sisd_tables"


def _tables(p: Program, model: MemModel) -> _Compiled:
    # memoised on the (frozen) program instance
    cache = p.__dict__.setdefault(_CACHE_ATTR, {})
    model = MemModel(model)
    if model not in cache:
        cache[model] = _compile(to_si_view(p) if model is MemModel.SI else p)
    return cache[model]


def successor_function(p: Program, model: MemModel = MemModel.SISD
                       ) -> Callable[[Configuration], Iterator[tuple[Transition, Configuration]]]:
    """Return ``succ(c)`` yielding ``(transition, successor)`` pairs in the
    fixed enumeration order."""
    tables = _tables(p, model)
    if MemModel(model) is MemModel.SC:
        return lambda c: _successors_sc(tables, c)
    return lambda c: _successors_sisd(tables, c)


def _successors_sisd(tab: _Compiled, c: Configuration):
    locals_ = c.locals
    llc = c.llc
    for i, loc in enumerate(locals_):
        ptab = tab.procs[i]
        op = ptab.ops.get(loc.label)
        l1 = loc.l1
        if op is not None:
            code = op[0]
            new_loc = None
            new_llc = llc
            if code == _READ:
                e = l1[op[4]]
                if e is not None:
                    regs = loc.regs
                    r = op[3]
                    new_loc = LocalConf(op[2], regs[:r] + (e.value,) + regs[r + 1:], l1)
            elif code == _WRITE:
                x = op[3]
                if l1[x] is not None:
                    v = op[4](loc.regs)
                    new_loc = LocalConf(op[2], loc.regs, l1[:x] + (tab.dirty[v],) + l1[x + 1:])
            elif code == _ASSIGN:
                regs = loc.regs
                r = op[3]
                new_loc = LocalConf(op[2], regs[:r] + (op[4](regs),) + regs[r + 1:], l1)
            elif code == _BRANCH:
                target = op[4] if op[3](loc.regs) else op[2]
                new_loc = LocalConf(target, loc.regs, l1)
            elif code == _SYNCWR:
                x = op[3]
                if l1[x] is None:
                    v = op[4](loc.regs)
                    new_loc = LocalConf(op[2], loc.regs, l1)
                    new_llc = llc[:x] + (v,) + llc[x + 1:]
            elif code == _CAS:
                x = op[3]
                if l1[x] is None and llc[x] == op[4](loc.regs):
                    v = op[5](loc.regs)
                    new_loc = LocalConf(op[2], loc.regs, l1)
                    new_llc = llc[:x] + (v,) + llc[x + 1:]
            elif code == _FENCE:
                if all(e is None for e in l1):
                    new_loc = LocalConf(op[2], loc.regs, l1)
            elif code == _SSFENCE:
                if not any(e is not None and e.dirty for e in l1):
                    new_loc = LocalConf(op[2], loc.regs, l1)
            elif code == _LLFENCE:
                if not any(e is not None and not e.dirty for e in l1):
                    new_loc = LocalConf(op[2], loc.regs, l1)
            if new_loc is not None:
                yield op[1], Configuration(locals_[:i] + (new_loc,) + locals_[i + 1:], new_llc)
        for x, e in enumerate(l1):
            fetch, wrllc, evict = ptab.events[x]
            if e is None:
                new_loc = LocalConf(loc.label, loc.regs, l1[:x] + (tab.clean[llc[x]],) + l1[x + 1:])
                yield fetch, Configuration(locals_[:i] + (new_loc,) + locals_[i + 1:], llc)
            elif e.dirty:
                v = e.value
                new_loc = LocalConf(loc.label, loc.regs, l1[:x] + (tab.clean[v],) + l1[x + 1:])
                yield wrllc, Configuration(locals_[:i] + (new_loc,) + locals_[i + 1:],
                                           llc[:x] + (v,) + llc[x + 1:])
            else:
                new_loc = LocalConf(loc.label, loc.regs, l1[:x] + (None,) + l1[x + 1:])
                yield evict, Configuration(locals_[:i] + (new_loc,) + locals_[i + 1:], llc)


def _successors_sc(tab: _Compiled, c: Configuration):
    # single shared store: reads and writes act on the LLC, fences are skips
    locals_ = c.locals
    llc = c.llc
    for i, loc in enumerate(locals_):
        op = tab.procs[i].ops.get(loc.label)
        if op is None:
            continue
        code = op[0]
        regs = loc.regs
        new_llc = llc
        if code == _READ:
            r = op[3]
            new_loc = LocalConf(op[2], regs[:r] + (llc[op[4]],) + regs[r + 1:], loc.l1)
        elif code in (_WRITE, _SYNCWR):
            x = op[3]
            new_loc = LocalConf(op[2], regs, loc.l1)
            new_llc = llc[:x] + (op[4](regs),) + llc[x + 1:]
        elif code == _ASSIGN:
            r = op[3]
            new_loc = LocalConf(op[2], regs[:r] + (op[4](regs),) + regs[r + 1:], loc.l1)
        elif code == _BRANCH:
            new_loc = LocalConf(op[4] if op[3](regs) else op[2], regs, loc.l1)
        elif code == _CAS:
            x = op[3]
            if llc[x] != op[4](regs):
                continue
            new_loc = LocalConf(op[2], regs, loc.l1)
            new_llc = llc[:x] + (op[5](regs),) + llc[x + 1:]
        else:
            new_loc = LocalConf(op[2], regs, loc.l1)
        yield op[1], Configuration(locals_[:i] + (new_loc,) + locals_[i + 1:], new_llc)


def successors(p: Program, c: Configuration, model: MemModel = MemModel.SISD):
    return list(successor_function(p, model)(c))


def enabled_transitions(p: Program, c: Configuration,
                        model: MemModel = MemModel.SISD) -> list[Transition]:
    return [t for t, _ in successor_function(p, model)(c)]


def apply_transition(p: Program, c: Configuration, t: Transition,
                     model: MemModel = MemModel.SISD) -> Configuration:
    for u, d in successor_function(p, model)(c):
        if u == t:
            return d
    raise TransitionNotEnabled(f"{t} is not enabled")


# -- name-based views, for reports and tests ---------------------------------

def local_of(p: Program, c: Configuration, pid: str) -> LocalConf:
    return c.locals[p.pid_index[pid]]


def reg_value(p: Program, c: Configuration, pid: str, reg: str) -> int:
    q = p.process(pid)
    return c.locals[p.pid_index[pid]].regs[q.registers.index(reg)]


def llc_value(p: Program, c: Configuration, var: str) -> int:
    return c.llc[p.var_index[var]]


def l1_entry(p: Program, c: Configuration, pid: str, var: str) -> Line | None:
    return c.locals[p.pid_index[pid]].l1[p.var_index[var]]


def make_configuration(p: Program, labels: dict, llc: dict, regs: dict | None = None,
                       l1: dict | None = None) -> Configuration:
    """Build a configuration from names.

    ``labels`` maps pid to label, ``llc`` var to value, ``regs`` pid to
    {reg: value} (missing registers are 0) and ``l1`` pid to {var: Line}.
    """
    regs = regs or {}
    l1 = l1 or {}
    locals_ = []
    for q in p.procs:
        rv = regs.get(q.pid, {})
        lv = l1.get(q.pid, {})
        locals_.append(LocalConf(
            labels[q.pid],
            tuple(rv.get(r, 0) for r in q.registers),
            tuple(lv.get(x) for x in p.var_names),
        ))
    return Configuration(tuple(locals_), tuple(llc[x] for x in p.var_names))
