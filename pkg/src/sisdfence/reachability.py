"""Safety properties and explicit-state breadth-first reachability."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Union

from .program import END, ParseError, Program, ProgramError, TokenStream, tokenize
from .semantics import (
    Configuration, MemModel, Transition, TransitionNotEnabled, apply_transition,
    initial_configurations, successor_function,
)

DEFAULT_MAX_STATES = 10_000_000


class At(NamedTuple):
    pid: str
    label: str  # a statement label or END

    def __str__(self):
        return f"{self.pid} at {self.label}"


class RegEq(NamedTuple):
    pid: str
    reg: str
    value: int

    def __str__(self):
        return f"{self.pid}.{self.reg} = {self.value}"


class LlcEq(NamedTuple):
    var: str
    value: int

    def __str__(self):
        return f"llc.{self.var} = {self.value}"


Atom = Union[At, RegEq, LlcEq]


@dataclass(frozen=True)
class SafetyProperty:
    """The bad configurations: a disjunction of conjunctions of atoms."""

    bad: tuple[tuple[Atom, ...], ...] = ()

    def __or__(self, other: "SafetyProperty") -> "SafetyProperty":
        return SafetyProperty(self.bad + other.bad)

    def __str__(self) -> str:
        return format_property(self)


def format_property(prop: SafetyProperty) -> str:
    return "".join("bad { " + "; ".join(map(str, conj)) + " }\n" for conj in prop.bad)


def parse_property(text: str, program: Program | None = None) -> SafetyProperty:
    """Parse ``bad { P1 at end; P1.$r2 = 1; llc.x = 0 }`` blocks.

    When ``program`` is given the property is validated against it.
    """
    ts = TokenStream(tokenize(text))
    disjuncts = []
    while ts.peek().kind != "eof":
        tok = ts.expect_kind("id", "'bad'")
        if tok.text != "bad":
            raise ParseError(f"expected 'bad', found {tok.text!r}", tok.line, tok.col)
        ts.expect("{")
        atoms = []
        while not ts.at("}"):
            atoms.append(_parse_atom(ts))
            if not ts.accept(";"):
                break
        ts.expect("}")
        disjuncts.append(tuple(atoms))
    prop = SafetyProperty(tuple(disjuncts))
    if program is not None:
        validate_property(prop, program)
    return prop


def _parse_atom(ts: TokenStream) -> Atom:
    tok = ts.peek()
    # the tokenizer folds "llc.x" and "P1.L3"-style dotted names into one id
    if tok.kind == "id" and tok.text.startswith("llc."):
        ts.next()
        ts.expect("=")
        return LlcEq(tok.text[4:], int(ts.expect_kind("num", "value").text))
    pid_tok = ts.expect_kind("id", "process name")
    pid = pid_tok.text
    nxt = ts.peek()
    if nxt.kind == "id" and nxt.text == "at":
        ts.next()
        if ts.accept("end"):
            return At(pid, END)
        return At(pid, ts.expect_kind("id", "label").text)
    if pid.endswith(".") or ts.at("."):
        pid = pid.rstrip(".")
        ts.accept(".")
        reg = ts.expect_kind("reg", "register").text
        ts.expect("=")
        return RegEq(pid, reg, int(ts.expect_kind("num", "value").text))
    ts.error(f"expected 'at' or '.$reg' after {pid!r}")


def validate_property(prop: SafetyProperty, p: Program) -> None:
    for conj in prop.bad:
        for a in conj:
            if isinstance(a, LlcEq):
                if a.var not in p.var_index:
                    raise ProgramError(f"property: unknown variable {a.var!r}")
                value = a.value
            else:
                if a.pid not in p.pid_index:
                    raise ProgramError(f"property: unknown process {a.pid!r}")
                if isinstance(a, At):
                    if a.label != END and a.label not in p.process(a.pid).labels:
                        raise ProgramError(f"property: {a.label!r} is not a label of {a.pid}")
                    continue
                if a.reg not in p.process(a.pid).registers:
                    raise ProgramError(f"property: unknown register {a.pid}.{a.reg}")
                value = a.value
            if not 0 <= value < p.domain:
                raise ProgramError(f"property: value {value} outside domain 0..{p.domain - 1}")


def compile_property(prop: SafetyProperty, p: Program) -> Callable[[Configuration], bool]:
    """Return a predicate on configurations of ``p`` deciding membership in Bad."""
    conjs = []
    for conj in prop.bad:
        tests = []
        for a in conj:
            if isinstance(a, At):
                tests.append((0, p.pid_index[a.pid], a.label))
            elif isinstance(a, RegEq):
                regs = p.process(a.pid).registers
                tests.append((1, p.pid_index[a.pid], regs.index(a.reg), a.value))
            else:
                tests.append((2, p.var_index[a.var], a.value))
        conjs.append(tuple(tests))

    def pred(c: Configuration) -> bool:
        for tests in conjs:
            for t in tests:
                if t[0] == 0:
                    if c.locals[t[1]].label != t[2]:
                        break
                elif t[0] == 1:
                    if c.locals[t[1]].regs[t[2]] != t[3]:
                        break
                elif c.llc[t[1]] != t[2]:
                    break
            else:
                return True
        return False

    return pred


def eval_property(prop: SafetyProperty, p: Program, c: Configuration) -> bool:
    """True iff ``c`` satisfies some conjunction of ``prop``."""
    return compile_property(prop, p)(c)


def end_state_property(p: Program, regs: dict[tuple[str, str], int] | Iterable = (),
                       llc: dict[str, int] | None = None) -> SafetyProperty:
    """Litmus-style assertion: every process has terminated and the given
    register/LLC values hold."""
    atoms: list[Atom] = [At(q.pid, END) for q in p.procs]
    items = regs.items() if isinstance(regs, dict) else regs
    atoms += [RegEq(pid, r, v) for (pid, r), v in items]
    atoms += [LlcEq(x, v) for x, v in (llc or {}).items()]
    return SafetyProperty((tuple(atoms),))


# -- search ------------------------------------------------------------------

class StateBudgetExceeded(RuntimeError):
    """The search visited more configurations than allowed; the verdict is
    inconclusive (never to be read as "unreachable")."""

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"state budget of {limit} configurations exceeded")


@dataclass(frozen=True)
class WitnessRun:
    initial: Configuration
    steps: tuple[tuple[Transition, Configuration], ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.initial

    @property
    def transitions(self) -> list[Transition]:
        return [t for t, _ in self.steps]

    def configuration_before(self, i: int) -> Configuration:
        return self.initial if i == 0 else self.steps[i - 1][1]


@dataclass
class SearchResult:
    witness: WitnessRun | None
    states: int
    model: MemModel
    visited: set | None = field(default=None, repr=False)

    @property
    def reachable(self) -> bool:
        return self.witness is not None


def explore(p: Program, prop: SafetyProperty | None, model: MemModel = MemModel.SISD,
            max_states: int = DEFAULT_MAX_STATES, keep_states: bool = False) -> SearchResult:
    """Breadth-first search from all initial configurations.

    Stops at the first configuration satisfying ``prop`` and returns a
    shortest witness; with ``prop=None`` explores the whole graph.
    """
    model = MemModel(model)
    succ = successor_function(p, model)
    bad = compile_property(prop, p) if prop is not None else (lambda c: False)
    parent: dict[Configuration, tuple | None] = {}
    frontier: deque[Configuration] = deque()

    def result(hit: Configuration | None) -> SearchResult:
        witness = _trace(parent, hit) if hit is not None else None
        return SearchResult(witness, len(parent), model, set(parent) if keep_states else None)

    for c in initial_configurations(p):
        if c in parent:
            continue
        parent[c] = None
        if bad(c):
            return result(c)
        frontier.append(c)
    while frontier:
        c = frontier.popleft()
        for t, d in succ(c):
            if d in parent:
                continue
            parent[d] = (c, t)
            if bad(d):
                return result(d)
            if len(parent) > max_states:
                raise StateBudgetExceeded(max_states)
            frontier.append(d)
    return result(None)


def _trace(parent: dict, c: Configuration) -> WitnessRun:
    steps = []
    while parent[c] is not None:
        prev, t = parent[c]
        steps.append((t, c))
        c = prev
    steps.reverse()
    return WitnessRun(c, tuple(steps))


def reachable(p: Program, prop: SafetyProperty, model: MemModel = MemModel.SISD,
              max_states: int = DEFAULT_MAX_STATES) -> WitnessRun | None:
    """A shortest run into ``prop``'s bad set, or None if there is none."""
    return explore(p, prop, model, max_states).witness


def reachable_configurations(p: Program, model: MemModel = MemModel.SISD,
                             max_states: int = DEFAULT_MAX_STATES) -> set[Configuration]:
    return explore(p, None, model, max_states, keep_states=True).visited


def replay(p: Program, run: WitnessRun, model: MemModel = MemModel.SISD,
           prop: SafetyProperty | None = None) -> bool:
    """Check that every step of ``run`` is a legal transition (and, if given,
    that the final configuration is bad)."""
    if run.initial not in initial_configurations(p):
        return False
    c = run.initial
    for t, d in run.steps:
        try:
            if apply_transition(p, c, t, model) != d:
                return False
        except TransitionNotEnabled:
            return False
        c = d
    return prop is None or eval_property(prop, p, c)
