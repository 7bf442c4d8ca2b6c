"""Program model: AST, parser, pretty-printer and fence insertion.

The language is a small assembly-like notation for concurrent programs::

    domain 2;            # optional, otherwise inferred from the literals
    data x=0 y=*
    process P0
    registers $r0
    begin
      L1: x := 1;
      L2: $r0 := y;
    end

Statements: ``x := e`` (write), ``$r := x`` (read), ``$r := e``,
``fence``, ``ssfence``, ``llfence``, ``syncwr: x := e``,
``cas(x, e0, e1)`` and ``cbranch (b) L``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, NamedTuple, Union

END = "end"
STAR = "*"

FENCE = "fence"
SSFENCE = "ssfence"
LLFENCE = "llfence"
SYNCWR = "syncwr"
FENCE_KINDS = (FENCE, SSFENCE, LLFENCE, SYNCWR)

# order of fences inserted after the same label
INSERTION_ORDER = (SSFENCE, LLFENCE, FENCE)

KEYWORDS = frozenset(
    ["data", "process", "registers", "begin", "end", "fence", "ssfence",
     "llfence", "syncwr", "cas", "cbranch", "domain"]
)


class ProgramError(ValueError):
    """Invalid program text or AST. Carries an optional source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


class UnknownLabel(ProgramError, KeyError):
    def __init__(self, label: str):
        super().__init__(f"unknown label {label!r}")

    def __str__(self) -> str:
        return self.args[0]


class ParseError(ProgramError):
    pass


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - = != < <= > >= && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[Const, Reg, BinOp, Not]

ARITH_OPS = ("+", "-")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


def expr_registers(e: Expr) -> set[str]:
    if isinstance(e, Reg):
        return {e.name}
    if isinstance(e, BinOp):
        return expr_registers(e.left) | expr_registers(e.right)
    if isinstance(e, Not):
        return expr_registers(e.operand)
    return set()


def expr_literals(e: Expr) -> list[int]:
    if isinstance(e, Const):
        return [e.value]
    if isinstance(e, BinOp):
        return expr_literals(e.left) + expr_literals(e.right)
    if isinstance(e, Not):
        return expr_literals(e.operand)
    return []


def compile_expr(e: Expr, reg_index: dict[str, int], n: int):
    """Turn an expression into a function of the register tuple.

    Arithmetic wraps modulo the domain size; boolean forms return bool.
    """
    if isinstance(e, Const):
        v = e.value
        return lambda regs: v
    if isinstance(e, Reg):
        i = reg_index[e.name]
        return lambda regs: regs[i]
    if isinstance(e, Not):
        f = compile_expr(e.operand, reg_index, n)
        return lambda regs: not f(regs)
    lf = compile_expr(e.left, reg_index, n)
    rf = compile_expr(e.right, reg_index, n)
    op = e.op
    if op == "+":
        return lambda regs: (lf(regs) + rf(regs)) % n
    if op == "-":
        return lambda regs: (lf(regs) - rf(regs)) % n
    if op == "=":
        return lambda regs: lf(regs) == rf(regs)
    if op == "!=":
        return lambda regs: lf(regs) != rf(regs)
    if op == "<":
        return lambda regs: lf(regs) < rf(regs)
    if op == "<=":
        return lambda regs: lf(regs) <= rf(regs)
    if op == ">":
        return lambda regs: lf(regs) > rf(regs)
    if op == ">=":
        return lambda regs: lf(regs) >= rf(regs)
    if op == "&&":
        return lambda regs: bool(lf(regs)) and bool(rf(regs))
    if op == "||":
        return lambda regs: bool(lf(regs)) or bool(rf(regs))
    raise ProgramError(f"unknown operator {op!r}")


_PREC = {"||": 1, "&&": 2, "=": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3, "+": 4, "-": 4}


def format_expr(e: Expr, parent: int = 0) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Reg):
        return e.name
    if isinstance(e, Not):
        return "!" + format_expr(e.operand, 5)
    prec = _PREC[e.op]
    # left-associative: the right operand needs parens at equal precedence
    text = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec + 1)}"
    return f"({text})" if prec < parent else text


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Write:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Read:
    reg: str
    var: str


@dataclass(frozen=True)
class RegAssign:
    reg: str
    expr: Expr


@dataclass(frozen=True)
class Fence:
    kind: str  # fence | ssfence | llfence


@dataclass(frozen=True)
class SyncWr:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Cas:
    var: str
    expected: Expr
    new: Expr


@dataclass(frozen=True)
class CBranch:
    cond: Expr
    target: str


Statement = Union[Write, Read, RegAssign, Fence, SyncWr, Cas, CBranch]


def format_stmt(s: Statement) -> str:
    if isinstance(s, Write):
        return f"{s.var} := {format_expr(s.expr)}"
    if isinstance(s, Read):
        return f"{s.reg} := {s.var}"
    if isinstance(s, RegAssign):
        return f"{s.reg} := {format_expr(s.expr)}"
    if isinstance(s, Fence):
        return s.kind
    if isinstance(s, SyncWr):
        return f"syncwr: {s.var} := {format_expr(s.expr)}"
    if isinstance(s, Cas):
        return f"cas({s.var}, {format_expr(s.expected)}, {format_expr(s.new)})"
    if isinstance(s, CBranch):
        return f"cbranch ({format_expr(s.cond)}) {s.target}"
    raise TypeError(s)


def stmt_vars(s: Statement) -> set[str]:
    if isinstance(s, (Write, Read, SyncWr, Cas)):
        return {s.var}
    return set()


def stmt_registers(s: Statement) -> set[str]:
    if isinstance(s, (Write, SyncWr)):
        return expr_registers(s.expr)
    if isinstance(s, Read):
        return {s.reg}
    if isinstance(s, RegAssign):
        return {s.reg} | expr_registers(s.expr)
    if isinstance(s, Cas):
        return expr_registers(s.expected) | expr_registers(s.new)
    if isinstance(s, CBranch):
        return expr_registers(s.cond)
    return set()


def stmt_literals(s: Statement) -> list[int]:
    if isinstance(s, (Write, SyncWr, RegAssign)):
        return expr_literals(s.expr)
    if isinstance(s, Cas):
        return expr_literals(s.expected) + expr_literals(s.new)
    if isinstance(s, CBranch):
        return expr_literals(s.cond)
    return []


# -- program -----------------------------------------------------------------

@dataclass(frozen=True)
class Instruction:
    label: str
    stmt: Statement
    # label this fence was inserted after, for fences added by insert_fences
    anchor: str | None = None


@dataclass(frozen=True)
class Process:
    pid: str
    registers: tuple[str, ...]
    instrs: tuple[Instruction, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(i.label for i in self.instrs)


class FenceConstraint(NamedTuple):
    """Insert a fence of ``kind`` right after ``label`` (or turn the write
    at ``label`` into a syncwr when ``kind == 'syncwr'``)."""

    label: str
    kind: str

    def __str__(self) -> str:
        return f"({self.label},{self.kind})"


@dataclass(frozen=True)
class Program:
    vars: tuple[tuple[str, object], ...]  # (name, int value or STAR)
    procs: tuple[Process, ...]
    domain: int

    @cached_property
    def var_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.vars)

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.var_names)}

    @cached_property
    def pid_index(self) -> dict[str, int]:
        return {p.pid: i for i, p in enumerate(self.procs)}

    @cached_property
    def _label_table(self) -> dict[str, tuple[int, int]]:
        return {
            ins.label: (pi, ii)
            for pi, p in enumerate(self.procs)
            for ii, ins in enumerate(p.instrs)
        }

    @property
    def labels(self) -> list[str]:
        return [ins.label for p in self.procs for ins in p.instrs]

    def has_label(self, label: str) -> bool:
        return label in self._label_table

    def instruction(self, label: str) -> Instruction:
        try:
            pi, ii = self._label_table[label]
        except KeyError:
            raise UnknownLabel(label) from None
        return self.procs[pi].instrs[ii]

    def stmt_of(self, label: str) -> Statement:
        return self.instruction(label).stmt

    def proc_of(self, label: str) -> Process:
        try:
            return self.procs[self._label_table[label][0]]
        except KeyError:
            raise UnknownLabel(label) from None

    def process(self, pid: str) -> Process:
        return self.procs[self.pid_index[pid]]

    def next_of(self, label: str) -> str:
        return next_of(self, label)

    def __str__(self) -> str:
        return format_program(self)


def next_of(p: Program, label: str) -> str:
    """Label of the statement following ``label`` in its process, or END."""
    try:
        pi, ii = p._label_table[label]
    except KeyError:
        raise UnknownLabel(label) from None
    instrs = p.procs[pi].instrs
    return instrs[ii + 1].label if ii + 1 < len(instrs) else END


def format_program(p: Program) -> str:
    out = [f"domain {p.domain};"]
    out.append("data " + " ".join(f"{n}={v}" for n, v in p.vars))
    for proc in p.procs:
        out.append(f"process {proc.pid}")
        out.append("registers" + "".join(" " + r for r in proc.registers))
        out.append("begin")
        for ins in proc.instrs:
            out.append(f"  {ins.label}: {format_stmt(ins.stmt)};")
        out.append("end")
    return "\n".join(out) + "\n"


def validate_program(p: Program, explicit_domain: bool = True, positions=None) -> None:
    """Check the structural invariants; raise ProgramError on the first failure.

    ``positions`` optionally maps labels to (line, col) for error messages.
    """
    positions = positions or {}

    def fail(msg, label=None):
        line, col = positions.get(label, (None, None))
        raise ProgramError(msg, line, col)

    if p.domain < 1:
        fail("domain must be positive")
    if not p.vars:
        fail("at least one shared variable is required")
    if not p.procs:
        fail("at least one process is required")
    seen_vars: set[str] = set()
    for name, init in p.vars:
        if name in seen_vars:
            fail(f"duplicate variable {name!r}")
        seen_vars.add(name)
        if init != STAR and not (isinstance(init, int) and 0 <= init < p.domain):
            fail(f"initial value of {name} outside domain 0..{p.domain - 1}")
    pids: set[str] = set()
    labels: set[str] = set()
    for proc in p.procs:
        if proc.pid in pids:
            fail(f"duplicate process {proc.pid!r}")
        pids.add(proc.pid)
        if not proc.instrs:
            fail(f"process {proc.pid} has no statements")
        if len(set(proc.registers)) != len(proc.registers):
            fail(f"duplicate register in process {proc.pid}")
        for ins in proc.instrs:
            if ins.label in labels:
                fail(f"duplicate label {ins.label!r}", ins.label)
            labels.add(ins.label)
    for proc in p.procs:
        own = set(proc.labels)
        regs = set(proc.registers)
        for ins in proc.instrs:
            s = ins.stmt
            for v in stmt_vars(s):
                if v not in seen_vars:
                    fail(f"undeclared variable {v!r} at {ins.label}", ins.label)
            for r in stmt_registers(s):
                if r not in regs:
                    fail(f"undeclared register {r!r} in process {proc.pid}", ins.label)
            if isinstance(s, CBranch) and s.target not in own:
                fail(f"branch target {s.target!r} is not a label of {proc.pid}", ins.label)
            if explicit_domain:
                for v in stmt_literals(s):
                    if not 0 <= v < p.domain:
                        fail(f"literal {v} at {ins.label} outside domain 0..{p.domain - 1}",
                             ins.label)


# -- parser ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<reg>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<id>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||[≠∧∨¬]|[=<>!+\-();:,*{}.])
    """,
    re.VERBOSE,
)

_UNICODE_OPS = {"≠": "!=", "∧": "&&", "∨": "||", "¬": "!", "==": "="}


class Token(NamedTuple):
    kind: str  # num reg id op kw eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind not in ("ws", "comment"):
            if kind == "id" and tok in KEYWORDS:
                kind = "kw"
            if kind == "op":
                tok = _UNICODE_OPS.get(tok, tok)
            tokens.append(Token(kind, tok, line, col))
        nl = tok.count("\n") if kind == "ws" else 0
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with the usual expect/accept helpers."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind in ("op", "kw") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return tok

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return tok

    def error(self, msg: str):
        tok = self.peek()
        raise ParseError(msg, tok.line, tok.col)


def parse_arith(ts: TokenStream) -> Expr:
    left = _parse_term(ts)
    while ts.peek().kind == "op" and ts.peek().text in ARITH_OPS:
        op = ts.next().text
        left = BinOp(op, left, _parse_term(ts))
    return left


def _parse_term(ts: TokenStream) -> Expr:
    tok = ts.peek()
    if tok.kind == "num":
        ts.next()
        return Const(int(tok.text))
    if tok.kind == "reg":
        ts.next()
        return Reg(tok.text)
    if ts.accept("("):
        e = parse_arith(ts)
        ts.expect(")")
        return e
    ts.error(f"expected expression, found {tok.text or 'end of input'!r}")


def parse_bool(ts: TokenStream) -> Expr:
    left = _parse_conj(ts)
    while ts.accept("||"):
        left = BinOp("||", left, _parse_conj(ts))
    return left


def _parse_conj(ts: TokenStream) -> Expr:
    left = _parse_neg(ts)
    while ts.accept("&&"):
        left = BinOp("&&", left, _parse_neg(ts))
    return left


def _parse_neg(ts: TokenStream) -> Expr:
    if ts.accept("!"):
        return Not(_parse_neg(ts))
    start = ts.pos
    try:
        left = parse_arith(ts)
        tok = ts.peek()
        if tok.kind != "op" or tok.text not in CMP_OPS:
            ts.error(f"expected comparison, found {tok.text or 'end of input'!r}")
        ts.next()
        return BinOp(tok.text, left, parse_arith(ts))
    except ParseError:
        if not ts.tokens[start].text == "(":
            raise
        ts.pos = start + 1
        e = parse_bool(ts)
        ts.expect(")")
        return e


def _parse_stmt(ts: TokenStream) -> Statement:
    tok = ts.peek()
    if tok.kind == "kw" and tok.text in (FENCE, SSFENCE, LLFENCE):
        ts.next()
        return Fence(tok.text)
    if ts.accept("syncwr"):
        ts.accept(":")
        var = ts.expect_kind("id", "variable").text
        ts.expect(":=")
        return SyncWr(var, parse_arith(ts))
    if ts.accept("cas"):
        ts.expect("(")
        var = ts.expect_kind("id", "variable").text
        ts.expect(",")
        e0 = parse_arith(ts)
        ts.expect(",")
        e1 = parse_arith(ts)
        ts.expect(")")
        return Cas(var, e0, e1)
    if ts.accept("cbranch"):
        ts.expect("(")
        cond = parse_bool(ts)
        ts.expect(")")
        target = ts.expect_kind("id", "label").text
        return CBranch(cond, target)
    if tok.kind == "reg":
        ts.next()
        ts.expect(":=")
        nxt = ts.peek()
        if nxt.kind == "id":
            ts.next()
            return Read(tok.text, nxt.text)
        return RegAssign(tok.text, parse_arith(ts))
    if tok.kind == "id":
        ts.next()
        ts.expect(":=")
        return Write(tok.text, parse_arith(ts))
    ts.error(f"expected statement, found {tok.text or 'end of input'!r}")


def parse_program(text: str) -> Program:
    """Parse and validate program text."""
    ts = TokenStream(tokenize(text))
    domain = None
    if ts.accept("domain"):
        domain = int(ts.expect_kind("num", "domain size").text)
        ts.accept(";")
        if domain < 1:
            raise ParseError("domain must be positive", ts.peek().line, ts.peek().col)
    ts.expect("data")
    vars_: list[tuple[str, object]] = []
    while ts.peek().kind == "id":
        name = ts.next().text
        ts.expect("=")
        if ts.accept("*"):
            vars_.append((name, STAR))
        else:
            vars_.append((name, int(ts.expect_kind("num", "initial value").text)))
        ts.accept(",")
    if not vars_:
        ts.error("expected variable declaration")
    procs = []
    positions: dict[str, tuple[int, int]] = {}
    while ts.at("process"):
        ts.next()
        pid = ts.expect_kind("id", "process name").text
        ts.expect("registers")
        regs = []
        while ts.peek().kind == "reg":
            regs.append(ts.next().text)
            ts.accept(",")
        ts.expect("begin")
        instrs = []
        while not ts.at("end"):
            ltok = ts.expect_kind("id", "label")
            ts.expect(":")
            stmt = _parse_stmt(ts)
            ts.expect(";")
            if ltok.text in positions:
                raise ProgramError(f"duplicate label {ltok.text!r}", ltok.line, ltok.col)
            positions[ltok.text] = (ltok.line, ltok.col)
            instrs.append(Instruction(ltok.text, stmt))
        ts.expect("end")
        if not instrs:
            ts.error(f"process {pid} has no statements")
        procs.append(Process(pid, tuple(regs), tuple(instrs)))
    if not procs:
        ts.error("expected 'process'")
    if ts.peek().kind != "eof":
        ts.error(f"unexpected {ts.peek().text!r}")

    explicit = domain is not None
    if domain is None:
        lits = [v for _, v in vars_ if v != STAR]
        lits += [x for p in procs for ins in p.instrs for x in stmt_literals(ins.stmt)]
        domain = max(2, 1 + max(lits, default=0))
    prog = Program(tuple(vars_), tuple(procs), domain)
    validate_program(prog, explicit_domain=explicit, positions=positions)
    return prog


# -- fence insertion ---------------------------------------------------------

def present_constraints(p: Program) -> set[FenceConstraint]:
    """Constraints already realised in ``p``: fences added by insert_fences
    (recognised by their anchor) and syncwr statements."""
    out = set()
    for proc in p.procs:
        for ins in proc.instrs:
            if ins.anchor is not None and isinstance(ins.stmt, Fence):
                out.add(FenceConstraint(ins.anchor, ins.stmt.kind))
            elif isinstance(ins.stmt, SyncWr):
                out.add(FenceConstraint(ins.label, SYNCWR))
    return out


def anchor_of(p: Program, label: str) -> str:
    """The original label a (possibly inserted) label stands for."""
    ins = p.instruction(label)
    return ins.anchor if ins.anchor is not None else label


def insert_fences(p: Program, constraints: Iterable[FenceConstraint]) -> Program:
    """Return ``p`` with every constraint applied; ``p`` is left untouched.

    Fences attached to the same label are emitted as ssfence, llfence, fence
    and labelled ``<label>.f1``, ``<label>.f2``, ...
    """
    by_label: dict[str, set[str]] = {}
    for c in constraints:
        c = FenceConstraint(*c)
        if c.kind not in FENCE_KINDS:
            raise ProgramError(f"unknown fence kind {c.kind!r}")
        if not p.has_label(c.label):
            raise ProgramError(f"unknown label {c.label!r}")
        if c.kind == SYNCWR and not isinstance(p.stmt_of(c.label), Write):
            raise ProgramError(f"syncwr constraint at {c.label} does not target a write")
        by_label.setdefault(c.label, set()).add(c.kind)
    if not by_label:
        return p

    used = set(p.labels)
    procs = []
    for proc in p.procs:
        instrs = []
        for ins in proc.instrs:
            kinds = by_label.get(ins.label, ())
            if SYNCWR in kinds:
                ins = replace(ins, stmt=SyncWr(ins.stmt.var, ins.stmt.expr))
            instrs.append(ins)
            k = 1
            for kind in INSERTION_ORDER:
                if kind not in kinds:
                    continue
                while f"{ins.label}.f{k}" in used:
                    k += 1
                fresh = f"{ins.label}.f{k}"
                used.add(fresh)
                instrs.append(Instruction(fresh, Fence(kind), anchor=ins.anchor or ins.label))
        procs.append(replace(proc, instrs=tuple(instrs)))
    return replace(p, procs=tuple(procs))
