"""Verdicts, their JSON encoding, and human-readable traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .program import FenceConstraint, Program, Read, Write
from .reachability import WitnessRun
from .semantics import (
    EVICT, FETCH, WRLLC, Configuration, Exec, Line, LocalConf, SysEvent, parse_transition,
)

# verdict payloads
HOLDS = "holds"
VIOLATED = "violated"
OPTIMAL = "optimal"
UNCORRECTABLE = "uncorrectable"
BUDGET = "budget-exceeded"
PASS = "pass"
FAIL = "fail"


@dataclass
class Verdict:
    mode: str  # check | fencins | litmus
    verdict: str
    model: str | None = None
    witness: WitnessRun | None = None
    optimal_sets: list[frozenset] | None = None
    costs: list[int] | None = None
    rows: list[dict] | None = None
    stats: dict[str, Any] = field(default_factory=dict)

    def to_json(self, program: Program | None = None) -> dict:
        out: dict[str, Any] = {"mode": self.mode, "verdict": self.verdict}
        if self.model is not None:
            out["model"] = self.model
        if self.witness is not None:
            out["initial"] = config_to_json(program, self.witness.initial)
            out["witness"] = [
                {"t": str(t), "c": config_to_json(program, c)} for t, c in self.witness.steps
            ]
        if self.optimal_sets is not None:
            out["optimal_sets"] = [
                [{"label": c.label, "kind": c.kind} for c in sorted(s)]
                for s in self.optimal_sets
            ]
            out["costs"] = list(self.costs or [])
        if self.rows is not None:
            out["rows"] = self.rows
        out["stats"] = self.stats
        return out

    @classmethod
    def from_json(cls, data: dict, program: Program | None = None) -> "Verdict":
        witness = None
        if "witness" in data:
            if program is None:
                raise ValueError("a program is needed to decode a witness")
            witness = WitnessRun(
                config_from_json(program, data["initial"]),
                tuple((parse_transition(s["t"]), config_from_json(program, s["c"]))
                      for s in data["witness"]),
            )
        sets = None
        if "optimal_sets" in data:
            sets = [frozenset(FenceConstraint(c["label"], c["kind"]) for c in s)
                    for s in data["optimal_sets"]]
        return cls(
            mode=data["mode"], verdict=data["verdict"], model=data.get("model"),
            witness=witness, optimal_sets=sets,
            costs=data.get("costs") if sets is not None else None,
            rows=data.get("rows"), stats=data.get("stats", {}),
        )

    def dumps(self, program: Program | None = None) -> str:
        return json.dumps(self.to_json(program), indent=2, sort_keys=True)


def config_to_json(p: Program, c: Configuration) -> dict:
    procs = {}
    for q, loc in zip(p.procs, c.locals):
        procs[q.pid] = {
            "label": loc.label,
            "regs": dict(zip(q.registers, loc.regs)),
            "l1": {
                x: {"state": "dirty" if e.dirty else "clean", "value": e.value}
                for x, e in zip(p.var_names, loc.l1) if e is not None
            },
        }
    return {"llc": dict(zip(p.var_names, c.llc)), "procs": procs}


def config_from_json(p: Program, data: dict) -> Configuration:
    locals_ = []
    for q in p.procs:
        d = data["procs"][q.pid]
        l1 = d.get("l1", {})
        locals_.append(LocalConf(
            d["label"],
            tuple(d["regs"][r] for r in q.registers),
            tuple(Line(l1[x]["state"] == "dirty", l1[x]["value"]) if x in l1 else None
                  for x in p.var_names),
        ))
    return Configuration(tuple(locals_), tuple(data["llc"][x] for x in p.var_names))


# -- human-readable output ---------------------------------------------------

def format_configuration(p: Program, c: Configuration) -> str:
    parts = ["LLC: " + " ".join(f"{x}={v}" for x, v in zip(p.var_names, c.llc))]
    for q, loc in zip(p.procs, c.locals):
        regs = " ".join(f"{r}={v}" for r, v in zip(q.registers, loc.regs))
        cache = " ".join(
            f"{x}={e.value}{'!' if e.dirty else ''}"
            for x, e in zip(p.var_names, loc.l1) if e is not None
        )
        parts.append(f"{q.pid}: {loc.label} {regs} [{cache}]".replace("  ", " "))
    return " | ".join(parts)


def _accesses_var(p: Program, label: str, var: str) -> bool:
    s = p.stmt_of(label)
    return isinstance(s, (Read, Write)) and s.var == var


def compress_run(p: Program, run: WitnessRun) -> list[tuple[str, Configuration]]:
    """Fold a fetch directly before the access it serves into ``L*`` and a
    wrllc directly before the eviction of the same entry into ``evict*``."""
    steps = run.steps
    out = []
    i = 0
    while i < len(steps):
        t, c = steps[i]
        if i + 1 < len(steps):
            u, d = steps[i + 1]
            if (isinstance(t, SysEvent) and t.kind == FETCH and isinstance(u, Exec)
                    and p.has_label(u.label) and p.proc_of(u.label).pid == t.pid
                    and _accesses_var(p, u.label, t.var)):
                out.append((f"{u.label}*", d))
                i += 2
                continue
            if (isinstance(t, SysEvent) and t.kind == WRLLC and isinstance(u, SysEvent)
                    and u.kind == EVICT and (u.pid, u.var) == (t.pid, t.var)):
                out.append((f"evict*({t.pid},{t.var})", d))
                i += 2
                continue
        out.append((str(t), c))
        i += 1
    return out


def format_trace(p: Program, run: WitnessRun, verbose: bool = False) -> str:
    lines = [f"   init  {format_configuration(p, run.initial)}"] if verbose else []
    for k, (name, c) in enumerate(compress_run(p, run), 1):
        if verbose:
            lines.append(f"{k:4d}. {name:<16} {format_configuration(p, c)}")
        else:
            lines.append(f"{k:4d}. {name}")
    if not verbose:
        lines.append(f"final: {format_configuration(p, run.final)}")
    return "\n".join(lines)


def format_fence_set(fences) -> str:
    return "{" + ", ".join(f"({c.label},{c.kind})" for c in sorted(fences)) + "}"
