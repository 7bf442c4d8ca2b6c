"""Litmus corpus runner.

A corpus is a directory of ``NAME.sisd`` programs, each with a sibling
``NAME.prop`` property and an expectation header in the program text::

    # expect: sisd=sat sc=unsat
"""
from __future__ import annotations

import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .program import parse_program
from .reachability import DEFAULT_MAX_STATES, explore, parse_property
from .semantics import MemModel

_EXPECT_RE = re.compile(r"^\s*#\s*expect\s*:(.*)$", re.MULTILINE)
VERDICTS = ("sat", "unsat")


class LitmusError(ValueError):
    pass


@dataclass
class LitmusRow:
    name: str
    model: str
    expected: str
    actual: str
    states: int
    seconds: float

    @property
    def passed(self) -> bool:
        return self.expected == self.actual

    def to_json(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def default_corpus() -> Path:
    return Path(str(resources.files("sisdfence") / "corpus" / "litmus"))


def parse_expectations(text: str, where: str = "<text>") -> dict[str, str]:
    found = _EXPECT_RE.findall(text)
    if len(found) != 1:
        raise LitmusError(f"{where}: expected exactly one '# expect:' header")
    out = {}
    for item in found[0].split():
        model, sep, verdict = item.partition("=")
        if not sep or verdict not in VERDICTS:
            raise LitmusError(f"{where}: bad expectation {item!r}")
        try:
            model = MemModel(model).value
        except ValueError:
            raise LitmusError(f"{where}: unknown model {model!r}") from None
        out[model] = verdict
    if not out:
        raise LitmusError(f"{where}: empty expectation header")
    return out


def corpus_entries(directory: Path) -> list[Path]:
    return sorted(Path(directory).glob("*.sisd"))


def run_entry(path: Path, max_states: int = DEFAULT_MAX_STATES) -> list[LitmusRow]:
    path = Path(path)
    text = path.read_text()
    expect = parse_expectations(text, str(path))
    prop_path = path.with_suffix(".prop")
    if not prop_path.exists():
        raise LitmusError(f"{path}: missing property file {prop_path.name}")
    program = parse_program(text)
    prop = parse_property(prop_path.read_text(), program)
    rows = []
    for model, expected in expect.items():
        start = time.perf_counter()
        res = explore(program, prop, MemModel(model), max_states)
        rows.append(LitmusRow(path.stem, model, expected,
                              "sat" if res.reachable else "unsat", res.states,
                              round(time.perf_counter() - start, 3)))
    return rows


def run_corpus(directory: Path, jobs: int = 1,
               max_states: int = DEFAULT_MAX_STATES) -> list[LitmusRow]:
    entries = corpus_entries(directory)
    if jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_entry, entries, [max_states] * len(entries)))
    else:
        results = [run_entry(e, max_states) for e in entries]
    return [row for rows in results for row in rows]


def format_table(rows: list[LitmusRow]) -> str:
    lines = [f"{'test':<10} {'model':<5} {'expect':<6} {'got':<6} {'states':>9}  result"]
    for r in rows:
        lines.append(f"{r.name:<10} {r.model:<5} {r.expected:<6} {r.actual:<6} "
                     f"{r.states:>9}  {'ok' if r.passed else 'MISMATCH'}")
    return "\n".join(lines)
