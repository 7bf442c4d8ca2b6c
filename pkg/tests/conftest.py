from __future__ import annotations

import sys
from pathlib import Path

import pytest

from sisdfence.litmus import default_corpus
from sisdfence.program import parse_program
from sisdfence.reachability import parse_property
from sisdfence.semantics import apply_transition, initial_configurations, parse_transition
from sisdfence.reachability import WitnessRun

LITMUS = default_corpus()
OVERVIEW = LITMUS.parent / "overview"


def load(name: str, prop: str | None = None, where: Path = OVERVIEW):
    """Program ``name`` (and optionally property file ``prop``) from a corpus dir."""
    p = parse_program((where / f"{name}.sisd").read_text())
    if prop is None:
        return p
    return p, parse_property((where / f"{prop}.prop").read_text(), p)


def load_litmus(name: str):
    return load(name, name, LITMUS)


def run_of(p, steps: list[str], model="sisd") -> WitnessRun:
    """Build a run from transition names, checking each step is enabled."""
    (c,) = initial_configurations(p)
    out = []
    for s in steps:
        t = parse_transition(s)
        c = apply_transition(p, c, t, model)
        out.append((t, c))
    return WitnessRun(initial_configurations(p)[0], tuple(out))


# the run pi_1 of the running example, with every starred step expanded
PI1 = [
    "fetch(P1,z)", "L4", "fetch(P0,x)", "L1", "fetch(P0,y)", "L2",
    "fetch(P1,x)", "L5", "wrllc(P0,x)", "evict(P0,x)", "wrllc(P0,y)", "evict(P0,y)",
    "fetch(P1,y)", "L6", "L7",
]


@pytest.fixture(scope="session")
def running():
    return load("running_p", "phi")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report():
        terminalreporter.write_line(line)
