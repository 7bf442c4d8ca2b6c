from __future__ import annotations

import pytest

from sisdfence.program import FENCE, LLFENCE, SSFENCE, FenceConstraint, ProgramError, insert_fences
from sisdfence.reachability import (
    At, LlcEq, RegEq, SafetyProperty, StateBudgetExceeded, compile_property, eval_property,
    explore, format_property, parse_property, reachable, replay,
)
from sisdfence.semantics import (
    Exec, MemModel, initial_configurations, successor_function,
)

from conftest import PI1, load_litmus, run_of

SISD, SI, SC = MemModel.SISD, MemModel.SI, MemModel.SC
F1 = {FenceConstraint("L1", SSFENCE), FenceConstraint("L6", LLFENCE)}
F2 = {FenceConstraint("L1", FENCE), FenceConstraint("L6", FENCE)}


def test_eval_property_on_pi1(running):
    p, phi = running
    run = run_of(p, PI1)
    assert eval_property(phi, p, run.final)
    assert not eval_property(phi, p, run.initial)
    assert not eval_property(SafetyProperty(()), p, run.final)
    assert eval_property(SafetyProperty(((),)), p, run.initial)


def test_llc_atoms_and_disjunction(running):
    p, _ = running
    c0 = initial_configurations(p)[0]
    a = SafetyProperty(((LlcEq("x", 1),),))
    b = SafetyProperty(((LlcEq("x", 0), At("P0", "L1")),))
    assert not eval_property(a, p, c0)
    assert eval_property(a | b, p, c0)


def test_property_text_round_trip(running):
    p, _ = running
    text = "bad { P1 at end; P1.$r2 = 1; llc.x = 0 }\nbad { P0 at L2 }"
    prop = parse_property(text, p)
    assert prop.bad == (
        (At("P1", "end"), RegEq("P1", "$r2", 1), LlcEq("x", 0)),
        (At("P0", "L2"),),
    )
    assert parse_property(format_property(prop), p) == prop


@pytest.mark.parametrize("text", [
    "bad { P9 at end }", "bad { P1 at L1 }", "bad { P1.$r0 = 1 }",
    "bad { llc.w = 0 }", "bad { P1.$r2 = 7 }", "bad { P1 at }",
])
def test_invalid_properties(running, text):
    p, _ = running
    with pytest.raises(ProgramError):
        parse_property(text, p)


def test_running_example_witness(running):
    p, phi = running
    res = explore(p, phi, SISD)
    assert res.reachable
    assert replay(p, res.witness, SISD, phi)
    # shape of pi_1: P1 finishes with $r2=1 read after P0's y reached the LLC
    labels = [str(t) for t in res.witness.transitions if isinstance(t, Exec)]
    assert labels[-2:] == ["L6", "L7"]
    assert reachable(p, phi, SC) is None


@pytest.mark.parametrize("fences, expect", [
    (F1, False), (F2, False), ({FenceConstraint("L6", LLFENCE)}, True),
])
def test_fenced_running_example(running, fences, expect):
    p, phi = running
    assert (reachable(insert_fences(p, fences), phi, SISD) is not None) == expect


@pytest.mark.parametrize("name, sisd, sc", [
    ("sb", True, False), ("mp", True, False), ("wrc", True, False),
    ("sisdeg", True, False), ("lb", False, False),
])
def test_litmus_verdicts(name, sisd, sc):
    p, prop = load_litmus(name)
    for model, expect in ((SISD, sisd), (SC, sc)):
        w = reachable(p, prop, model)
        assert (w is not None) == expect
        if w is not None:
            assert replay(p, w, model, prop)


def test_budget_is_distinct_from_unreachable():
    p, prop = load_litmus("lb")
    with pytest.raises(StateBudgetExceeded):
        explore(p, prop, SISD, max_states=50)


def test_replay_rejects_tampered_runs(running):
    p, phi = running
    run = run_of(p, PI1)
    assert replay(p, run, SISD, phi)
    bad = type(run)(run.initial, run.steps[:3] + run.steps[4:])
    assert not replay(p, bad, SISD)
    assert not replay(p, run, SC)


def _level_oracle(p, prop, model):
    """Naive level-by-level enumeration without a global visited set.

    Returns the depth of the first level containing a bad configuration, or
    None once a level adds nothing new.
    """
    succ = successor_function(p, model)
    bad = compile_property(prop, p)
    level = set(initial_configurations(p))
    seen = set(level)
    depth = 0
    while level:
        if any(bad(c) for c in level):
            return depth
        level = {d for c in level for _, d in succ(c)}
        if level <= seen:
            return None
        seen |= level
        depth += 1
    return None


@pytest.mark.parametrize("model", [SISD, SI, SC])
@pytest.mark.parametrize("name", ["sb", "mp", "lb", "sisdeg", "wrc"])
def test_bfs_agrees_with_level_oracle(name, model):
    p, prop = load_litmus(name)
    w = reachable(p, prop, model)
    depth = _level_oracle(p, prop, model)
    if w is None:
        assert depth is None
    else:
        assert depth == len(w)


def test_witness_is_deterministic(running):
    p, phi = running
    assert reachable(p, phi) == reachable(p, phi)


def _sc_projection(prog):
    """SC-reachable (labels, registers, LLC) with every inserted fence label
    replaced by the first original label after it."""
    def original(label):
        while prog.has_label(label) and prog.instruction(label).anchor is not None:
            label = prog.next_of(label)
        return label

    visited = explore(prog, None, SC, keep_states=True).visited
    return {(tuple(original(loc.label) for loc in c.locals),
             tuple(loc.regs for loc in c.locals), c.llc) for c in visited}


@pytest.mark.parametrize("fences", [F1, F2, F1 | F2])
def test_sc_projections_ignore_fences(running, fences):
    p, _ = running
    assert _sc_projection(insert_fences(p, fences)) == _sc_projection(p)
