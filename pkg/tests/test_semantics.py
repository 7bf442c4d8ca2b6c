from __future__ import annotations

import random

import pytest

from sisdfence.program import SyncWr, Write, parse_program
from sisdfence.semantics import (
    Exec, MemModel, SysEvent, TransitionNotEnabled, apply_transition, clean, dirty,
    enabled_transitions, initial_configurations, l1_entry, llc_value, local_of,
    make_configuration, parse_transition, reg_value, to_si_view,
)

from conftest import LITMUS, PI1, load, run_of

SISD, SI, SC = MemModel.SISD, MemModel.SI, MemModel.SC


def test_initial_configuration_of_running_example(running):
    p, _ = running
    (c0,) = initial_configurations(p)
    assert c0 == make_configuration(p, {"P0": "L1", "P1": "L4"}, {"x": 0, "y": 0, "z": 0})
    assert all(e is None for loc in c0.locals for e in loc.l1)


@pytest.mark.parametrize("decl, n, count", [("x=*", 2, 2), ("x=* y=*", 3, 9), ("x=* y=1", 3, 3)])
def test_star_expansion(decl, n, count):
    p = parse_program(f"domain {n}; data {decl} process p registers begin A: x := 0; end")
    cs = initial_configurations(p)
    assert len(cs) == count == len(set(cs))


def test_c0_enables_only_fetches(running):
    p, _ = running
    (c0,) = initial_configurations(p)
    assert enabled_transitions(p, c0, SISD) == [
        SysEvent("fetch", pid, x) for pid in ("P0", "P1") for x in ("x", "y", "z")
    ]


def test_pi1_transitions_c2_c6_c7(running):
    p, _ = running
    run = run_of(p, PI1)
    c2 = run.steps[11][1]
    assert str(run.steps[11][0]) == "evict(P0,y)"
    assert local_of(p, c2, "P1").label == "L6"
    assert SysEvent("fetch", "P1", "y") in enabled_transitions(p, c2, SISD)
    c6 = apply_transition(p, c2, parse_transition("fetch(P1,y)"), SISD)
    assert l1_entry(p, c6, "P1", "y") == clean(1)
    assert c6.locals[0] == c2.locals[0] and c6.llc == c2.llc
    c7 = apply_transition(p, c6, Exec("L6"), SISD)
    assert local_of(p, c7, "P1").label == "L7"
    assert reg_value(p, c7, "P1", "$r2") == 1
    c3 = run.final
    assert local_of(p, c3, "P1").label == "end"
    assert (reg_value(p, c3, "P1", "$r2"), reg_value(p, c3, "P1", "$r3")) == (1, 0)


def test_wrllc_then_evict_commits_dirty_value():
    p = parse_program("domain 3; data x=0 process p registers begin A: x := 2; end")
    run = run_of(p, ["fetch(p,x)", "A", "wrllc(p,x)"])
    c = run.final
    assert l1_entry(p, c, "p", "x") == clean(2) and llc_value(p, c, "x") == 2
    d = apply_transition(p, c, parse_transition("evict(p,x)"))
    assert l1_entry(p, d, "p", "x") is None and llc_value(p, d, "x") == 2


FENCES = """
data x=0 y=0
process p registers $r begin
  F: fence; S: ssfence; L: llfence;
end
"""


@pytest.mark.parametrize("label, l1, enabled", [
    ("F", {}, True), ("F", {"x": clean(0)}, False), ("F", {"x": dirty(1)}, False),
    ("S", {"x": clean(0)}, True), ("S", {"x": dirty(1)}, False),
    ("L", {"x": dirty(1)}, True), ("L", {"x": clean(0)}, False),
    ("L", {"x": dirty(1), "y": clean(0)}, False),
])
def test_fence_premises(label, l1, enabled):
    p = parse_program(FENCES)
    c = make_configuration(p, {"p": label}, {"x": 0, "y": 0}, l1={"p": l1})
    assert (Exec(label) in enabled_transitions(p, c, SISD)) == enabled
    # under SC fences are skips, always enabled
    assert Exec(label) in enabled_transitions(p, c, SC)


ACCESS = """
domain 3;
data x=1
process p registers $r begin
  R: $r := x; W: x := 2; Y: syncwr x := 2; C: cas(x, 1, 0); A: $r := $r + 2;
  B: cbranch($r = 0) R;
end
"""


@pytest.mark.parametrize("label, entry, llc, enabled", [
    ("R", None, 1, False), ("R", clean(1), 1, True), ("R", dirty(2), 1, True),
    ("W", None, 1, False), ("W", clean(1), 1, True),
    ("Y", None, 1, True), ("Y", clean(1), 1, False), ("Y", dirty(1), 1, False),
    ("C", None, 1, True), ("C", None, 0, False), ("C", clean(1), 1, False),
    ("A", None, 1, True), ("B", None, 1, True),
])
def test_instruction_premises(label, entry, llc, enabled):
    p = parse_program(ACCESS)
    l1 = {"p": {"x": entry}} if entry else None
    c = make_configuration(p, {"p": label}, {"x": llc}, l1=l1)
    assert (Exec(label) in enabled_transitions(p, c, SISD)) == enabled


def test_instruction_effects():
    p = parse_program(ACCESS)
    c = make_configuration(p, {"p": "R"}, {"x": 1}, l1={"p": {"x": dirty(2)}})
    d = apply_transition(p, c, Exec("R"))
    assert reg_value(p, d, "p", "$r") == 2 and local_of(p, d, "p").label == "W"
    d = apply_transition(p, d, Exec("W"))
    assert l1_entry(p, d, "p", "x") == dirty(2) and llc_value(p, d, "x") == 1
    c = make_configuration(p, {"p": "Y"}, {"x": 1})
    d = apply_transition(p, c, Exec("Y"))
    assert llc_value(p, d, "x") == 2 and l1_entry(p, d, "p", "x") is None
    c = make_configuration(p, {"p": "C"}, {"x": 1})
    assert llc_value(p, apply_transition(p, c, Exec("C")), "x") == 0
    c = make_configuration(p, {"p": "A"}, {"x": 1}, regs={"p": {"$r": 2}})
    assert reg_value(p, apply_transition(p, c, Exec("A")), "p", "$r") == 1  # mod 3
    c = make_configuration(p, {"p": "B"}, {"x": 1})
    assert local_of(p, apply_transition(p, c, Exec("B")), "p").label == "R"
    c = make_configuration(p, {"p": "B"}, {"x": 1}, regs={"p": {"$r": 1}})
    assert local_of(p, apply_transition(p, c, Exec("B")), "p").label == "end"


def test_system_event_premises():
    p = parse_program("data x=0 y=0 process p registers begin A: x := 1; end")
    c = make_configuration(p, {"p": "A"}, {"x": 0, "y": 0},
                           l1={"p": {"x": dirty(1), "y": clean(0)}})
    assert enabled_transitions(p, c, SISD) == [
        Exec("A"), SysEvent("wrllc", "p", "x"), SysEvent("evict", "p", "y")]
    with pytest.raises(TransitionNotEnabled):
        apply_transition(p, c, SysEvent("evict", "p", "x"))
    with pytest.raises(TransitionNotEnabled):
        apply_transition(p, c, SysEvent("fetch", "p", "y"))


def test_finished_process_keeps_system_events():
    p = parse_program("data x=0 process p registers begin A: x := 1; end")
    c = make_configuration(p, {"p": "end"}, {"x": 0}, l1={"p": {"x": dirty(1)}})
    assert enabled_transitions(p, c, SISD) == [SysEvent("wrllc", "p", "x")]


def test_sc_semantics():
    p = parse_program("""
    data x=0 process p registers $r begin
      A: x := 1; B: fence; C: $r := x; D: cas(x, 0, 1);
    end""")
    (c,) = initial_configurations(p)
    for label in ("A", "B", "C"):
        (t,) = enabled_transitions(p, c, SC)
        assert t == Exec(label)
        c = apply_transition(p, c, t, SC)
    assert reg_value(p, c, "p", "$r") == 1
    assert enabled_transitions(p, c, SC) == []  # cas blocks on x=1


def _random_walks(p, model, walks=40, depth=40, seed=7):
    rng = random.Random(seed)
    for _ in range(walks):
        c = rng.choice(initial_configurations(p))
        for _ in range(depth):
            ts = enabled_transitions(p, c, model)
            if not ts:
                break
            t = rng.choice(ts)
            yield c, t, apply_transition(p, c, t, model)
            c = apply_transition(p, c, t, model)


@pytest.mark.parametrize("model", [SISD, SI, SC])
@pytest.mark.parametrize("name", ["sb", "wrc", "iriw", "readseq"])
def test_frame_rule_and_determinism(name, model):
    p = load(name, where=LITMUS)
    for c, t, d in _random_walks(p, model):
        pid = t.pid if isinstance(t, SysEvent) else p.proc_of(t.label).pid
        for q, before, after in zip(p.procs, c.locals, d.locals):
            if q.pid != pid:
                assert before == after
        assert apply_transition(p, c, t, model) == d
        if model is SC:
            assert not isinstance(t, SysEvent)
            assert all(e is None for loc in d.locals for e in loc.l1)


def test_to_si_view(running):
    p, _ = running
    q = to_si_view(p)
    assert [lab for lab in q.labels if isinstance(q.stmt_of(lab), SyncWr)] == ["L1", "L2", "L4"]
    assert not any(isinstance(q.stmt_of(lab), Write) for lab in q.labels)
    assert to_si_view(q) == q
    reads = parse_program("data x=0 process p registers $r begin A: $r := x; end")
    assert to_si_view(reads) == reads


def test_si_model_treats_writes_as_syncwr(running):
    p, _ = running
    (c0,) = initial_configurations(p)
    assert Exec("L1") in enabled_transitions(p, c0, SI)
    d = apply_transition(p, c0, Exec("L1"), SI)
    assert llc_value(p, d, "x") == 1 and l1_entry(p, d, "P0", "x") is None


def test_parse_transition_round_trip():
    for s in ("L4", "L1.f1", "fetch(P1,z)", "wrllc(P0,x)", "evict(P0,y)"):
        assert str(parse_transition(s)) == s
