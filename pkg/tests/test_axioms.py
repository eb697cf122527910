import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain_model, make_sig
from controls import CONTROLS
from sceu.axioms import (FAIL, INCONCLUSIVE, PASS, Scope, check_all, check_cancellation,
                         check_centeredness, check_definiteness, check_model_uniqueness,
                         check_strong_definiteness, overall_verdict,
                         replay_witness)
from sceu.core import CausalModel, Signature, solve
from sceu.generate import Caps, generate_instance
from sceu.lang import parse_action
from sceu.prefs import (QueryBudget, Representation, TablePreference, induce_preferences,
                        query_family)


def _chain_pref(util=None, prob=None):
    m = chain_model()
    sig = m.signature
    util = util or {a: Fraction(i) for i, a in enumerate(sig.atoms())}
    prob = prob or {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    return induce_preferences(Representation(m, prob, util))


def _verdicts(reports):
    return {r.axiom: r.verdict for r in reports}


def test_chain_all_pass():
    pref = _chain_pref()
    reps = check_all(pref, query_family(pref.signature))
    assert set(_verdicts(reps).values()) == {PASS}
    assert overall_verdict(reps) == PASS
    a2 = reps[1]
    assert a2.data["c_dagger"] == {(0,): (0, 0, 0), (1,): (1, 1, 1)}
    a5 = reps[-1]
    assert set(a5.data["graph"].edges) == {("X", "Y")}


def test_zero_probability_context():
    pref = _chain_pref(prob={(0,): Fraction(0), (1,): Fraction(1)})
    r = check_model_uniqueness(pref)
    assert r.verdict == PASS and r.data["c_dagger"] == {(1,): (1, 1, 1)}


def test_ties_fail_strong_definiteness_only():
    sig = chain_model().signature
    util = {a: Fraction(i) for i, a in enumerate(sig.atoms())}
    util[(0, 1, 0)] = util[(0, 1, 1)]
    pref = _chain_pref(util=util)
    v = _verdicts(check_all(pref, query_family(sig)))
    assert v == {"A1": PASS, "A2": PASS, "A3": PASS, "A3*": FAIL, "A4": PASS, "A5": PASS}
    r = check_strong_definiteness(pref)
    assert r.witness["fixed_values"] == [0, 1] and r.witness["variable"] == "Y"
    assert replay_witness(pref, "A3*", r.witness)


def test_constant_util_vacuous():
    sig = chain_model().signature
    pref = _chain_pref(util={a: Fraction(1) for a in sig.atoms()})
    v = _verdicts(check_all(pref, query_family(sig)))
    assert set(v.values()) == {PASS}
    assert check_model_uniqueness(pref).data["c_dagger"] == {}


def test_no_endogenous_vacuous():
    sig = Signature(["U"], [], {"U": [0, 1]})
    m = CausalModel(sig, {})
    pref = induce_preferences(Representation(m, {(0,): Fraction(1, 2), (1,): Fraction(1, 2)},
                                             {(0,): Fraction(0), (1,): Fraction(1)}))
    assert set(_verdicts(check_all(pref, query_family(sig))).values()) == {PASS}


def test_a1_n1_witness():
    sig = make_sig()
    a = parse_action("do[X:=0]", sig)
    b = parse_action("if Y=1 then do[X:=0] else do[X:=0]", sig)
    t = TablePreference(sig, [a, b], [1, 0])
    r = check_cancellation(t, t.actions)
    assert r.verdict == FAIL and r.witness["n"] == 1
    assert replay_witness(t, "A1", r.witness)


def _additive_cycle_table():
    # x and y each beat doing both, which beats doing neither: not additive
    sig = make_sig()
    texts = ["if U=0 then do[X:=1] else do[]", "if U=1 then do[X:=1] else do[]",
             "do[X:=1]", "do[]"]
    acts = [parse_action(t, sig) for t in texts]
    return TablePreference(sig, acts, [2, 2, 1, 0])


def test_a1_direct_and_lp():
    t = _additive_cycle_table()
    r = check_cancellation(t, t.actions)
    assert r.verdict == FAIL and r.witness["kind"] == "direct" and r.witness["n"] == 2
    assert replay_witness(t, "A1", r.witness)
    r = check_cancellation(t, t.actions, n_max=1)
    assert r.verdict == FAIL and r.witness["kind"] == "lp"
    assert replay_witness(t, "A1", r.witness)


def test_a1_preference_cycle_three_actions():
    sig = make_sig()
    texts = ["do[X:=0]", "if U=0 then do[X:=0] else do[X:=0]", "do[Y:=1]"]
    acts = [parse_action(t, sig) for t in texts]
    # the first two share an h-map, so A > C > B closes a cycle
    t = TablePreference(sig, acts, [2, 0, 1])
    r = check_cancellation(t, t.actions)
    assert r.verdict == FAIL and replay_witness(t, "A1", r.witness)


def test_replay_rejects_tampered_witness():
    t = _additive_cycle_table()
    r = check_cancellation(t, t.actions)
    w = dict(r.witness, A=list(reversed(r.witness["B"])), B=list(reversed(r.witness["A"])))
    assert not replay_witness(t, "A1", w)


@pytest.mark.parametrize("axiom", sorted(CONTROLS))
def test_negative_controls(axiom):
    pref = CONTROLS[axiom]()
    v = _verdicts(check_all(pref, pref.actions))
    assert v.pop(axiom) == FAIL
    assert set(v.values()) == {PASS}


def test_a5_cycle_aggregate():
    pref = CONTROLS["A5"]()
    reps = check_all(pref, pref.actions)
    assert overall_verdict(reps) == FAIL
    assert reps[-1].witness["cycle"] == ["X", "Y"]


def test_scope_and_budget_inconclusive():
    inst = generate_instance(3, 0, Caps(max_endo=3))
    pref = induce_preferences(inst.rep)
    r = check_definiteness(pref, Scope(max_endo=0))
    assert r.verdict == INCONCLUSIVE and "scope" in r.notes[0]
    pref = induce_preferences(inst.rep, budget=QueryBudget(5))
    r = check_centeredness(pref)
    assert r.verdict == INCONCLUSIVE
    # unknown actions in a table make A1 inconclusive rather than failing
    sig = make_sig()
    t = TablePreference(sig, [parse_action("do[]", sig)], [0])
    assert check_model_uniqueness(t).verdict == INCONCLUSIVE


def test_reports_are_json():
    pref = CONTROLS["A2"]()
    for r in check_all(pref, pref.actions):
        json.dumps(r.to_json())


instances = st.builds(lambda s: generate_instance(s, 0, Caps(max_range=3)), st.integers(0, 10 ** 6))


@settings(max_examples=15, deadline=None)
@given(instances)
def test_induced_preferences_pass(inst):
    pref = induce_preferences(inst.rep)
    reps = check_all(pref, inst.actions)
    assert overall_verdict(reps) == PASS
    assert _verdicts(reps)["A3*"] == PASS
    c = reps[1].data["c_dagger"]
    assert c == {u: solve(inst.rep.model, u) for u in inst.signature.contexts()}
    # A3* pass implies A3 pass
    assert reps[2].verdict == PASS
