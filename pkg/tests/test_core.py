import itertools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_sig
from sceu.core import (EMPTY, Assignment, CausalModel, Cycle, EnumerationTooLarge, Equation,
                       ModelError, NotRecursiveError, RecursiveOrder, Signature, SignatureError,
                       check_recursive, enumerate_atoms, enumerate_contexts, intervene,
                       outcome_table, satisfies_equations, solve)
from sceu.generate import Caps, generate_instance


def test_chain_order(chain):
    res = check_recursive(chain)
    assert isinstance(res, RecursiveOrder) and list(res) == ["X", "Y"]


def test_two_cycle():
    sig = make_sig()
    m = CausalModel(sig, {"X": Equation(("Y",), {(0,): 0, (1,): 1}),
                          "Y": Equation(("X",), {(0,): 0, (1,): 1})})
    res = check_recursive(m)
    assert isinstance(res, Cycle) and list(res) == ["X", "Y"]
    with pytest.raises(NotRecursiveError):
        solve(m, (0,))


def test_empty_endogenous_order():
    sig = Signature(["U"], [], {"U": [0, 1]})
    m = CausalModel(sig, {})
    assert list(check_recursive(m)) == []
    assert len(list(enumerate_atoms(sig))) == 2


def test_solve_chain(chain):
    assert solve(chain, (1,)) == (1, 1, 1)
    assert solve(chain, (0,)) == (0, 0, 0)


def test_solve_negation_model():
    sig = make_sig()
    m = CausalModel(sig, {"X": Equation(("U",), {(0,): 0, (1,): 1}),
                          "Y": Equation(("U", "X"), {(u, x): 1 - x for u in (0, 1) for x in (0, 1)})})
    atom = solve(m, (1,))
    assert atom == (1, 1, 0)
    assert satisfies_equations(m, atom)
    # exhaustive oracle: the only atom in context u=1 satisfying the equations
    sols = [a for a in sig.atoms() if a[0] == 1 and satisfies_equations(m, a)]
    assert sols == [atom]


def test_intervene_examples(chain):
    assert solve(intervene(chain, Assignment.of(X=0)), (1,)) == (1, 0, 0)
    assert solve(intervene(chain, Assignment.of(Y=1)), (0,)) == (0, 0, 1)
    m = intervene(chain, EMPTY)
    assert all(solve(m, u) == solve(chain, u) for u in chain.signature.contexts())


def test_intervene_rejects_exogenous(chain):
    with pytest.raises(SignatureError):
        intervene(chain, Assignment.of(U=1))
    with pytest.raises(SignatureError):
        intervene(chain, Assignment.of(Q=1))


def test_enumeration_counts():
    sig = Signature(["U"], ["X", "Y"], {"U": [0, 1], "X": [0, 1], "Y": [0, 1]})
    assert len(list(enumerate_atoms(sig))) == 8
    assert len(list(enumerate_contexts(sig))) == 2
    sig2 = Signature(["A"], ["B"], {"A": [0, 1], "B": [0, 1, 2]})
    atoms = list(enumerate_atoms(sig2))
    assert len(atoms) == 6 and atoms == sorted(atoms) and len(set(atoms)) == 6


def test_enumeration_cap():
    sig = Signature(["U"], ["X"], {"U": [0, 1], "X": [0, 1]})
    with pytest.raises(EnumerationTooLarge):
        list(enumerate_atoms(sig, cap=3))


def test_signature_validation():
    with pytest.raises(SignatureError):
        Signature(["U"], ["U"], {"U": [0]})
    with pytest.raises(SignatureError):
        Signature(["U"], ["X"], {"U": [0], "X": []})
    with pytest.raises(SignatureError):
        Signature(["U"], ["X"], {"U": [0], "X": [1, 1]})
    with pytest.raises(SignatureError):
        Signature([], ["X"], {"X": [0]})


def test_model_validation():
    sig = make_sig()
    with pytest.raises(ModelError):
        CausalModel(sig, {"X": Equation(("U",), {(0,): 0}), "Y": Equation((), {(): 0})})
    with pytest.raises(ModelError):
        CausalModel(sig, {"X": Equation(("U",), {(0,): 0, (1,): 5}), "Y": Equation((), {(): 0})})
    with pytest.raises(ModelError):
        CausalModel(sig, {"X": Equation((), {(): 0})})


def test_constant_variable_allowed():
    sig = Signature(["U"], ["X"], {"U": [0, 1], "X": [7]})
    m = CausalModel(sig, {"X": Equation((), {(): 7})})
    assert solve(m, (1,)) == (1, 7)


# -- properties over random recursive models --------------------------------------

instances = st.builds(lambda s, i: generate_instance(s, i, Caps(max_range=3)),
                      st.integers(0, 10 ** 6), st.integers(0, 50))


@settings(max_examples=40, deadline=None)
@given(instances)
def test_solution_uniqueness(inst):
    m = inst.rep.model
    sig = m.signature
    for u in sig.contexts():
        sols = [a for a in sig.atoms_of_context(u) if satisfies_equations(m, a)]
        assert sols == [solve(m, u)]


@settings(max_examples=40, deadline=None)
@given(instances, st.data())
def test_intervention_properties(inst, data):
    m = inst.rep.model
    sig = m.signature
    asgs = sig.assignments()
    y = data.draw(st.sampled_from(asgs))
    z = data.draw(st.sampled_from(asgs))
    my = intervene(m, y)
    myy = intervene(my, y)
    for u in sig.contexts():
        assert solve(myy, u) == solve(my, u)
        # centering: setting variables to their actual values changes nothing
        a = solve(m, u)
        for k in range(len(sig.endogenous) + 1):
            for ys in itertools.combinations(sig.endogenous, k):
                fix = Assignment(tuple((n, a[sig.index[n]]) for n in ys))
                assert solve(intervene(m, fix), u) == a
    if not set(y.names) & set(z.names):
        a = intervene(intervene(m, y), z)
        b = intervene(intervene(m, z), y)
        assert all(solve(a, u) == solve(b, u) for u in sig.contexts())
    # solve with overrides agrees with the submodel
    assert all(solve(m, u, y) == solve(my, u) for u in sig.contexts())


@settings(max_examples=30, deadline=None)
@given(instances)
def test_outcome_table_matches_solve(inst):
    m = inst.rep.model
    sig = m.signature
    asgs = sig.assignments()
    tab = outcome_table(m, sig.contexts(), asgs)
    for i, u in enumerate(sig.contexts()):
        for j, asg in enumerate(asgs):
            assert tuple(int(v) for v in tab[i, j]) == solve(m, u, asg)
