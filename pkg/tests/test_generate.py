from sceu import io
from sceu.core import Assignment, check_recursive, RecursiveOrder, solve
from sceu.generate import Caps, generate_instance
from sceu.lang import format_action


def test_deterministic():
    for ties in (False, True):
        a = generate_instance(9, 3, ties=ties)
        b = generate_instance(9, 3, ties=ties)
        assert io.dumps(io.rep_to_json(a.rep)) == io.dumps(io.rep_to_json(b.rep))
        assert [format_action(x) for x in a.actions] == [format_action(x) for x in b.actions]


def test_caps_and_shape():
    caps = Caps()
    for i in range(30):
        inst = generate_instance(1, i, caps)
        sig = inst.signature
        assert sig.n_atoms <= caps.max_atoms
        assert 1 <= len(sig.exogenous) <= caps.max_exo and 1 <= len(sig.endogenous) <= caps.max_endo
        assert isinstance(check_recursive(inst.rep.model), RecursiveOrder)
        assert all(w > 0 for w in inst.rep.prob.values())
        assert len(set(inst.rep.util.values())) == sig.n_atoms


def test_ties_instances():
    for i in range(20):
        inst = generate_instance(0, i, ties=True)
        sig = inst.signature
        info = inst.ties
        x = info["variable"]
        assert sig.endogenous[-1] == x and list(sig.ranges[x]) == [0, 1, 2]
        assert sig.n_atoms <= 32
        c, twin = (tuple(a) for a in info["atoms"])
        assert inst.rep.util[c] == inst.rep.util[twin] and c != twin
        u = tuple(info["context"])
        z = Assignment(tuple(tuple(p) for p in info["assignment"]))
        assert solve(inst.rep.model, u, z) == c
        assert c[sig.index[x]] != solve(inst.rep.model, u)[sig.index[x]]
        # every other pair of atoms keeps distinct utilities
        assert len(set(inst.rep.util.values())) == sig.n_atoms - 1
