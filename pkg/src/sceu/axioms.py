"""Decision procedures for the axioms on a preference over actions.

Every checker returns an :class:`AxiomReport`. A failing report carries a
JSON-ready witness that :func:`replay_witness` can re-check against the same
preference by issuing the recorded queries again.

Axiom ids: A1 cancellation, A2 model uniqueness, A3 definiteness, A3* strong
definiteness, A4 centeredness, A5 recursivity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import networkx as nx

from .core import Assignment, Atom, Signature
from .lang import (Action, compile_h, format_action, format_assignment, on_atom,
                   parse_action)
from .lp import additive_feasibility, check_certificate
from .prefs import (BudgetExhausted, Preference, PreferenceQueryError, affected_witness,
                    dense_ranks, fixed_values, fixes, is_null_atom,
                    null_witness)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

NULL_NOTE = "nullness decided with probe interventions (all full and single-variable settings)"


@dataclass
class Scope:
    """Size caps for the checkers that quantify over all atoms and assignments."""

    max_endo: int = 4
    max_range: int = 3
    n_max: int = 3
    # direct cancellation search: distinct h-maps considered for n = 2, n >= 3
    pair_cap: int = 160
    triple_cap: int = 36

    def admits(self, sig: Signature) -> str | None:
        if len(sig.endogenous) > self.max_endo:
            return f"{len(sig.endogenous)} endogenous variables exceed cap {self.max_endo}"
        worst = max(len(sig.ranges[n]) for n in sig.variables)
        if worst > self.max_range:
            return f"range size {worst} exceeds cap {self.max_range}"
        return None


@dataclass
class AxiomReport:
    axiom: str
    verdict: str
    witness: dict | None = None
    queries_used: int = 0
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> dict:
        out = {"axiom": self.axiom, "verdict": self.verdict,
               "queries_used": self.queries_used, "notes": list(self.notes)}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _atom_json(sig: Signature, atom: Atom) -> dict:
    return sig.atom_dict(atom)


def _asg_json(asg: Assignment) -> str:
    return format_assignment(asg)


def _parse_asg(text: str, sig: Signature) -> Assignment:
    return parse_action(f"do[{text}]", sig).assignment


class _Run:
    """Shared bookkeeping: query accounting and conversion of source errors."""

    def __init__(self, axiom: str, pref: Preference):
        self.axiom = axiom
        self.pref = pref
        self.start = pref.queries

    def report(self, verdict, witness=None, notes=(), **data) -> AxiomReport:
        return AxiomReport(self.axiom, verdict, witness, self.pref.queries - self.start,
                           list(notes), dict(data))


def _guarded(axiom: str, pref: Preference, body, scope: Scope | None = None,
             needs_scope: bool = True) -> AxiomReport:
    run = _Run(axiom, pref)
    if needs_scope:
        why = (scope or Scope()).admits(pref.signature)
        if why:
            return run.report(INCONCLUSIVE, notes=[f"outside checking scope: {why}"])
    try:
        return body(run)
    except BudgetExhausted as e:
        return run.report(INCONCLUSIVE, notes=[str(e)])
    except PreferenceQueryError as e:
        return run.report(INCONCLUSIVE, notes=[f"preference cannot answer: {e}"])


# -- A1 ---------------------------------------------------------------------------

def _dominates(hi: Sequence[int], lo: Sequence[int]) -> bool:
    """Whether some pairing gives hi_i >= lo_i everywhere with one strict."""
    a, b = sorted(hi), sorted(lo)
    return all(x >= y for x, y in zip(a, b)) and a != b


def _direct_search(tables, ranks, n_max, caps):
    """Look for tuples (A_1..A_n), (B_1..B_n) with equal h-multisets at every
    atom, A_i >= B_i for i < n and A_n > B_n. Returns (witness indices, notes)."""
    m = len(tables)
    notes = []
    for n in range(2, n_max + 1):
        cap = caps[0] if n == 2 else caps[1]
        k = min(m, cap)
        if k < m:
            notes.append(f"direct search for n={n} limited to the first {k} of {m} distinct h-maps")
        groups: dict = {}
        for combo in itertools.combinations_with_replacement(range(k), n):
            sig = tuple(tuple(sorted(tables[i][j] for i in combo)) for j in range(len(tables[0])))
            groups.setdefault(sig, []).append(combo)
        for members in groups.values():
            for s, t in itertools.permutations(members, 2):
                if _dominates([ranks[i] for i in s], [ranks[i] for i in t]):
                    # sort both sides by rank so pairing position by position works
                    s_sorted = sorted(s, key=lambda i: ranks[i])
                    t_sorted = sorted(t, key=lambda i: ranks[i])
                    pairs = list(zip(s_sorted, t_sorted))
                    strict = next(p for p in pairs if ranks[p[0]] > ranks[p[1]])
                    pairs.remove(strict)
                    pairs.append(strict)
                    return ([p[0] for p in pairs], [p[1] for p in pairs]), notes
    return None, notes


def check_cancellation(pref: Preference, actions: Sequence[Action], n_max: int | None = None,
                       scope: Scope | None = None) -> AxiomReport:
    scope = scope or Scope()
    n_max = scope.n_max if n_max is None else n_max
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    sig = pref.signature
    actions = list(dict.fromkeys(actions))

    def body(run: _Run) -> AxiomReport:
        ranks = dense_ranks(pref, actions)
        tables = [compile_h(a, sig).table for a in actions]
        notes = [f"checked on {len(actions)} presented actions"]
        # n = 1: h-equal actions must be indifferent
        seen: dict = {}
        for i, t in enumerate(tables):
            j = seen.setdefault(t, i)
            if ranks[i] != ranks[j]:
                hi, lo = (i, j) if ranks[i] > ranks[j] else (j, i)
                w = {"kind": "direct", "n": 1, "A": [format_action(actions[hi])],
                     "B": [format_action(actions[lo])]}
                return run.report(FAIL, w, notes)
        uniq = list(seen.values())
        u_tables = [tables[i] for i in uniq]
        u_ranks = [ranks[i] for i in uniq]
        found, more = _direct_search(u_tables, u_ranks, n_max, (scope.pair_cap, scope.triple_cap))
        notes += more
        if found:
            A, B = found
            w = {"kind": "direct", "n": len(A),
                 "A": [format_action(actions[uniq[i]]) for i in A],
                 "B": [format_action(actions[uniq[i]]) for i in B]}
            return run.report(FAIL, w, notes)
        # additive feasibility over the per-atom interventions
        n_atoms = len(u_tables[0]) if u_tables else 0
        varying = [j for j in range(n_atoms) if len({t[j] for t in u_tables}) > 1]
        items = [{(j, t[j]): 1 for j in varying} for t in u_tables]
        res = additive_feasibility(items, u_ranks)
        notes.append(f"additive feasibility over {len(items)} distinct h-maps: "
                     f"{'feasible' if res.feasible else 'infeasible'} ({res.method})")
        if res.feasible:
            return run.report(PASS, None, notes, margin=res.margin)
        w = {"kind": "lp", "actions": [format_action(actions[i]) for i in uniq],
             "certificate": [[lo, hi, str(c)] for lo, hi, c in res.certificate]}
        return run.report(FAIL, w, notes)

    return _guarded("A1", pref, body, scope, needs_scope=False)


# -- A2 ---------------------------------------------------------------------------

def check_model_uniqueness(pref: Preference, scope: Scope | None = None) -> AxiomReport:
    """At most one non-null atom per context. ``data['c_dagger']`` maps each
    context with exactly one non-null atom to that atom."""
    sig = pref.signature

    def body(run: _Run) -> AxiomReport:
        c_dagger = {}
        witness = None
        for u in sig.contexts():
            live = [a for a in sig.atoms_of_context(u) if not is_null_atom(pref, a)]
            if len(live) == 1:
                c_dagger[u] = live[0]
            elif len(live) > 1 and witness is None:
                witness = {"context": dict(zip(sig.exogenous, u)),
                           "atoms": [_atom_json(sig, a) for a in live[:2]],
                           "probes": [_asg_json(null_witness(pref, a)) for a in live[:2]]}
        notes = [NULL_NOTE, f"{len(c_dagger)} of {sig.n_contexts} contexts have a unique non-null atom"]
        return run.report(FAIL if witness else PASS, witness, notes, c_dagger=c_dagger)

    return _guarded("A2", pref, body, scope)


# -- A3 / A3* ---------------------------------------------------------------------

def fix_sets(pref: Preference, atom: Atom):
    """Yield (assignment, X, m) with m the values X is fixed to under each
    intervention at ``atom``."""
    sig = pref.signature
    for asg in sig.assignments():
        for x_var in sig.endogenous:
            if x_var in asg:
                continue
            yield asg, x_var, fixed_values(pref, atom, asg, x_var)


def check_definiteness(pref: Preference, scope: Scope | None = None) -> AxiomReport:
    sig = pref.signature

    def body(run: _Run) -> AxiomReport:
        for a in sig.atoms():
            for asg, x_var, m in fix_sets(pref, a):
                if not m:
                    w = {"atom": _atom_json(sig, a), "assignment": _asg_json(asg),
                         "variable": x_var, "fixed_values": m}
                    return run.report(FAIL, w)
        return run.report(PASS)

    return _guarded("A3", pref, body, scope)


def check_strong_definiteness(pref: Preference, scope: Scope | None = None) -> AxiomReport:
    sig = pref.signature

    def body(run: _Run) -> AxiomReport:
        for a in sig.atoms():
            if is_null_atom(pref, a):
                continue
            for asg, x_var, m in fix_sets(pref, a):
                if len(m) != 1:
                    w = {"atom": _atom_json(sig, a), "assignment": _asg_json(asg),
                         "variable": x_var, "fixed_values": m}
                    return run.report(FAIL, w, [NULL_NOTE])
        return run.report(PASS, None, [NULL_NOTE])

    return _guarded("A3*", pref, body, scope)


# -- A4 ---------------------------------------------------------------------------

def check_centeredness(pref: Preference, scope: Scope | None = None) -> AxiomReport:
    sig = pref.signature

    def body(run: _Run) -> AxiomReport:
        for a in sig.atoms():
            for k in range(len(sig.endogenous)):
                for ys in itertools.combinations(sig.endogenous, k):
                    asg = Assignment(tuple((y, a[sig.index[y]]) for y in ys))
                    for x_var in sig.endogenous:
                        if x_var in ys:
                            continue
                        if not fixes(pref, a, asg, x_var, a[sig.index[x_var]]):
                            w = {"atom": _atom_json(sig, a), "assignment": _asg_json(asg),
                                 "variable": x_var}
                            return run.report(FAIL, w)
        return run.report(PASS)

    return _guarded("A4", pref, body, scope)


# -- A5 ---------------------------------------------------------------------------

def check_recursivity(pref: Preference, scope: Scope | None = None) -> AxiomReport:
    """Acyclicity of the affects relation. ``data['graph']`` holds it and
    ``data['edge_witness']`` one witness per edge."""
    sig = pref.signature

    def body(run: _Run) -> AxiomReport:
        live = [a for a in sig.atoms() if not is_null_atom(pref, a)]
        g = nx.DiGraph()
        g.add_nodes_from(sig.endogenous)
        edge_witness = {}
        for cause, effect in itertools.permutations(sig.endogenous, 2):
            for a in live:
                w = affected_witness(pref, a, cause, effect)
                if w is not None:
                    g.add_edge(cause, effect)
                    base, y, x = w
                    edge_witness[(cause, effect)] = {
                        "cause": cause, "effect": effect, "atom": _atom_json(sig, a),
                        "assignment": _asg_json(base), "cause_value": y, "effect_value": x}
                    break
        edges = sorted(g.edges, key=lambda e: (sig.index[e[0]], sig.index[e[1]]))
        notes = [NULL_NOTE, "affects edges: " + (", ".join(f"{c}->{e}" for c, e in edges) or "none")]
        try:
            cyc = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return run.report(PASS, None, notes, graph=g, edge_witness=edge_witness)
        nodes = [c for c, _ in cyc]
        start = min(range(len(nodes)), key=lambda i: sig.index[nodes[i]])
        nodes = nodes[start:] + nodes[:start]
        steps = [edge_witness[(nodes[i], nodes[(i + 1) % len(nodes)])] for i in range(len(nodes))]
        return run.report(FAIL, {"cycle": nodes, "edges": steps}, notes, graph=g,
                          edge_witness=edge_witness)

    return _guarded("A5", pref, body, scope)


# -- aggregate ----------------------------------------------------------------------

def check_all(pref: Preference, actions: Sequence[Action], scope: Scope | None = None,
              n_max: int | None = None) -> list[AxiomReport]:
    return [check_cancellation(pref, actions, n_max, scope),
            check_model_uniqueness(pref, scope),
            check_definiteness(pref, scope),
            check_strong_definiteness(pref, scope),
            check_centeredness(pref, scope),
            check_recursivity(pref, scope)]


GATING = ("A1", "A2", "A3", "A4", "A5")


def overall_verdict(reports: Sequence[AxiomReport], axioms=GATING) -> str:
    relevant = [r for r in reports if r.axiom in axioms]
    if any(r.verdict == FAIL for r in relevant):
        return FAIL
    if any(r.verdict == INCONCLUSIVE for r in relevant):
        return INCONCLUSIVE
    return PASS


# -- witness replay -----------------------------------------------------------------

def replay_witness(pref: Preference, axiom: str, witness: dict) -> bool:
    """Re-issue the queries behind a failure witness; True iff the violation
    reproduces."""
    sig = pref.signature
    if axiom == "A1":
        if witness["kind"] == "direct":
            A = [parse_action(s, sig) for s in witness["A"]]
            B = [parse_action(s, sig) for s in witness["B"]]
            if len(A) != len(B) or not A:
                return False
            ha = [compile_h(a, sig).table for a in A]
            hb = [compile_h(b, sig).table for b in B]
            for j in range(sig.n_atoms):
                if sorted(t[j] for t in ha) != sorted(t[j] for t in hb):
                    return False
            if any(pref.compare(a, b) < 0 for a, b in zip(A[:-1], B[:-1])):
                return False
            return pref.compare(A[-1], B[-1]) > 0
        acts = [parse_action(s, sig) for s in witness["actions"]]
        ranks = dense_ranks(pref, acts)
        tables = [compile_h(a, sig).table for a in acts]
        varying = [j for j in range(sig.n_atoms) if len({t[j] for t in tables}) > 1]
        items = [{(j, t[j]): 1 for j in varying} for t in tables]
        cert = [(lo, hi, Fraction(c)) for lo, hi, c in witness["certificate"]]
        return check_certificate(items, ranks, cert)
    if axiom == "A2":
        atoms = [sig.make_atom(d) for d in witness["atoms"]]
        if len(atoms) < 2 or len(set(atoms)) < 2:
            return False
        if len({sig.context_of(a) for a in atoms}) != 1:
            return False
        for a, p in zip(atoms, witness["probes"]):
            asg = _parse_asg(p, sig)
            if pref.compare(on_atom(sig, a, asg), on_atom(sig, a, Assignment())) == 0:
                return False
        return True
    if axiom in ("A3", "A3*"):
        a = sig.make_atom(witness["atom"])
        asg = _parse_asg(witness["assignment"], sig)
        x_var = witness["variable"]
        m = [x for x in sig.ranges[x_var] if fixes(pref, a, asg, x_var, x)]
        if m != list(witness["fixed_values"]):
            return False
        if axiom == "A3":
            return not m
        return len(m) != 1 and not is_null_atom(pref, a)
    if axiom == "A4":
        a = sig.make_atom(witness["atom"])
        asg = _parse_asg(witness["assignment"], sig)
        x_var = witness["variable"]
        return not fixes(pref, a, asg, x_var, a[sig.index[x_var]])
    if axiom == "A5":
        cycle = witness["cycle"]
        edges = witness["edges"]
        if len(edges) != len(cycle) or len(cycle) < 2:
            return False
        for i, e in enumerate(edges):
            if (e["cause"], e["effect"]) != (cycle[i], cycle[(i + 1) % len(cycle)]):
                return False
            a = sig.make_atom(e["atom"])
            if is_null_atom(pref, a):
                return False
            base = _parse_asg(e["assignment"], sig)
            before = fixes(pref, a, base, e["effect"], e["effect_value"])
            after = fixes(pref, a, base.extend({e["cause"]: e["cause_value"]}),
                          e["effect"], e["effect_value"])
            if before == after:
                return False
        return True
    raise ValueError(f"unknown axiom {axiom!r}")
