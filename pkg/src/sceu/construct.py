"""Build a representing (model, probability, utility) triple from preferences.

Pipeline: run the axiom checks, linearise the affects relation, order atoms
by closeness to each non-null atom, read the closest atoms off the fixes
relation to get structural equations, then fit probability and utility on
the presented actions by exact linear feasibility.

Several steps leave choices open (ties in the variable order, the value
orders after each atom's own value, the completion of the atom orders).
:class:`Choices` pins them down; :func:`check_identified` varies them.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import networkx as nx

from .axioms import PASS, AxiomReport, Scope, check_all, check_strong_definiteness, \
    overall_verdict
from .core import (Assignment, Atom, CausalModel, Context, Equation, Signature, solve)
from .io import key_of, model_hash
from .lang import Action, format_assignment, h_at
from .lp import additive_feasibility
from .prefs import (Preference, Representation, dense_ranks, expected_utility,
                    fixed_values)


class ConstructionError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


VarOrder = tuple  # variable names, exogenous first


@dataclass(frozen=True)
class Choices:
    """The arbitrary choices of one construction run.

    ``priority`` breaks ties between incomparable endogenous variables (lower
    first; default declaration order). ``values`` orders each range after the
    atom's own value: "ascending", "descending" or "random". ``fallback``
    orders two candidate values that are both outside the fixed set: "rank"
    follows the value order, "reverse" inverts it.
    """

    priority: tuple = ()
    values: str = "ascending"
    fallback: str = "rank"
    seed: str = "0"

    @classmethod
    def for_trial(cls, k: int, seed, sig: Signature) -> "Choices":
        if k == 0:
            return cls(seed=f"{seed}:0")
        if k == 1:
            return cls(values="descending", fallback="reverse", seed=f"{seed}:1")
        rng = random.Random(f"{seed}:{k}")
        prio = list(sig.endogenous)
        rng.shuffle(prio)
        return cls(tuple(prio), "random", rng.choice(("rank", "reverse")), f"{seed}:{k}")

    def to_json(self) -> dict:
        return {"priority": list(self.priority), "values": self.values,
                "fallback": self.fallback, "seed": self.seed}


def linearize_affects(graph: nx.DiGraph, sig: Signature, priority: Sequence[str] = ()) -> VarOrder:
    """Exogenous variables in declaration order, then a topological order of
    the endogenous ones; ties go to ``priority`` order, then declaration order."""
    rank = {n: i for i, n in enumerate(priority)}
    g = nx.DiGraph()
    g.add_nodes_from(sig.endogenous)
    g.add_edges_from((u, v) for u, v in graph.edges if u in sig.index and v in sig.index
                     and sig.is_endogenous(u) and sig.is_endogenous(v))
    try:
        endo = list(nx.lexicographical_topological_sort(
            g, key=lambda n: (rank.get(n, len(rank)), sig.index[n])))
    except nx.NetworkXUnfeasible:
        raise ValueError("affects relation is cyclic") from None
    return tuple(sig.exogenous) + tuple(endo)


class ValueOrders:
    """For each (atom, variable), a strict order of the range whose first
    element is the atom's value."""

    def __init__(self, sig: Signature, mode: str = "ascending", seed: str = "0"):
        if mode not in ("ascending", "descending", "random"):
            raise ValueError(f"unknown value order mode {mode!r}")
        self.sig = sig
        self.mode = mode
        self.seed = seed
        self._cache: dict = {}

    def ranking(self, atom: Atom, var: str) -> tuple[int, ...]:
        key = (atom, var)
        hit = self._cache.get(key)
        if hit is None:
            own = atom[self.sig.index[var]]
            rest = [v for v in self.sig.ranges[var] if v != own]
            if self.mode == "descending":
                rest.reverse()
            elif self.mode == "random":
                random.Random(f"{self.seed}:{self.sig.atom_index[atom]}:{var}").shuffle(rest)
            hit = {v: i for i, v in enumerate([own] + rest)}
            self._cache[key] = hit
        return tuple(sorted(hit, key=hit.__getitem__))

    def rank(self, atom: Atom, var: str) -> Mapping[int, int]:
        self.ranking(atom, var)
        return self._cache[(atom, var)]


class AtomOrder:
    """Closeness of atoms to ``atom`` as a lexicographic sort key.

    Variables are scanned in ``var_order``. At an exogenous variable a value
    scores by whether it equals the atom's, then by the value order. At an
    endogenous X, with z the candidate's values on the endogenous variables
    before X, a value scores first by whether intervening z at the atom fixes
    X to it, then by the value order (or, when it is not fixed, by the
    fallback order).
    """

    def __init__(self, pref: Preference, atom: Atom, var_order: VarOrder,
                 value_orders: ValueOrders, fallback: str = "rank"):
        self.pref = pref
        self.atom = atom
        self.var_order = tuple(var_order)
        self.value_orders = value_orders
        self.fallback = fallback
        sig = pref.signature
        self._pos = [sig.index[n] for n in self.var_order]
        self._endo = [sig.is_endogenous(n) for n in self.var_order]
        self._keys: dict = {}

    def fixed(self, prefix: Assignment, var: str) -> list[int]:
        return fixed_values(self.pref, self.atom, prefix, var)

    def key(self, b: Atom) -> tuple:
        hit = self._keys.get(b)
        if hit is not None:
            return hit
        a = self.atom
        out = []
        prefix = []
        for name, pos, endo in zip(self.var_order, self._pos, self._endo):
            rank = self.value_orders.rank(a, name)[b[pos]]
            if not endo:
                out.append((int(b[pos] != a[pos]), rank))
                continue
            if b[pos] in self.fixed(Assignment(tuple(prefix)), name):
                out.append((0, rank))
            else:
                out.append((1, -rank if self.fallback == "reverse" else rank))
            prefix.append((name, b[pos]))
        hit = tuple(out)
        self._keys[b] = hit
        return hit

    def less(self, b: Atom, c: Atom) -> bool:
        return self.key(b) < self.key(c)

    def __call__(self, b: Atom) -> tuple:
        return self.key(b)


def atom_order(pref: Preference, atom: Atom, var_order: VarOrder, value_orders: ValueOrders,
               fallback: str = "rank") -> AtomOrder:
    return AtomOrder(pref, atom, var_order, value_orders, fallback)


def min_atom(pref: Preference, atom: Atom, assignment: Assignment, var_order: VarOrder,
             value_orders: ValueOrders) -> Atom:
    """The closest atom to ``atom`` satisfying ``assignment``, built one
    variable at a time: the context is copied, assigned variables take their
    assigned value, every other endogenous X takes the first value (in the
    value order) among those the earlier values fix X to."""
    sig = pref.signature
    values = list(atom)
    prefix = []
    forced = assignment.as_dict()
    for name in var_order:
        if not sig.is_endogenous(name):
            continue
        if name in forced:
            v = forced[name]
        else:
            m = fixed_values(pref, atom, Assignment(tuple(prefix)), name)
            if not m:
                raise ConstructionError(
                    "min_atom", f"no value of {name} is fixed by "
                    f"do[{format_assignment(Assignment(tuple(prefix)))}] at "
                    f"{sig.format_atom(atom)} (definiteness fails)")
            rank = value_orders.rank(atom, name)
            v = min(m, key=rank.__getitem__)
        values[sig.index[name]] = v
        prefix.append((name, v))
    return tuple(values)


def min_atom_by_enumeration(order: AtomOrder, assignment: Assignment) -> Atom:
    sig = order.pref.signature
    return min((b for b in sig.atoms() if assignment.holds_in(sig, b)), key=order.key)


# -- equations ------------------------------------------------------------------------

def build_equations(pref: Preference, c_dagger: Mapping[Context, Atom], var_order: VarOrder,
                    value_orders: ValueOrders):
    """Equations read off closest atoms. Returns ``(model, unconstrained)``
    where ``unconstrained`` lists the rows for contexts outside ``c_dagger``
    (filled with the first range value)."""
    sig = pref.signature
    endo = [n for n in var_order if sig.is_endogenous(n)]
    eqs = {}
    unconstrained = []
    for j, var in enumerate(endo):
        parents = tuple(sig.exogenous) + tuple(endo[:j])
        table = {}
        for u in sig.contexts():
            for ys in itertools.product(*(sig.ranges[y] for y in endo[:j])):
                row = tuple(u) + ys
                if u in c_dagger:
                    asg = Assignment(tuple(zip(endo[:j], ys)))
                    b = min_atom(pref, c_dagger[u], asg, var_order, value_orders)
                    table[row] = b[sig.index[var]]
                else:
                    table[row] = sig.ranges[var][0]
                    unconstrained.append((var, row))
        eqs[var] = Equation(parents, table)
    return CausalModel(sig, eqs), unconstrained


# -- weights ----------------------------------------------------------------------------

@dataclass
class Fit:
    prob: dict
    util: dict
    weights: dict
    margin: Fraction | None
    method: str


def fit_weights(pref: Preference, actions: Sequence[Action], c_dagger: Mapping[Context, Atom],
                model: CausalModel, ranks: Sequence[int] | None = None) -> Fit:
    """Fit w(atom) over outcome atoms of contexts in ``c_dagger`` so that the
    sum over those contexts of w(outcome) ranks ``actions`` as ``pref`` does;
    then p is uniform on ``c_dagger`` and mu = w / p (zero elsewhere)."""
    sig = pref.signature
    if ranks is None:
        ranks = dense_ranks(pref, actions)
    contexts = [u for u in sig.contexts() if u in c_dagger]
    for u in contexts:
        if solve(model, u) != c_dagger[u]:
            raise ConstructionError(
                "fit_weights", f"model's actual atom at context {key_of(u)} is not the "
                f"non-null atom {sig.format_atom(c_dagger[u])}")
    if not contexts:
        if len(set(ranks)) > 1:
            raise ConstructionError("fit_weights", "no non-null context but actions are ranked")
        n = sig.n_contexts
        prob = {u: Fraction(1, n) for u in sig.contexts()}
        return Fit(prob, {a: Fraction(0) for a in sig.atoms()}, {}, None, "trivial")
    items = []
    for act in actions:
        item: dict = {}
        for u in contexts:
            b = solve(model, u, h_at(act, sig, c_dagger[u]))
            item[b] = item.get(b, 0) + 1
        items.append(item)
    res = additive_feasibility(items, ranks)
    if not res.feasible:
        raise ConstructionError("fit_weights", "no additive weights reproduce the ranking "
                                "(cancellation fails on the presented actions)")
    k = len(contexts)
    prob = {u: (Fraction(1, k) if u in c_dagger else Fraction(0)) for u in sig.contexts()}
    n_exo = len(sig.exogenous)
    util = {}
    for a in sig.atoms():
        if a[:n_exo] in c_dagger:
            util[a] = Fraction(res.solution.get(a, 0)) * k
        else:
            util[a] = Fraction(0)
    weights = {a: Fraction(w) for a, w in res.solution.items()}
    return Fit(prob, util, weights, res.margin, res.method)


# -- pipeline ---------------------------------------------------------------------------

@dataclass
class ConstructedRep:
    rep: Representation
    c_dagger: dict
    var_order: VarOrder
    choices: Choices
    trace: dict
    reports: list = field(default_factory=list)
    verified: bool = False

    @property
    def model(self) -> CausalModel:
        return self.rep.model


def induced_ranks(rep: Representation, actions: Sequence[Action]) -> list[int]:
    """Dense ranks of ``actions`` by expected utility under ``rep``."""
    eus = [expected_utility(rep, a) for a in actions]
    levels = {v: i for i, v in enumerate(sorted(set(eus)))}
    return [levels[v] for v in eus]


def construct_representation(pref: Preference, actions: Sequence[Action],
                             choices: Choices | None = None,
                             reports: list[AxiomReport] | None = None,
                             scope: Scope | None = None,
                             ranks: Sequence[int] | None = None) -> ConstructedRep:
    sig = pref.signature
    choices = choices or Choices()
    actions = list(actions)
    if reports is None:
        reports = check_all(pref, actions, scope)
    verdict = overall_verdict(reports)
    if verdict != PASS:
        bad = [f"{r.axiom} {r.verdict}" for r in reports
               if r.axiom != "A3*" and r.verdict != PASS]
        raise ConstructionError("check_all", "axioms not satisfied: " + ", ".join(bad))
    by_id = {r.axiom: r for r in reports}
    c_dagger = dict(by_id["A2"].data["c_dagger"])
    graph = by_id["A5"].data["graph"]
    try:
        var_order = linearize_affects(graph, sig, choices.priority)
    except ValueError as e:
        raise ConstructionError("linearize", str(e)) from None
    values = ValueOrders(sig, choices.values, choices.seed)
    model, unconstrained = build_equations(pref, c_dagger, var_order, values)
    if ranks is None:
        ranks = dense_ranks(pref, actions)
    fit = fit_weights(pref, actions, c_dagger, model, ranks)
    rep = Representation(model, fit.prob, fit.util)
    got = induced_ranks(rep, actions)
    verified = got == list(ranks)
    if not verified:
        i = next(i for i in range(len(actions)) if got[i] != ranks[i])
        raise ConstructionError("verify", f"constructed representation misranks action #{i}")
    min_table = []
    for u in sig.contexts():
        if u not in c_dagger:
            continue
        for asg in sig.assignments():
            b = min_atom(pref, c_dagger[u], asg, var_order, values)
            min_table.append({"context": key_of(u), "assignment": format_assignment(asg),
                              "atom": key_of(b)})
    trace = {
        "var_order": list(var_order),
        "choices": choices.to_json(),
        "c_dagger": [key_of(u) for u in sig.contexts() if u in c_dagger],
        "min_atoms": min_table,
        "unconstrained_rows": [{"variable": v, "row": key_of(r)} for v, r in unconstrained],
        "weights": {key_of(a): str(fit.weights[a]) for a in sig.atoms() if a in fit.weights},
        "margin": None if fit.margin is None else str(fit.margin),
        "fit_method": fit.method,
        "model_sha256": model_hash(model),
    }
    return ConstructedRep(rep, c_dagger, var_order, choices, trace, reports, verified)


# -- identification ----------------------------------------------------------------------

def models_equivalent(m1: CausalModel, m2: CausalModel, contexts: Sequence[Context]):
    """Whether every intervened solution agrees on every endogenous variable
    at the given contexts. Returns ``(equal, witness)``."""
    sig = m1.signature
    if m2.signature != sig:
        raise ValueError("models have different signatures")
    for u in contexts:
        for asg in sig.assignments():
            s1, s2 = solve(m1, u, asg), solve(m2, u, asg)
            for x in sig.endogenous:
                i = sig.index[x]
                if s1[i] != s2[i]:
                    return False, {"context": list(u), "assignment": format_assignment(asg),
                                   "variable": x, "values": [s1[i], s2[i]]}
    return True, None


def rerouted_construction(pref: Preference, actions: Sequence[Action], base: ConstructedRep,
                          ranks: Sequence[int]) -> ConstructedRep | None:
    """A second representation obtained by changing one equation row of
    ``base`` to another value the preference fixes there.

    Rows are tried where some intervention at a non-null atom fixes a
    variable to more than one value. A candidate is kept only if weights can
    be refitted and the result reproduces ``ranks`` on ``actions``.
    """
    sig = pref.signature
    model = base.model
    endo = [n for n in base.var_order if sig.is_endogenous(n)]
    tried = set()
    for u, a in sorted(base.c_dagger.items()):
        for asg in sig.assignments():
            b = solve(model, u, asg)
            for j, var in enumerate(endo):
                if var in asg:
                    continue
                m = fixed_values(pref, a, asg, var)
                if len(m) < 2:
                    continue
                row = tuple(u) + tuple(b[sig.index[y]] for y in endo[:j])
                eq = model.equations[var]
                for x in m:
                    if x == eq.table[row] or (var, row, x) in tried:
                        continue
                    tried.add((var, row, x))
                    eqs = dict(model.equations)
                    eqs[var] = Equation(eq.parents, {**eq.table, row: x})
                    alt = CausalModel(sig, eqs)
                    try:
                        fit = fit_weights(pref, actions, base.c_dagger, alt, ranks)
                    except ConstructionError:
                        continue
                    rep = Representation(alt, fit.prob, fit.util)
                    if induced_ranks(rep, actions) != list(ranks):
                        continue
                    trace = dict(base.trace, model_sha256=model_hash(alt),
                                 weights={key_of(k): str(w) for k, w in fit.weights.items()},
                                 margin=None if fit.margin is None else str(fit.margin),
                                 fit_method=fit.method,
                                 rerouted={"variable": var, "row": key_of(row),
                                           "from": eq.table[row], "to": x,
                                           "atom": key_of(a),
                                           "assignment": format_assignment(asg)})
                    return ConstructedRep(rep, dict(base.c_dagger), base.var_order,
                                          base.choices, trace, base.reports, True)
    return None


@dataclass
class Identification:
    verdict: str  # identified, not identified, inconsistent or inconclusive
    strong_definiteness: AxiomReport
    runs: list
    witness: dict | None
    pair: tuple | None = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict,
               "strong_definiteness": self.strong_definiteness.to_json(),
               "trials": [self._trial_json(r) for r in self.runs]}
        if self.witness is not None:
            out["witness"] = dict(self.witness, trials=list(self.pair))
        return out

    @staticmethod
    def _trial_json(run: ConstructedRep) -> dict:
        out = {"choices": run.choices.to_json(), "var_order": list(run.var_order),
               "model_sha256": run.trace["model_sha256"]}
        if "rerouted" in run.trace:
            out["rerouted"] = run.trace["rerouted"]
        return out


def check_identified(pref: Preference, actions: Sequence[Action], trials: int = 5,
                     seed=0, reports: list[AxiomReport] | None = None,
                     scope: Scope | None = None) -> Identification:
    """Run the construction under ``trials`` different admissible choices and
    compare the resulting models on the non-null contexts. When strong
    definiteness fails and the trials all agree, a rerouted construction
    (see :func:`rerouted_construction`) supplies the second model."""
    sig = pref.signature
    actions = list(actions)
    if reports is None:
        reports = check_all(pref, actions, scope)
    a3s = next((r for r in reports if r.axiom == "A3*"), None)
    if a3s is None:
        a3s = check_strong_definiteness(pref, scope)
    ranks = dense_ranks(pref, actions)
    runs = [construct_representation(pref, actions, Choices.for_trial(k, seed, sig),
                                     reports, scope, ranks)
            for k in range(max(1, trials))]
    contexts = [u for u in sig.contexts() if u in runs[0].c_dagger]
    witness, pair = None, None
    for i, j in itertools.combinations(range(len(runs)), 2):
        same, w = models_equivalent(runs[i].model, runs[j].model, contexts)
        if not same:
            witness, pair = w, (i, j)
            break
    if witness is None and a3s.verdict == "fail":
        # value orders cannot move away from an atom's own value, so a tie
        # that includes it needs an explicit alternative
        alt = rerouted_construction(pref, actions, runs[0], ranks)
        if alt is not None:
            runs.append(alt)
            witness = models_equivalent(runs[0].model, alt.model, contexts)[1]
            pair = (0, len(runs) - 1)
    if a3s.verdict == PASS:
        verdict = "identified" if witness is None else "inconsistent"
    elif a3s.verdict == "fail":
        verdict = "not identified" if witness is not None else "inconsistent"
    else:
        verdict = "inconclusive"
    return Identification(verdict, a3s, runs, witness, pair)
