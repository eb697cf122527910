"""Preference sources, expected utility, and the relations derived from preferences.

A preference is anything that can compare two actions. Two concrete sources
are provided: explicit rank tables, and value oracles that score an action by
summing a utility over the outcomes it produces at a fixed set of atoms. The
oracle induced by a representation ``(M, p, mu)`` is the special case with one
term per context of positive probability.
"""
from __future__ import annotations

import functools
import itertools
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .core import (EMPTY, Assignment, Atom, CausalModel, Context, Signature,
                   SignatureError, solve)
from .lang import (Action, Formula, compile_h, beta, format_action, formula_mask,
                   h_at, on_atom, validate_action)


class BudgetExhausted(RuntimeError):
    pass


class PreferenceQueryError(LookupError):
    """The source cannot answer a comparison (e.g. action not in a table)."""


class QueryBudget:
    def __init__(self, max_queries: int | None = None):
        self.max_queries = max_queries
        self.issued = 0

    def charge(self, n: int = 1) -> None:
        if self.max_queries is not None and self.issued + n > self.max_queries:
            raise BudgetExhausted(
                f"query budget of {self.max_queries} exhausted")
        self.issued += n

    @property
    def remaining(self):
        if self.max_queries is None:
            return None
        return self.max_queries - self.issued


# -- representations ---------------------------------------------------------

def _fraction(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("use exact rationals, not floats")
    return Fraction(x)


@dataclass
class Representation:
    """A model with a probability over contexts and a utility over atoms."""

    model: CausalModel
    prob: Mapping[Context, Fraction]
    util: Mapping[Atom, Fraction]

    def __post_init__(self):
        sig = self.model.signature
        contexts = set(sig.contexts())
        prob = {}
        for u, w in self.prob.items():
            u = tuple(u)
            if u not in contexts:
                raise SignatureError(f"probability given for unknown context {u}")
            w = _fraction(w)
            if w < 0:
                raise ValueError(f"negative probability {w} at context {u}")
            prob[u] = w
        total = sum(prob.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.prob = {u: prob.get(u, Fraction(0)) for u in sig.contexts()}
        atoms = set(sig.atoms())
        util = {tuple(a): _fraction(v) for a, v in self.util.items()}
        missing = [a for a in sig.atoms() if a not in util]
        if missing:
            raise ValueError(f"utility missing for atom {sig.format_atom(missing[0])}")
        extra = [a for a in util if a not in atoms]
        if extra:
            raise SignatureError(f"utility given for unknown atom {extra[0]}")
        self.util = {a: util[a] for a in sig.atoms()}

    @property
    def signature(self) -> Signature:
        return self.model.signature

    @property
    def support(self) -> list[Context]:
        return [u for u, w in self.prob.items() if w > 0]


def expected_utility(rep: Representation, action: Action) -> Fraction:
    """Sum over contexts of p(u) * mu(beta(M, A, u))."""
    total = Fraction(0)
    for u, w in rep.prob.items():
        if w:
            total += w * rep.util[beta(rep.model, action, u)]
    return total


# -- preference sources ------------------------------------------------------

def _sign(x) -> int:
    return (x > 0) - (x < 0)


class Preference:
    """Base class: a complete, transitive comparison of actions.

    ``compare(A, B)`` returns 1 if A is strictly preferred, 0 for
    indifference, -1 otherwise. Answers are memoised on a key derived from
    the actions' h-maps, so h-equal actions share one answer. Fresh answers
    are charged to the query budget.
    """

    def __init__(self, signature: Signature, budget: QueryBudget | None = None):
        self.signature = signature
        self.budget = budget or QueryBudget()
        self._memo: dict = {}
        self._keys: dict = {}
        self._null: dict = {}
        self._fixsets: dict = {}
        self._lock = threading.Lock()

    def key(self, action: Action):
        k = self._keys.get(action)
        if k is None:
            k = self._make_key(action)
            self._keys[action] = k
        return k

    def _make_key(self, action: Action):
        return compile_h(action, self.signature).table

    def _compare(self, a: Action, b: Action) -> int:
        raise NotImplementedError

    def compare(self, a: Action, b: Action) -> int:
        ka, kb = self.key(a), self.key(b)
        if ka == kb:
            return 0
        with self._lock:
            hit = self._memo.get((ka, kb))
            if hit is not None:
                return hit
            self.budget.charge()
            r = self._compare(a, b)
            self._memo[(ka, kb)] = r
            self._memo[(kb, ka)] = -r
            return r

    @property
    def queries(self) -> int:
        return self.budget.issued

    def indifferent(self, a: Action, b: Action) -> bool:
        return self.compare(a, b) == 0

    def weakly_prefers(self, a: Action, b: Action) -> bool:
        return self.compare(a, b) >= 0


class TablePreference(Preference):
    """A weak order given as integer ranks over listed actions (higher is better).

    Queries are answered by syntactic lookup first. An unlisted action is
    matched by its h-map if every listed action with that h-map has the same
    rank; otherwise the query fails.
    """

    def __init__(self, signature: Signature, actions: Sequence[Action],
                 ranks: Sequence[int], budget: QueryBudget | None = None):
        super().__init__(signature, budget)
        if len(actions) != len(ranks):
            raise ValueError("actions and ranks differ in length")
        self.actions = list(actions)
        self.ranks = [int(r) for r in ranks]
        self._rank: dict[Action, int] = {}
        by_ext: dict = {}
        for act, r in zip(self.actions, self.ranks):
            validate_action(act, signature)
            if act in self._rank and self._rank[act] != r:
                raise ValueError(f"action listed twice with different ranks: "
                                 f"{format_action(act)}")
            self._rank[act] = r
            by_ext.setdefault(compile_h(act, signature).table, set()).add(r)
        self._ext_rank = {k: next(iter(rs)) for k, rs in by_ext.items() if len(rs) == 1}

    def rank_of(self, action: Action) -> int:
        r = self._rank.get(action)
        if r is not None:
            return r
        r = self._ext_rank.get(compile_h(action, self.signature).table)
        if r is None:
            raise PreferenceQueryError(f"no rank for action {format_action(action)}")
        return r

    def compare(self, a: Action, b: Action) -> int:
        # syntactic lookup: h-equal actions may carry different ranks here
        ra, rb = self.rank_of(a), self.rank_of(b)
        with self._lock:
            pair = (a, b)
            if pair not in self._memo:
                self.budget.charge()
                self._memo[pair] = self._memo[(b, a)] = None
        return _sign(ra - rb)


@dataclass(frozen=True)
class Term:
    """One additive term: at ``atom``, the outcome is solved in ``model``."""

    atom: Atom
    model: CausalModel
    weight: Fraction


class ValuePreference(Preference):
    """Scores an action by sum of weight * util(solve(model, ctx(atom), h_A(atom))).

    Only the atoms listed in the terms matter, so the memo key is the h-map
    restricted to them.
    """

    def __init__(self, signature: Signature, terms: Sequence[Term],
                 util: Mapping[Atom, Fraction], budget: QueryBudget | None = None):
        super().__init__(signature, budget)
        self.terms = tuple(terms)
        self.util = dict(util)
        self._values: dict = {}
        n = len(signature.exogenous)
        self._term_ctx = [t.atom[:n] for t in self.terms]

    def _make_key(self, action: Action):
        sig = self.signature
        return tuple(h_at(action, sig, t.atom).canonical(sig) for t in self.terms)

    def value(self, action: Action) -> Fraction:
        k = self.key(action)
        v = self._values.get(k)
        if v is None:
            sig = self.signature
            v = Fraction(0)
            for t, u in zip(self.terms, self._term_ctx):
                asg = h_at(action, sig, t.atom)
                v += t.weight * self.util[solve(t.model, u, asg)]
            self._values[k] = v
        return v

    def _compare(self, a: Action, b: Action) -> int:
        return _sign(self.value(a) - self.value(b))


def induce_preferences(rep: Representation, actions: Sequence[Action] | None = None,
                       budget: QueryBudget | None = None) -> ValuePreference:
    """The preference ranking actions by expected utility under ``rep``."""
    model = rep.model
    terms = [Term(solve(model, u), model, w) for u, w in rep.prob.items() if w > 0]
    pref = ValuePreference(rep.signature, terms, rep.util, budget)
    pref.rep = rep
    pref.actions = list(actions) if actions is not None else []
    return pref


def dense_ranks(pref: Preference, actions: Sequence[Action]) -> list[int]:
    """Integer ranks (0 = least preferred) consistent with ``pref`` on ``actions``."""
    order = sorted(range(len(actions)),
                   key=functools.cmp_to_key(lambda i, j: pref.compare(actions[i], actions[j])))
    ranks = [0] * len(actions)
    r = 0
    for pos, i in enumerate(order):
        if pos and pref.compare(actions[order[pos - 1]], actions[i]) != 0:
            r += 1
        ranks[i] = r
    return ranks


def to_table(pref: Preference, actions: Sequence[Action]) -> TablePreference:
    """Materialise ``pref`` on a finite action list as a rank table."""
    seen = {}
    unique = []
    for a in actions:
        if a not in seen:
            seen[a] = len(unique)
            unique.append(a)
    return TablePreference(pref.signature, unique, dense_ranks(pref, unique))


def query_family(sig: Signature, extra: Iterable[Action] = ()) -> list[Action]:
    """Every conditional action the derived relations below can ask about,
    followed by ``extra``."""
    out = [on_atom(sig, a, asg) for a in sig.atoms() for asg in sig.assignments()]
    return out + list(extra)


# -- derived relations -------------------------------------------------------

def fixes(pref: Preference, atom: Atom, assignment: Assignment, var: str, value: int) -> bool:
    """Whether intervening ``assignment`` at ``atom`` fixes ``var`` to ``value``:
    adding ``var := value`` to the intervention is indifferent."""
    if var in assignment:
        raise ValueError(f"{var!r} is already set by the intervention")
    sig = pref.signature
    with_z = on_atom(sig, atom, assignment.extend({var: value}))
    without = on_atom(sig, atom, assignment)
    return pref.compare(with_z, without) == 0


def fixed_values(pref: Preference, atom: Atom, assignment: Assignment, var: str) -> list[int]:
    """The values ``var`` is fixed to by ``assignment`` at ``atom``, in range order."""
    sig = pref.signature
    key = (atom, assignment.canonical(sig), var)
    hit = pref._fixsets.get(key)
    if hit is None:
        hit = [x for x in sig.ranges[var] if fixes(pref, atom, assignment, var, x)]
        pref._fixsets[key] = hit
    return list(hit)


def null_probes(sig: Signature) -> list[Assignment]:
    """Full endogenous assignments followed by single-variable assignments."""
    singles = [Assignment(((n, v),)) for n in sig.endogenous for v in sig.ranges[n]]
    return sig.full_assignments() + singles


def is_null_atom(pref: Preference, atom: Atom) -> bool:
    """Whether every probe intervention conditioned on ``atom`` is indifferent
    to doing nothing there."""
    return null_witness(pref, atom) is None


def null_witness(pref: Preference, atom: Atom) -> Assignment | None:
    """A probe intervention that is not indifferent to doing nothing at
    ``atom``, or None if the atom is null."""
    if atom in pref._null:
        return pref._null[atom]
    sig = pref.signature
    base = on_atom(sig, atom, EMPTY)
    found = next((p for p in null_probes(sig)
                  if pref.compare(on_atom(sig, atom, p), base) != 0), None)
    pref._null[atom] = found
    return found


def is_null_formula(pref: Preference, formula: Formula) -> bool:
    sig = pref.signature
    mask = formula_mask(sig, formula)
    return all(is_null_atom(pref, a) for k, a in enumerate(sig.atoms()) if (mask >> k) & 1)


def non_null_atoms(pref: Preference) -> list[Atom]:
    return [a for a in pref.signature.atoms() if not is_null_atom(pref, a)]


def affected_witness(pref: Preference, atom: Atom, cause: str, effect: str):
    """A tuple ``(Z<-z, y, x)`` on which adding ``cause := y`` changes whether
    ``effect = x`` is fixed, or None."""
    if cause == effect:
        raise ValueError("cause and effect must differ")
    sig = pref.signature
    others = [n for n in sig.endogenous if n not in (cause, effect)]
    for base in sig.assignments(others):
        for x in sig.ranges[effect]:
            before = fixes(pref, atom, base, effect, x)
            for y in sig.ranges[cause]:
                if fixes(pref, atom, base.extend({cause: y}), effect, x) != before:
                    return base, y, x
    return None


def affected(pref: Preference, atom: Atom, cause: str, effect: str) -> bool:
    """Whether ``effect`` is affected by ``cause`` at ``atom``."""
    return affected_witness(pref, atom, cause, effect) is not None


def affects_graph(pref: Preference, atoms: Sequence[Atom] | None = None) -> nx.DiGraph:
    """Union over non-null atoms of the affects relation, as edges cause -> effect."""
    sig = pref.signature
    if atoms is None:
        atoms = non_null_atoms(pref)
    g = nx.DiGraph()
    g.add_nodes_from(sig.endogenous)
    for cause, effect in itertools.permutations(sig.endogenous, 2):
        if any(affected(pref, a, cause, effect) for a in atoms):
            g.add_edge(cause, effect)
    return g
