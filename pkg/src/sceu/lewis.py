"""Closest-world (Lewis/Stalnaker) models over finite sets of worlds.

The ternary closeness relation is stored curried: for each world ``w`` the
model yields a sort key over worlds, and ``w1`` is closer to ``w`` than ``w2``
iff ``key(w1) < key(w2)``. Keys must be distinct per world so that every
per-world order is strict and total.
"""
from __future__ import annotations

from typing import Callable, Hashable, NamedTuple, Sequence

from .core import Assignment, Atom, CausalModel, Signature
from .lang import ExtFormula, Intervened, atom_implies


class NoClosestWorld(LookupError):
    pass


class LewisModel:
    def __init__(self, signature: Signature, worlds: Sequence[Hashable],
                 interpretation: Callable[[Hashable], Atom],
                 closeness: Callable[[Hashable], Callable[[Hashable], tuple]]):
        self.signature = signature
        self.worlds = worlds
        self.interpretation = interpretation
        self.closeness = closeness
        self._closest: dict = {}

    def closest(self, world, assignment: Assignment):
        """The closest world to ``world`` where ``assignment`` holds."""
        cache_key = (world, assignment.pairs)
        hit = self._closest.get(cache_key)
        if hit is not None:
            return hit
        sig = self.signature
        key = self.closeness(world)
        best, best_key = None, None
        for w in self.worlds:
            if not assignment.holds_in(sig, self.interpretation(w)):
                continue
            k = key(w)
            if best is None or k < best_key:
                best, best_key = w, k
        if best is None:
            raise NoClosestWorld(f"no world satisfies {assignment}")
        self._closest[cache_key] = best
        return best

    def check_orders(self, worlds=None) -> None:
        """Raise if some per-world order is not strict (two worlds share a key)."""
        for w in (self.worlds if worlds is None else worlds):
            key = self.closeness(w)
            seen = {}
            for v in self.worlds:
                k = key(v)
                if k in seen:
                    raise ValueError(f"order at {w!r} ties {seen[k]!r} and {v!r}")
                seen[k] = v


def lewis_satisfies(model: LewisModel, world, formula: ExtFormula) -> bool:
    sig = model.signature
    if isinstance(formula, Intervened):
        target = model.closest(world, formula.assignment)
        return atom_implies(sig, model.interpretation(target), formula.body)
    return atom_implies(sig, model.interpretation(world), formula)


class PairWorld(NamedTuple):
    """A world ``<current, origin>``; formulas are read off ``current``."""

    current: Atom
    origin: Atom


def build_pref_lewis(signature: Signature,
                     atom_order: Callable[[Atom], Callable[[Atom], tuple]]) -> LewisModel:
    """Lift a family of per-atom orders to a model whose worlds are atom pairs.

    At ``<a, a'>`` the order compares first components with the order for
    ``a``; among pairs sharing a first component the one whose second
    component is ``a`` comes first, the rest follow the global atom order.
    """
    atoms = signature.atoms()
    index = signature.atom_index
    worlds = [PairWorld(b, c) for b in atoms for c in atoms]
    keys: dict[Atom, Callable] = {}

    def closeness(world: PairWorld):
        a = world.current
        if a not in keys:
            keys[a] = atom_order(a)
        first = keys[a]
        return lambda w: (first(w.current), w.origin != a, index[w.origin])

    return LewisModel(signature, worlds, lambda w: w.current, closeness)


def _rank_first(values: Sequence[int], first: int) -> dict[int, int]:
    ranked = [first] + [v for v in values if v != first]
    return {v: k for k, v in enumerate(ranked)}


def causal_to_lewis(model: CausalModel) -> LewisModel:
    """The closest-world model induced by a recursive causal model.

    Worlds are atoms. At atom ``a``, atoms are compared variable by variable
    (exogenous first, then endogenous in the model's dependency order); an
    endogenous value scores best when it equals what the equation yields in
    ``a``'s context given the candidate's earlier values, ties broken by a
    value order starting at ``a``'s own value.
    """
    sig = model.signature
    order = model.order
    if order is None:
        raise ValueError("model is not recursive")
    n_exo = len(sig.exogenous)
    endo_pos = [sig.index[x] for x in order]
    eqs = [model.equations[x] for x in order]
    parent_pos = [[sig.index[p] for p in eq.parents] for eq in eqs]

    def closeness(a: Atom):
        value_rank = {name: _rank_first(sig.ranges[name], a[sig.index[name]])
                      for name in sig.variables}

        def key(b: Atom):
            out = []
            for i in range(n_exo):
                name = sig.variables[i]
                out.append((b[i] != a[i], value_rank[name][b[i]]))
            # endogenous values are scored against a's context
            mixed = list(a[:n_exo]) + list(b[n_exo:])
            for x, pos, eq, pp in zip(order, endo_pos, eqs, parent_pos):
                natural = eq.table[tuple(mixed[p] for p in pp)]
                out.append((b[pos] != natural, value_rank[x][b[pos]]))
            return tuple(out)

        return key

    return LewisModel(sig, sig.atoms(), lambda w: w, closeness)
