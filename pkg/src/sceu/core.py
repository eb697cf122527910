"""Signatures, recursive causal models with tabular equations, and interventions.

Values are integers drawn from finite declared ranges. Atoms and contexts are
plain tuples of values: an atom lists every variable in declaration order
(exogenous first, then endogenous), a context lists the exogenous variables.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

Atom = tuple[int, ...]
Context = tuple[int, ...]

DEFAULT_ENUM_CAP = 2 ** 20


class SignatureError(ValueError):
    pass


class ModelError(ValueError):
    pass


class NotRecursiveError(ModelError):
    def __init__(self, cycle):
        super().__init__(f"model is not recursive: cycle {' -> '.join(cycle)}")
        self.cycle = list(cycle)


class EnumerationTooLarge(ValueError):
    pass


class Signature:
    """Exogenous and endogenous variable names with finite integer ranges."""

    def __init__(self, exogenous: Sequence[str], endogenous: Sequence[str],
                 ranges: Mapping[str, Sequence[int]]):
        exogenous = tuple(exogenous)
        endogenous = tuple(endogenous)
        names = exogenous + endogenous
        if not exogenous:
            raise SignatureError("signature needs at least one exogenous variable")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SignatureError(f"duplicate variable names: {dup}")
        rng = {}
        for name in names:
            if name not in ranges:
                raise SignatureError(f"no range declared for {name!r}")
            values = tuple(int(v) for v in ranges[name])
            if not values:
                raise SignatureError(f"range of {name!r} is empty")
            if len(set(values)) != len(values):
                raise SignatureError(f"range of {name!r} has duplicate values")
            rng[name] = values
        extra = sorted(set(ranges) - set(names))
        if extra:
            raise SignatureError(f"ranges given for undeclared variables: {extra}")
        self.exogenous = exogenous
        self.endogenous = endogenous
        self.variables = names
        self.ranges = MappingProxyType(rng)
        self.index = MappingProxyType({n: i for i, n in enumerate(names)})
        self._hash = hash((exogenous, endogenous, tuple(rng[n] for n in names)))

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return (self.exogenous == other.exogenous
                and self.endogenous == other.endogenous
                and dict(self.ranges) == dict(other.ranges))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return (f"Signature(exogenous={list(self.exogenous)}, "
                f"endogenous={list(self.endogenous)})")

    def is_endogenous(self, name: str) -> bool:
        return name in self.index and self.index[name] >= len(self.exogenous)

    def check_value(self, name: str, value: int) -> None:
        if name not in self.ranges:
            raise SignatureError(f"unknown variable {name!r}")
        if value not in self.ranges[name]:
            raise SignatureError(
                f"value {value} not in range of {name!r} {list(self.ranges[name])}")

    # -- enumeration ---------------------------------------------------

    @cached_property
    def n_atoms(self) -> int:
        return int(np.prod([len(self.ranges[n]) for n in self.variables], dtype=object))

    @cached_property
    def n_contexts(self) -> int:
        return int(np.prod([len(self.ranges[n]) for n in self.exogenous], dtype=object))

    def atoms(self, cap: int = DEFAULT_ENUM_CAP) -> list[Atom]:
        if self.n_atoms > cap:
            raise EnumerationTooLarge(f"{self.n_atoms} atoms exceed cap {cap}")
        return self._atoms

    def contexts(self, cap: int = DEFAULT_ENUM_CAP) -> list[Context]:
        if self.n_contexts > cap:
            raise EnumerationTooLarge(f"{self.n_contexts} contexts exceed cap {cap}")
        return self._contexts

    @cached_property
    def _atoms(self) -> list[Atom]:
        return list(itertools.product(*(self.ranges[n] for n in self.variables)))

    @cached_property
    def _contexts(self) -> list[Context]:
        return list(itertools.product(*(self.ranges[n] for n in self.exogenous)))

    @cached_property
    def atom_index(self) -> Mapping[Atom, int]:
        return MappingProxyType({a: i for i, a in enumerate(self._atoms)})

    def atoms_of_context(self, context: Context) -> list[Atom]:
        n = len(self.exogenous)
        return [a for a in self._atoms if a[:n] == context]

    def context_of(self, atom: Atom) -> Context:
        return atom[:len(self.exogenous)]

    def restrict(self, atom: Atom, names: Iterable[str]) -> dict[str, int]:
        return {n: atom[self.index[n]] for n in names}

    def atom_dict(self, atom: Atom) -> dict[str, int]:
        return dict(zip(self.variables, atom))

    def make_atom(self, values: Mapping[str, int]) -> Atom:
        missing = [n for n in self.variables if n not in values]
        if missing:
            raise SignatureError(f"atom is missing variables {missing}")
        for n in self.variables:
            self.check_value(n, values[n])
        return tuple(int(values[n]) for n in self.variables)

    def make_context(self, values: Mapping[str, int]) -> Context:
        missing = [n for n in self.exogenous if n not in values]
        if missing:
            raise SignatureError(f"context is missing variables {missing}")
        for n in self.exogenous:
            self.check_value(n, values[n])
        return tuple(int(values[n]) for n in self.exogenous)

    def format_atom(self, atom: Atom) -> str:
        return " & ".join(f"{n}={v}" for n, v in zip(self.variables, atom))

    def assignments(self, names: Sequence[str] | None = None) -> list["Assignment"]:
        """All partial assignments over ``names`` (default: all endogenous).

        Ordered by size, then by variable subset in declaration order, then by
        values in range order. The empty assignment comes first.
        """
        names = tuple(self.endogenous if names is None else names)
        out = []
        for k in range(len(names) + 1):
            for subset in itertools.combinations(names, k):
                for values in itertools.product(*(self.ranges[n] for n in subset)):
                    out.append(Assignment(tuple(zip(subset, values))))
        return out

    def full_assignments(self) -> list["Assignment"]:
        names = self.endogenous
        return [Assignment(tuple(zip(names, values)))
                for values in itertools.product(*(self.ranges[n] for n in names))]


@dataclass(frozen=True)
class Assignment:
    """An intervention payload ``Y1 <- y1, ..., Yn <- yn`` with distinct variables."""

    pairs: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        pairs = tuple((str(n), int(v)) for n, v in self.pairs)
        names = [n for n, _ in pairs]
        if len(set(names)) != len(names):
            raise SignatureError(f"assignment sets a variable twice: {names}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def of(cls, mapping: Mapping[str, int] | None = None, **kw) -> "Assignment":
        items = dict(mapping or {}, **kw)
        return cls(tuple(items.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.pairs)

    def as_dict(self) -> dict[str, int]:
        return dict(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, name):
        return any(n == name for n, _ in self.pairs)

    def __getitem__(self, name):
        for n, v in self.pairs:
            if n == name:
                return v
        raise KeyError(name)

    def extend(self, other: "Assignment | Mapping[str, int]") -> "Assignment":
        """Union with another assignment on disjoint variables."""
        extra = other.pairs if isinstance(other, Assignment) else tuple(other.items())
        return Assignment(self.pairs + tuple(extra))

    def canonical(self, sig: Signature) -> tuple[tuple[int, int], ...]:
        """Order-independent key: (variable index, value) sorted by index."""
        return tuple(sorted((sig.index[n], v) for n, v in self.pairs))

    def sorted(self, sig: Signature) -> "Assignment":
        return Assignment(tuple(sorted(self.pairs, key=lambda p: sig.index[p[0]])))

    def validate(self, sig: Signature) -> None:
        for n, v in self.pairs:
            if n not in sig.index:
                raise SignatureError(f"unknown variable {n!r}")
            if not sig.is_endogenous(n):
                raise SignatureError(f"cannot intervene on exogenous variable {n!r}")
            sig.check_value(n, v)

    def holds_in(self, sig: Signature, atom: Atom) -> bool:
        return all(atom[sig.index[n]] == v for n, v in self.pairs)

    def __str__(self):
        return ", ".join(f"{n}:={v}" for n, v in self.pairs)


EMPTY = Assignment()


def assignment_from_canonical(sig: Signature, key) -> Assignment:
    return Assignment(tuple((sig.variables[i], v) for i, v in key))


@dataclass(frozen=True)
class Equation:
    """Structural equation stored as a table over a declared parent set."""

    parents: tuple[str, ...]
    table: Mapping[tuple[int, ...], int]

    def __call__(self, parent_values: tuple[int, ...]) -> int:
        return self.table[parent_values]


def constant_equation(value: int) -> Equation:
    return Equation((), MappingProxyType({(): int(value)}))


class CausalModel:
    """A causal model over a signature with one tabular equation per endogenous variable.

    The table for ``X`` must be total over the joint range of its declared
    parents and return values in the range of ``X``.
    """

    def __init__(self, signature: Signature, equations: Mapping[str, Equation]):
        self.signature = signature
        eqs = {}
        for name in signature.endogenous:
            if name not in equations:
                raise ModelError(f"no equation for endogenous variable {name!r}")
            eq = equations[name]
            parents = tuple(eq.parents)
            for p in parents:
                if p not in signature.index:
                    raise ModelError(f"equation of {name!r}: unknown parent {p!r}")
                if p == name:
                    raise ModelError(f"equation of {name!r} lists itself as parent")
            if len(set(parents)) != len(parents):
                raise ModelError(f"equation of {name!r}: duplicate parents")
            table = {tuple(int(x) for x in k): int(v) for k, v in eq.table.items()}
            for key in itertools.product(*(signature.ranges[p] for p in parents)):
                if key not in table:
                    raise ModelError(
                        f"equation of {name!r}: table missing row {','.join(map(str, key))}")
                if table[key] not in signature.ranges[name]:
                    raise ModelError(
                        f"equation of {name!r}: value {table[key]} at row "
                        f"{','.join(map(str, key))} not in range {list(signature.ranges[name])}")
            n_rows = int(np.prod([len(signature.ranges[p]) for p in parents], dtype=object))
            if len(table) != n_rows:
                raise ModelError(f"equation of {name!r}: table has rows outside the parent range")
            eqs[name] = Equation(parents, MappingProxyType(table))
        extra = sorted(set(equations) - set(signature.endogenous))
        if extra:
            raise ModelError(f"equations given for non-endogenous variables: {extra}")
        self.equations = MappingProxyType(eqs)
        self._solve_cache: dict = {}

    def __repr__(self):
        return f"CausalModel({self.signature!r})"

    @cached_property
    def order(self) -> tuple[str, ...] | None:
        result = check_recursive(self)
        return tuple(result) if isinstance(result, RecursiveOrder) else None

    def parent_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.signature.endogenous)
        for x, eq in self.equations.items():
            for p in eq.parents:
                if self.signature.is_endogenous(p):
                    g.add_edge(p, x)
        return g


class RecursiveOrder(tuple):
    """Topological order of the endogenous variables (acyclic result)."""


class Cycle(tuple):
    """Witness that the declared-parent graph has a cycle."""


def check_recursive(model: CausalModel) -> RecursiveOrder | Cycle:
    """Topological order of the declared-parent graph on the endogenous variables,
    or a cycle witness. Ties are broken by declaration order."""
    sig = model.signature
    g = model.parent_graph()
    try:
        order = list(nx.lexicographical_topological_sort(g, key=sig.index.__getitem__))
        return RecursiveOrder(order)
    except nx.NetworkXUnfeasible:
        pass
    edges = nx.find_cycle(g)
    cycle = [u for u, _ in edges]
    start = min(range(len(cycle)), key=lambda i: sig.index[cycle[i]])
    return Cycle(cycle[start:] + cycle[:start])


def _require_order(model: CausalModel) -> tuple[str, ...]:
    order = model.order
    if order is None:
        raise NotRecursiveError(check_recursive(model))
    return order


def solve(model: CausalModel, context: Context, assignment: Assignment = EMPTY) -> Atom:
    """The unique atom satisfying the context and every equation of the model
    after replacing the equations of ``assignment``'s variables by constants."""
    key = (tuple(context), assignment.pairs)
    hit = model._solve_cache.get(key)
    if hit is not None:
        return hit
    sig = model.signature
    order = _require_order(model)
    if len(context) != len(sig.exogenous):
        raise ModelError(f"context has {len(context)} values, expected {len(sig.exogenous)}")
    values = dict(zip(sig.exogenous, context))
    forced = assignment.as_dict()
    for name in order:
        if name in forced:
            values[name] = forced[name]
        else:
            eq = model.equations[name]
            values[name] = eq.table[tuple(values[p] for p in eq.parents)]
    atom = tuple(values[n] for n in sig.variables)
    model._solve_cache[key] = atom
    return atom


def intervene(model: CausalModel, assignment: Assignment) -> CausalModel:
    """The submodel in which each assigned variable's equation is a constant."""
    assignment.validate(model.signature)
    _require_order(model)
    eqs = dict(model.equations)
    for name, value in assignment.pairs:
        eqs[name] = constant_equation(value)
    return CausalModel(model.signature, eqs)


def enumerate_atoms(sig: Signature, cap: int = DEFAULT_ENUM_CAP) -> Iterator[Atom]:
    yield from sig.atoms(cap)


def enumerate_contexts(sig: Signature, cap: int = DEFAULT_ENUM_CAP) -> Iterator[Context]:
    yield from sig.contexts(cap)


def satisfies_equations(model: CausalModel, atom: Atom, assignment: Assignment = EMPTY) -> bool:
    """Whether ``atom`` satisfies every (possibly replaced) equation."""
    sig = model.signature
    forced = assignment.as_dict()
    for name, eq in model.equations.items():
        val = atom[sig.index[name]]
        if name in forced:
            if val != forced[name]:
                return False
        elif eq.table[tuple(atom[sig.index[p]] for p in eq.parents)] != val:
            return False
    return True


def outcome_table(model: CausalModel, contexts: Sequence[Context],
                  assignments: Sequence[Assignment]) -> np.ndarray:
    """Solved atoms for every (context, assignment) pair.

    Returns an integer array of shape (len(contexts), len(assignments),
    n_variables). Each endogenous variable is evaluated once for the whole
    batch by a vectorised table lookup.
    """
    sig = model.signature
    order = _require_order(model)
    nc, na, nv = len(contexts), len(assignments), len(sig.variables)
    out = np.zeros((nc, na, nv), dtype=np.int64)
    if nc == 0 or na == 0:
        return out
    out[:, :, :len(sig.exogenous)] = np.asarray(contexts, dtype=np.int64)[:, None, :]
    forced = np.zeros((na, nv), dtype=bool)
    forced_val = np.zeros((na, nv), dtype=np.int64)
    for j, asg in enumerate(assignments):
        for n, v in asg.pairs:
            forced[j, sig.index[n]] = True
            forced_val[j, sig.index[n]] = v
    for name in order:
        i = sig.index[name]
        eq = model.equations[name]
        # mixed-radix code of the parent values, then lookup in a dense table
        code = np.zeros((nc, na), dtype=np.int64)
        dense_shape = []
        for p in eq.parents:
            rng = sig.ranges[p]
            pos = {v: k for k, v in enumerate(rng)}
            lut = np.full(max(rng) - min(rng) + 1, -1, dtype=np.int64)
            for v, k in pos.items():
                lut[v - min(rng)] = k
            code = code * len(rng) + lut[out[:, :, sig.index[p]] - min(rng)]
            dense_shape.append(len(rng))
        dense = np.empty(int(np.prod(dense_shape, dtype=np.int64)), dtype=np.int64)
        for k, key in enumerate(itertools.product(*(sig.ranges[p] for p in eq.parents))):
            dense[k] = eq.table[key]
        col = dense[code]
        out[:, :, i] = np.where(forced[None, :, i], forced_val[None, :, i], col)
    return out
