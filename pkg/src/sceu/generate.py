"""Seeded random instances: signatures, recursive models, representations and
action families.

All randomness for instance ``index`` under ``seed`` comes from
``random.Random(f"{seed}:{index}")``, so instances are reproducible one by one.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Assignment, CausalModel, Equation, Signature, solve
from .lang import (Action, And, Do, Eq, IfThenElse, Not, Or, atom_formula, on_atom)
from .prefs import Representation


@dataclass(frozen=True)
class Caps:
    max_exo: int = 2
    max_endo: int = 3
    max_range: int = 2
    max_atoms: int = 32
    conditionals: int = 12


@dataclass
class Instance:
    seed: int
    index: int
    rep: Representation
    actions: list
    ties: dict | None = None
    attempts: int = 1
    info: dict = field(default_factory=dict)

    @property
    def signature(self) -> Signature:
        return self.rep.signature


def random_signature(rng: random.Random, caps: Caps, endo_ranges=None) -> Signature:
    while True:
        n_exo = rng.randint(1, caps.max_exo)
        n_endo = rng.randint(1, caps.max_endo)
        exo = [f"U{i}" for i in range(n_exo)]
        endo = ["X", "Y", "Z", "W", "V", "T"][:n_endo] if n_endo <= 6 else \
            [f"X{i}" for i in range(n_endo)]
        ranges = {u: [0, 1] for u in exo}
        for x in endo:
            ranges[x] = list(range(rng.randint(2, max(2, caps.max_range))))
        if endo_ranges:
            for x, r in endo_ranges(endo).items():
                ranges[x] = r
        sig = Signature(exo, endo, ranges)
        if sig.n_atoms <= caps.max_atoms:
            return sig


def random_model(rng: random.Random, sig: Signature, order=None, p_edge=0.5) -> CausalModel:
    """Random recursive model; each endogenous variable draws parents from the
    exogenous variables and the endogenous ones earlier in ``order``."""
    if order is None:
        order = list(sig.endogenous)
        rng.shuffle(order)
    eqs = {}
    for pos, x in enumerate(order):
        pool = list(sig.exogenous) + order[:pos]
        parents = [p for p in pool if rng.random() < p_edge]
        parents.sort(key=sig.index.__getitem__)
        table = {key: rng.choice(sig.ranges[x])
                 for key in itertools.product(*(sig.ranges[p] for p in parents))}
        eqs[x] = Equation(tuple(parents), table)
    return CausalModel(sig, eqs)


def random_prob(rng: random.Random, sig: Signature) -> dict:
    weights = [rng.randint(1, 9) for _ in sig.contexts()]
    total = sum(weights)
    return {u: Fraction(w, total) for u, w in zip(sig.contexts(), weights)}


def random_util(rng: random.Random, sig: Signature) -> dict:
    """Injective utility: distinct integers."""
    values = rng.sample(range(10 * sig.n_atoms), sig.n_atoms)
    return {a: Fraction(v) for a, v in zip(sig.atoms(), values)}


def random_formula(rng: random.Random, sig: Signature, depth: int = 2):
    if depth == 0 or rng.random() < 0.3:
        name = rng.choice(sig.variables)
        return Eq(name, rng.choice(sig.ranges[name]))
    kind = rng.choice(("not", "and", "or"))
    if kind == "not":
        return Not(random_formula(rng, sig, depth - 1))
    cls = And if kind == "and" else Or
    return cls(random_formula(rng, sig, depth - 1), random_formula(rng, sig, depth - 1))


def random_assignment(rng: random.Random, sig: Signature) -> Assignment:
    names = [n for n in sig.endogenous if rng.random() < 0.5]
    return Assignment(tuple((n, rng.choice(sig.ranges[n])) for n in names))


def action_family(rng: random.Random, sig: Signature, n_conditionals: int = 12) -> list[Action]:
    """Primitive actions, every conditional ``if <atom> then do[P] else do[]``,
    and a few random two-branch conditionals on atoms and on formulas."""
    prims = sig.assignments()
    out: list[Action] = [Do(p) for p in prims]
    out += [on_atom(sig, a, p) for a in sig.atoms() for p in prims if p.pairs]
    atoms = sig.atoms()
    for _ in range(n_conditionals):
        a = rng.choice(atoms)
        out.append(IfThenElse(atom_formula(sig, a), Do(rng.choice(prims)), Do(rng.choice(prims))))
    for _ in range(n_conditionals):
        inner = IfThenElse(random_formula(rng, sig, 1), Do(rng.choice(prims)), Do(rng.choice(prims)))
        then = inner if rng.random() < 0.5 else Do(rng.choice(prims))
        out.append(IfThenElse(random_formula(rng, sig), then, Do(rng.choice(prims))))
    return list(dict.fromkeys(out))


def generate_instance(seed: int, index: int = 0, caps: Caps = Caps(),
                      ties: bool = False) -> Instance:
    if ties:
        return _generate_ties(seed, index, caps)
    rng = random.Random(f"{seed}:{index}")
    sig = random_signature(rng, caps)
    model = random_model(rng, sig)
    rep = Representation(model, random_prob(rng, sig), random_util(rng, sig))
    return Instance(seed, index, rep, action_family(rng, sig, caps.conditionals))


def _generate_ties(seed: int, index: int, caps: Caps) -> Instance:
    """An instance whose utility ties two outcomes of one intervention.

    The last-declared endogenous variable X is made a ternary sink. We look
    for a context u and a setting z of every other endogenous variable under
    which X takes a value different from its factual one, then give the atom
    with X set to the remaining third value the same utility.
    """
    for attempt in itertools.count():
        rng = random.Random(f"{seed}:{index}:ties:{attempt}")
        # 3 * 2**k atoms must stay within the cap
        budget = max(1, (caps.max_atoms // 3).bit_length() - 1)
        n_exo = rng.randint(1, min(caps.max_exo, budget - 1)) if budget > 1 else 1
        n_endo = rng.randint(2, max(2, min(caps.max_endo, budget - n_exo + 1)))
        exo = [f"U{i}" for i in range(n_exo)]
        endo = ["X", "Y", "Z", "W", "V", "T"][:n_endo]
        x = endo[-1]
        ranges = {n: [0, 1] for n in exo + endo}
        ranges[x] = [0, 1, 2]
        sig = Signature(exo, endo, ranges)
        if sig.n_atoms > caps.max_atoms:
            continue
        order = endo[:-1]
        rng.shuffle(order)
        model = random_model(rng, sig, order + [x], p_edge=0.6)
        util = random_util(rng, sig)
        found = None
        for u in sig.contexts():
            fact = solve(model, u)
            for z in sig.full_assignments():
                z = Assignment(tuple(p for p in z.pairs if p[0] != x))
                c = solve(model, u, z)
                xi = sig.index[x]
                if c[xi] != fact[xi]:
                    third = ({0, 1, 2} - {c[xi], fact[xi]}).pop()
                    twin = c[:xi] + (third,) + c[xi + 1:]
                    found = (u, z, c, twin)
                    break
            if found:
                break
        if not found:
            continue
        u, z, c, twin = found
        util[twin] = util[c]
        rep = Representation(model, random_prob(rng, sig), util)
        info = {"context": list(u), "assignment": [list(p) for p in z.pairs],
                "variable": x, "atoms": [list(c), list(twin)]}
        return Instance(seed, index, rep, action_family(rng, sig, caps.conditionals),
                        ties=info, attempts=attempt + 1)
    raise AssertionError("unreachable")
