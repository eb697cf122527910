"""Formulas, interventional formulas and actions: ASTs, parsing, evaluation.

Surface syntax::

    formula := term { "|" term }
    term    := factor { "&" factor }
    factor  := "!" factor | "(" formula ")" | IDENT "=" INT
    action  := "do[" [ IDENT ":=" INT { "," IDENT ":=" INT } ] "]"
             | "if" formula "then" action [ "else" action ]
             | "(" action ")"
    ext     := "[" [ IDENT ":=" INT { "," ... } ] "]" formula | formula

``if f then A`` is shorthand for ``if f then A else do[]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Union

from .core import (EMPTY, Assignment, Atom, CausalModel, Context, Signature,
                   SignatureError, assignment_from_canonical, solve)


# -- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    var: str
    value: int


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Eq, Not, And, Or]


@dataclass(frozen=True)
class Intervened:
    """``[Y <- y] body`` with an intervention-free body."""

    assignment: Assignment
    body: Formula


ExtFormula = Union[Formula, Intervened]


@dataclass(frozen=True)
class Do:
    assignment: Assignment = EMPTY


@dataclass(frozen=True)
class IfThenElse:
    test: Formula
    then: "Action"
    orelse: "Action" = Do()


Action = Union[Do, IfThenElse]

NOOP = Do()


def conj(formulas) -> Formula:
    formulas = list(formulas)
    if not formulas:
        raise ValueError("empty conjunction")
    return reduce(And, formulas)


def atom_formula(sig: Signature, atom: Atom) -> Formula:
    """The conjunction characterising ``atom``."""
    return conj(Eq(n, v) for n, v in zip(sig.variables, atom))


def context_formula(sig: Signature, context: Context) -> Formula:
    return conj(Eq(n, v) for n, v in zip(sig.exogenous, context))


def on_atom(sig: Signature, atom: Atom, assignment: Assignment) -> IfThenElse:
    """``if <atom> then do[assignment] else do[]``."""
    return IfThenElse(atom_formula(sig, atom), Do(assignment), NOOP)


# -- parsing ---------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        where = f" at position {pos}"
        if text:
            where += f": {text[:pos]}<HERE>{text[pos:]}"
        super().__init__(message + where)
        self.pos = pos


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|[|&!()=\[\],])
""", re.VERBOSE)

_KEYWORDS = {"if", "then", "else", "do"}


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            if kind == "ident" and val in _KEYWORDS:
                kind = "kw"
            out.append((kind, val, pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, pos=None):
        raise ParseError(msg, self.tok[2] if pos is None else pos, self.text)

    def accept(self, value):
        if self.tok[1] == value and self.tok[0] in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            found = self.tok[1] or "end of input"
            self.error(f"expected {value!r}, found {found!r}")

    def ident(self):
        kind, val, pos = self.tok
        if kind != "ident":
            self.error(f"expected a variable name, found {val or 'end of input'!r}")
        if val not in self.sig.index:
            self.error(f"unknown variable {val!r}")
        self.i += 1
        return val, pos

    def integer(self):
        kind, val, pos = self.tok
        if kind != "int":
            self.error(f"expected an integer, found {val or 'end of input'!r}")
        self.i += 1
        return int(val), pos

    def end(self):
        if self.tok[0] != "eof":
            self.error(f"unexpected trailing input {self.tok[1]!r}")

    # formulas
    def formula(self):
        node = self.term()
        while self.accept("|"):
            node = Or(node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.accept("&"):
            node = And(node, self.factor())
        return node

    def factor(self):
        if self.accept("!"):
            return Not(self.factor())
        if self.accept("("):
            node = self.formula()
            self.expect(")")
            return node
        name, _ = self.ident()
        self.expect("=")
        value, vpos = self.integer()
        if value not in self.sig.ranges[name]:
            self.error(f"value {value} out of range for {name!r}", vpos)
        return Eq(name, value)

    def assignment_list(self, close="]"):
        pairs = []
        if self.accept(close):
            return Assignment(())
        while True:
            name, npos = self.ident()
            if not self.sig.is_endogenous(name):
                self.error(f"cannot intervene on exogenous variable {name!r}", npos)
            if any(n == name for n, _ in pairs):
                self.error(f"variable {name!r} assigned twice", npos)
            self.expect(":=")
            value, vpos = self.integer()
            if value not in self.sig.ranges[name]:
                self.error(f"value {value} out of range for {name!r}", vpos)
            pairs.append((name, value))
            if self.accept(close):
                return Assignment(tuple(pairs))
            self.expect(",")

    # actions
    def action(self):
        if self.accept("do"):
            self.expect("[")
            return Do(self.assignment_list())
        if self.accept("if"):
            test = self.formula()
            self.expect("then")
            then = self.action()
            orelse = self.action() if self.accept("else") else NOOP
            return IfThenElse(test, then, orelse)
        if self.accept("("):
            node = self.action()
            self.expect(")")
            return node
        self.error(f"expected an action, found {self.tok[1] or 'end of input'!r}")

    def ext_formula(self):
        if self.accept("["):
            asg = self.assignment_list()
            return Intervened(asg, self.formula())
        return self.formula()


def parse_formula(text: str, sig: Signature) -> Formula:
    p = _Parser(text, sig)
    node = p.formula()
    p.end()
    return node


def parse_ext_formula(text: str, sig: Signature) -> ExtFormula:
    p = _Parser(text, sig)
    node = p.ext_formula()
    p.end()
    return node


def parse_action(text: str, sig: Signature) -> Action:
    p = _Parser(text, sig)
    node = p.action()
    p.end()
    return node


# -- printing ----------------------------------------------------------------

def format_formula(f: Formula) -> str:
    if isinstance(f, Eq):
        return f"{f.var}={f.value}"
    if isinstance(f, Not):
        inner = format_formula(f.arg)
        return f"!({inner})" if isinstance(f.arg, (And, Or)) else f"!{inner}"
    if isinstance(f, And):
        left = format_formula(f.left)
        if isinstance(f.left, Or):
            left = f"({left})"
        right = format_formula(f.right)
        if isinstance(f.right, (And, Or)):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(f, Or):
        right = format_formula(f.right)
        if isinstance(f.right, Or):
            right = f"({right})"
        return f"{format_formula(f.left)} | {right}"
    raise TypeError(f"not a formula: {f!r}")


def format_assignment(a: Assignment) -> str:
    return ",".join(f"{n}:={v}" for n, v in a.pairs)


def format_action(a: Action) -> str:
    if isinstance(a, Do):
        return f"do[{format_assignment(a.assignment)}]"
    if isinstance(a, IfThenElse):
        then = format_action(a.then)
        if isinstance(a.then, IfThenElse):
            then = f"({then})"
        return f"if {format_formula(a.test)} then {then} else {format_action(a.orelse)}"
    raise TypeError(f"not an action: {a!r}")


def format_ext_formula(f: ExtFormula) -> str:
    if isinstance(f, Intervened):
        return f"[{format_assignment(f.assignment)}]({format_formula(f.body)})"
    return format_formula(f)


# -- evaluation --------------------------------------------------------------

def atom_implies(sig: Signature, atom: Atom, formula: Formula) -> bool:
    """Boolean evaluation of ``formula`` against the total assignment ``atom``."""
    if isinstance(formula, Eq):
        return atom[sig.index[formula.var]] == formula.value
    if isinstance(formula, Not):
        return not atom_implies(sig, atom, formula.arg)
    if isinstance(formula, And):
        return atom_implies(sig, atom, formula.left) and atom_implies(sig, atom, formula.right)
    if isinstance(formula, Or):
        return atom_implies(sig, atom, formula.left) or atom_implies(sig, atom, formula.right)
    raise TypeError(f"not a formula: {formula!r}")


@lru_cache(maxsize=None)
def _eq_masks(sig: Signature) -> dict[tuple[str, int], int]:
    masks = {}
    for name in sig.variables:
        i = sig.index[name]
        for v in sig.ranges[name]:
            masks[(name, v)] = sum(1 << k for k, a in enumerate(sig.atoms()) if a[i] == v)
    return masks


@lru_cache(maxsize=1 << 16)
def formula_mask(sig: Signature, formula: Formula) -> int:
    """Bitmask over atom indices of the atoms implying ``formula``."""
    if isinstance(formula, Eq):
        try:
            return _eq_masks(sig)[(formula.var, formula.value)]
        except KeyError:
            raise SignatureError(f"bad atomic formula {formula.var}={formula.value}") from None
    if isinstance(formula, Not):
        return ((1 << sig.n_atoms) - 1) & ~formula_mask(sig, formula.arg)
    if isinstance(formula, And):
        return formula_mask(sig, formula.left) & formula_mask(sig, formula.right)
    if isinstance(formula, Or):
        return formula_mask(sig, formula.left) | formula_mask(sig, formula.right)
    raise TypeError(f"not a formula: {formula!r}")


def satisfies(model: CausalModel, context: Context, formula: ExtFormula) -> bool:
    """``(M, u) |= formula`` for plain and once-intervened formulas."""
    sig = model.signature
    if isinstance(formula, Intervened):
        formula.assignment.validate(sig)
        return atom_implies(sig, solve(model, context, formula.assignment), formula.body)
    return atom_implies(sig, solve(model, context), formula)


def actual_atom(model: CausalModel, context: Context) -> Atom:
    """The unique atom true in the situation ``(M, u)``."""
    return solve(model, context)


class ExtensionalAction:
    """An action's h-map materialised: one canonical primitive assignment per atom."""

    __slots__ = ("signature", "table", "_hash")

    def __init__(self, signature: Signature, table):
        self.signature = signature
        self.table = tuple(table)
        self._hash = hash(self.table)

    def __getitem__(self, atom: Atom) -> Assignment:
        key = self.table[self.signature.atom_index[atom]]
        return assignment_from_canonical(self.signature, key)

    def key_at(self, atom_idx: int):
        return self.table[atom_idx]

    def __eq__(self, other):
        return isinstance(other, ExtensionalAction) and self.table == other.table

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.table)


def _h_keys(action: Action, sig: Signature) -> list:
    if isinstance(action, Do):
        return [action.assignment.canonical(sig)] * sig.n_atoms
    if isinstance(action, IfThenElse):
        mask = formula_mask(sig, action.test)
        then = _h_keys(action.then, sig)
        orelse = _h_keys(action.orelse, sig)
        return [then[k] if (mask >> k) & 1 else orelse[k] for k in range(sig.n_atoms)]
    raise TypeError(f"not an action: {action!r}")


def compile_h(action: Action, sig: Signature) -> ExtensionalAction:
    """Materialise h_A: the primitive intervention the action performs at each atom."""
    return ExtensionalAction(sig, _h_keys(action, sig))


def h_at(action: Action, sig: Signature, atom: Atom) -> Assignment:
    """h_A evaluated at one atom, without materialising the whole table."""
    while isinstance(action, IfThenElse):
        action = action.then if atom_implies(sig, atom, action.test) else action.orelse
    return action.assignment


def beta(model: CausalModel, action: Action, context: Context) -> Atom:
    """The outcome atom of performing ``action`` in ``context``.

    Every test is read at the pre-intervention atom; the selected primitive
    intervention is then applied to the model.
    """
    sig = model.signature
    factual = solve(model, context)
    return solve(model, context, h_at(action, sig, factual))


def validate_action(action: Action, sig: Signature) -> None:
    if isinstance(action, Do):
        action.assignment.validate(sig)
    elif isinstance(action, IfThenElse):
        validate_formula(action.test, sig)
        validate_action(action.then, sig)
        validate_action(action.orelse, sig)
    else:
        raise TypeError(f"not an action: {action!r}")


def validate_formula(f: Formula, sig: Signature) -> None:
    if isinstance(f, Eq):
        sig.check_value(f.var, f.value)
    elif isinstance(f, Not):
        validate_formula(f.arg, sig)
    elif isinstance(f, (And, Or)):
        validate_formula(f.left, sig)
        validate_formula(f.right, sig)
    else:
        raise TypeError(f"not a formula: {f!r}")
