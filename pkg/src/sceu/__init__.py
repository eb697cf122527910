"""Subjective causal expected utility: causal models, interventional actions,
preference axioms and representation construction."""
from .core import (Assignment, CausalModel, Equation, Signature, check_recursive,
                   enumerate_atoms, enumerate_contexts, intervene, solve)
from .lang import (atom_implies, beta, compile_h, parse_action, parse_ext_formula,
                   parse_formula, satisfies)
from .prefs import (Representation, TablePreference, expected_utility, fixes,
                    induce_preferences)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "CausalModel", "Equation", "Signature", "check_recursive",
    "enumerate_atoms", "enumerate_contexts", "intervene", "solve",
    "atom_implies", "beta", "compile_h", "parse_action", "parse_ext_formula",
    "parse_formula", "satisfies",
    "Representation", "TablePreference", "expected_utility", "fixes", "induce_preferences",
]
