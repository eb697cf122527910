from fractions import Fraction

import pytest

from sceu.core import CausalModel, Equation, Signature
from sceu.prefs import Representation


def make_sig(exo=("U",), endo=("X", "Y"), ranges=None):
    ranges = ranges or {}
    return Signature(list(exo), list(endo), {n: ranges.get(n, [0, 1]) for n in (*exo, *endo)})


def chain_model(flip_y=False):
    sig = make_sig()
    return CausalModel(sig, {
        "X": Equation(("U",), {(0,): 0, (1,): 1}),
        "Y": Equation(("X",), {(0,): int(flip_y), (1,): int(not flip_y)}),
    })


def util_of(sig, fn):
    return {a: Fraction(fn(dict(zip(sig.variables, a)))) for a in sig.atoms()}


def injective_util(sig):
    # distinct utilities: the atom's index in enumeration order, scrambled
    n = sig.n_atoms
    return {a: Fraction((7 * i + 3) % (n + 1) if n % 7 else 5 * i + 1) for i, a in enumerate(sig.atoms())}


@pytest.fixture
def chain():
    return chain_model()


@pytest.fixture
def chain_rep(chain):
    sig = chain.signature
    return Representation(chain, {(0,): Fraction(1, 2), (1,): Fraction(1, 2)},
                          util_of(sig, lambda d: d["Y"]))


@pytest.fixture
def chain_rep_injective(chain):
    sig = chain.signature
    util = {a: Fraction(i) for i, a in enumerate(sig.atoms())}
    return Representation(chain, {(0,): Fraction(1, 3), (1,): Fraction(2, 3)}, util)


# -- acceptance summary ----------------------------------------------------------------

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _criteria[num] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, verdict = _criteria[num]
        terminalreporter.write_line(f"[{verdict}] criterion {num:2}: {title}")
