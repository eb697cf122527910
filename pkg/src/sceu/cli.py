"""Command-line interface.

Exit codes: 0 ok, 2 a check failed, 3 inconclusive (budget or scope), 4 bad input.
"""
from __future__ import annotations

import argparse
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .axioms import FAIL, INCONCLUSIVE, PASS, Scope, check_all, overall_verdict
from .construct import ConstructionError, check_identified, construct_representation, \
    models_equivalent
from .core import Cycle, SignatureError, check_recursive
from .generate import Caps, action_family, generate_instance
from .lang import ParseError, beta, parse_action, parse_ext_formula, satisfies
from .prefs import (QueryBudget, Representation, expected_utility, induce_preferences,
                    to_table)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    if args.out and args.command in ("check",):
        io.write_json(args.out, payload)
    if args.json:
        sys.stdout.write(io.dumps(payload))
    else:
        print(text)


def _scope(args) -> Scope:
    s = Scope()
    if args.max_endo is not None:
        s.max_endo = args.max_endo
    if args.max_range is not None:
        s.max_range = args.max_range
    return s


def load_preference(path: str, seed: int, budget: int | None):
    """A preference and its presented actions from a table or representation file.

    For a representation the actions are the seeded standard family."""
    kind, obj = io.load_document(path)
    qb = QueryBudget(budget)
    if kind == "table":
        obj.budget = qb
        return obj, list(obj.actions), kind
    if kind == "representation":
        order = obj.model.order
        if order is None:
            raise io.InputError(f"model is not recursive: cycle {list(check_recursive(obj.model))}",
                                "equations", path)
        actions = action_family(random.Random(f"{seed}:family"), obj.signature)
        return induce_preferences(obj, actions, qb), actions, kind
    raise io.InputError("expected a preference table or a representation file", "<root>", path)


# -- commands ---------------------------------------------------------------------

def cmd_validate(args) -> int:
    results = []
    status = EXIT_OK
    for path in args.paths:
        entry = {"path": path}
        try:
            kind, obj = io.load_document(path)
            entry["kind"] = kind
            model = obj.model if isinstance(obj, Representation) else (
                obj if kind == "model" else None)
            if model is not None:
                res = check_recursive(model)
                if isinstance(res, Cycle):
                    entry.update(valid=False, error="model is not recursive", cycle=list(res))
                    status = EXIT_INPUT
                else:
                    entry.update(valid=True, order=list(res))
            else:
                entry.update(valid=True, actions=len(obj.actions))
        except io.InputError as e:
            entry.update(valid=False, error=str(e))
            status = EXIT_INPUT
        results.append(entry)
    lines = []
    for e in results:
        if e["valid"]:
            lines.append(f"{e['path']}: ok ({e['kind']})")
        elif "cycle" in e:
            lines.append(f"{e['path']}: {e['error']}: cycle {' -> '.join(e['cycle'])}")
        else:
            lines.append(f"{e['path']}: {e['error']}")
    _emit(args, {"files": results}, "\n".join(lines))
    return status


def _parse_context(text: str, sig) -> tuple:
    if text is None:
        raise UsageError("--context is required here")
    if "=" in text:
        vals = {}
        for part in text.split(","):
            name, _, v = part.partition("=")
            vals[name.strip()] = int(v)
        return sig.make_context(vals)
    u = io.parse_key(text, len(sig.exogenous), "--context")
    return sig.make_context(dict(zip(sig.exogenous, u)))


def cmd_eval(args) -> int:
    kind, obj = io.load_document(args.file)
    if kind == "table":
        raise io.InputError("eval needs a model or representation file", "<root>", args.file)
    model = obj.model if kind == "representation" else obj
    sig = model.signature
    if model.order is None:
        raise io.InputError("model is not recursive", "equations", args.file)
    expr = args.expression.strip()
    is_action = expr.startswith(("do", "if", "("))
    try:
        node = parse_action(expr, sig) if is_action else parse_ext_formula(expr, sig)
    except ParseError:
        if not is_action:
            raise
        node, is_action = parse_ext_formula(expr, sig), False
    payload = {"expression": expr}
    if is_action and kind == "representation" and args.context is None:
        value = expected_utility(obj, node)
        payload.update(kind="expected_utility", result=str(value))
        text = str(value)
    elif is_action:
        u = _parse_context(args.context, sig)
        atom = beta(model, node, u)
        payload.update(kind="outcome", context=list(u), result=sig.atom_dict(atom))
        text = sig.format_atom(atom)
    else:
        u = _parse_context(args.context, sig)
        value = satisfies(model, u, node)
        payload.update(kind="truth", context=list(u), result=value)
        text = "true" if value else "false"
    _emit(args, payload, text)
    return EXIT_OK


def _verdict_code(verdict: str) -> int:
    return {PASS: EXIT_OK, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}[verdict]


def _check_payload(path, kind, pref, actions, reports) -> dict:
    sig = pref.signature
    by_id = {r.axiom: r for r in reports}
    payload = {"source": path, "kind": kind, "signature": io.signature_to_json(sig),
               "actions": len(actions), "verdict": overall_verdict(reports),
               "reports": [r.to_json() for r in reports]}
    a2 = by_id.get("A2")
    if a2 is not None and "c_dagger" in a2.data:
        payload["c_dagger"] = {io.key_of(u): io.key_of(a) for u, a in
                               sorted(a2.data["c_dagger"].items())}
    a5 = by_id.get("A5")
    if a5 is not None and "graph" in a5.data:
        edges = sorted(a5.data["graph"].edges, key=lambda e: (sig.index[e[0]], sig.index[e[1]]))
        payload["affects"] = [list(e) for e in edges]
    payload["queries"] = pref.queries
    return payload


def cmd_check(args) -> int:
    pref, actions, kind = load_preference(args.source, args.seed, args.budget)
    reports = check_all(pref, actions, _scope(args))
    payload = _check_payload(args.source, kind, pref, actions, reports)
    lines = [f"{r.axiom:4} {r.verdict}" + (f"  witness: {r.witness}" if r.witness else "")
             for r in reports]
    lines.append(f"overall (A1-A5): {payload['verdict']}")
    _emit(args, payload, "\n".join(lines))
    return _verdict_code(payload["verdict"])


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_construct(args) -> int:
    pref, actions, kind = load_preference(args.source, args.seed, args.budget)
    reports = check_all(pref, actions, _scope(args))
    verdict = overall_verdict(reports)
    if verdict != PASS:
        payload = _check_payload(args.source, kind, pref, actions, reports)
        payload["constructed"] = False
        _emit_plain(args, payload, f"refused: axioms {verdict}")
        return _verdict_code(verdict)
    built = construct_representation(pref, actions, reports=reports, scope=_scope(args))
    out = _out_dir(args, "construct-out")
    io.write_json(out / "representation.json", io.rep_to_json(built.rep))
    io.write_json(out / "trace.json", built.trace)
    payload = {"constructed": True, "verified": built.verified,
               "representation": str(out / "representation.json"),
               "trace": str(out / "trace.json"),
               "model_sha256": built.trace["model_sha256"]}
    _emit_plain(args, payload, f"constructed representation written to {out}")
    return EXIT_OK


def _emit_plain(args, payload, text):
    if args.json:
        sys.stdout.write(io.dumps(payload))
    else:
        print(text)


def cmd_identify(args) -> int:
    pref, actions, kind = load_preference(args.source, args.seed, args.budget)
    reports = check_all(pref, actions, _scope(args))
    verdict = overall_verdict(reports)
    if verdict != PASS:
        payload = _check_payload(args.source, kind, pref, actions, reports)
        _emit_plain(args, payload, f"refused: axioms {verdict}")
        return _verdict_code(verdict)
    res = check_identified(pref, actions, args.trials, args.seed, reports, _scope(args))
    out = _out_dir(args, "identify-out")
    payload = res.to_json()
    if res.pair is not None:
        i, j = res.pair
        for tag, k in (("a", i), ("b", j)):
            name = f"model_{tag}.json"
            io.write_json(out / name, io.model_to_json(res.runs[k].model))
            payload.setdefault("model_files", []).append(str(out / name))
    io.write_json(out / "identify.json", payload)
    text = f"{res.verdict}"
    if res.witness:
        w = res.witness
        text += (f": at context {w['context']} under do[{w['assignment']}] "
                 f"{w['variable']} is {w['values'][0]} in one model and {w['values'][1]} in another")
    _emit_plain(args, payload, text)
    if res.verdict in ("identified", "not identified"):
        return EXIT_OK
    return EXIT_INCONCLUSIVE if res.verdict == "inconclusive" else EXIT_FAIL


# -- fuzz ---------------------------------------------------------------------------

def run_instance(seed: int, index: int, caps: Caps, ties: bool, trials: int,
                 budget: int | None = None) -> dict:
    """Generate one instance and run the whole round trip; returns a summary
    with a list of failed expectations."""
    inst = generate_instance(seed, index, caps, ties)
    pref = induce_preferences(inst.rep, inst.actions, QueryBudget(budget))
    sig = inst.signature
    failures = []
    reports = check_all(pref, inst.actions)
    verdicts = {r.axiom: r.verdict for r in reports}
    for r in reports:
        expected = FAIL if (ties and r.axiom == "A3*") else PASS
        if r.verdict != expected:
            failures.append(f"{r.axiom} {r.verdict} (expected {expected})")
    summary = {"index": index, "atoms": sig.n_atoms, "actions": len(inst.actions),
               "axioms": verdicts}
    if overall_verdict(reports) == PASS:
        try:
            res = check_identified(pref, inst.actions, trials, seed, reports)
        except ConstructionError as e:
            failures.append(str(e))
        else:
            summary["identification"] = res.verdict
            summary["round_trip"] = all(r.verified for r in res.runs)
            if not summary["round_trip"]:
                failures.append("round trip mismatch")
            expected = "not identified" if ties else "identified"
            if res.verdict != expected:
                failures.append(f"identification {res.verdict} (expected {expected})")
            if not ties:
                ctx = [u for u in sig.contexts() if u in res.runs[0].c_dagger]
                same, w = models_equivalent(res.runs[0].model, inst.rep.model, ctx)
                if not same:
                    failures.append(f"constructed model differs from ground truth: {w}")
            summary["model_sha256"] = [r.trace["model_sha256"] for r in res.runs]
    summary["ok"] = not failures
    summary["failures"] = failures
    return summary


def _dump_instance(out: Path, seed: int, index: int, caps: Caps, ties: bool) -> list[str]:
    inst = generate_instance(seed, index, caps, ties)
    pref = induce_preferences(inst.rep, inst.actions)
    d = out / f"instance-{index}"
    d.mkdir(parents=True, exist_ok=True)
    io.write_json(d / "representation.json", io.rep_to_json(inst.rep))
    io.write_json(d / "table.json", io.table_to_json(to_table(pref, inst.actions)))
    return [str(d / "representation.json"), str(d / "table.json")]


def _run_star(job):
    return run_instance(*job)


def cmd_fuzz(args) -> int:
    caps = Caps(max_exo=args.max_exo or 2, max_endo=args.max_endo or 3,
                max_range=args.max_range or 2)
    jobs = [(args.seed, i, caps, args.ties, args.trials, args.budget) for i in range(args.count)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_run_star, jobs))
    else:
        results = [_run_star(j) for j in jobs]
    results.sort(key=lambda r: r["index"])
    failed = [r for r in results if not r["ok"]]
    if failed and args.out:
        out = Path(args.out)
        for r in failed:
            r["reproducer"] = _dump_instance(out, args.seed, r["index"], caps, args.ties)
    payload = {"seed": args.seed, "count": args.count, "ties": args.ties,
               "caps": {"max_exo": caps.max_exo, "max_endo": caps.max_endo,
                        "max_range": caps.max_range},
               "passed": len(results) - len(failed), "failed": len(failed),
               "instances": results}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.write_json(Path(args.out) / "fuzz.json", payload)
    text = "\n".join(
        [f"instance {r['index']}: {'ok' if r['ok'] else 'FAIL ' + '; '.join(r['failures'])}"
         for r in results] + [f"{len(results) - len(failed)}/{len(results)} passed"])
    _emit_plain(args, payload, text)
    return EXIT_FAIL if failed else EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--max-endo", type=int, default=None)
    common.add_argument("--max-exo", type=int, default=None)
    common.add_argument("--max-range", type=int, default=None)
    common.add_argument("--budget", type=int, default=None, help="maximum preference queries")
    common.add_argument("--trials", type=int, default=5)
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = argparse.ArgumentParser(prog="sceu", description="Subjective causal expected utility: "
                                "evaluate actions, check preference axioms, build representations.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("validate", parents=[common], help="validate model, representation or table files")
    s.add_argument("paths", nargs="+")
    s = sub.add_parser("eval", parents=[common], help="evaluate a formula, an action outcome or an expected utility")
    s.add_argument("file")
    s.add_argument("expression")
    s.add_argument("--context", default=None, help="e.g. U=1 or 1,0")
    for name, help_ in (("check", "check the axioms"), ("construct", "build a representation"),
                        ("identify", "decide whether the representation is identified")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("source", help="preference table or representation file")
    s = sub.add_parser("fuzz", parents=[common], help="random round-trip testing")
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--ties", action="store_true", help="generate utility ties")
    s.add_argument("--jobs", type=int, default=1)
    return p


COMMANDS = {"validate": cmd_validate, "eval": cmd_eval, "check": cmd_check,
            "construct": cmd_construct, "identify": cmd_identify, "fuzz": cmd_fuzz}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (io.InputError, ParseError, SignatureError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ConstructionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
