import json
from pathlib import Path

import pytest

from sceu import io
from sceu.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", SAMPLES / "chain.json", SAMPLES / "chain_rep.json",
                       SAMPLES / "cycle_table.json")
    assert code == 0 and out.count(": ok") == 3
    code, out, _ = run(capsys, "validate", SAMPLES / "two_cycle.json")
    assert code == 4 and "cycle X -> Y" in out
    doc = json.loads((SAMPLES / "chain.json").read_text())
    doc["equations"]["Y"]["table"]["1"] = 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "validate", bad, "--json")
    payload = json.loads(out)
    assert code == 4 and "equations.Y.table" in payload["files"][0]["error"]


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", SAMPLES / "chain.json", "[X:=0](Y=0)", "--context", "U=1")
    assert (code, out.strip()) == (0, "true")
    code, out, _ = run(capsys, "eval", SAMPLES / "chain.json", "X=1 | !(X=1)", "--context", "0")
    assert (code, out.strip()) == (0, "true")
    code, out, _ = run(capsys, "eval", SAMPLES / "chain_rep.json", "do[]")
    # uniform prior, utility = enumeration index: (0 + 7) / 2
    assert (code, out.strip()) == (0, "7/2")
    code, out, _ = run(capsys, "eval", SAMPLES / "chain.json",
                       "if X=1 then do[X:=0] else do[]", "--context", "U=1", "--json")
    assert json.loads(out)["result"] == {"U": 1, "X": 0, "Y": 0}


def test_eval_errors(capsys):
    code, _, err = run(capsys, "eval", SAMPLES / "chain.json", "do[U:=1]", "--context", "U=1")
    assert code == 4 and err.startswith("error:")
    code, _, err = run(capsys, "eval", SAMPLES / "chain.json", "Y=1")
    assert code == 4 and "--context" in err
    code, _, _ = run(capsys, "eval", SAMPLES / "missing.json", "Y=1")
    assert code == 4


def test_check(capsys, tmp_path):
    code, out, _ = run(capsys, "check", SAMPLES / "chain_rep.json", "--out", tmp_path / "r.json")
    assert code == 0 and "overall (A1-A5): pass" in out
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["verdict"] == "pass" and rep["affects"] == [["X", "Y"]]
    code, out, _ = run(capsys, "check", SAMPLES / "cycle_table.json", "--json")
    payload = json.loads(out)
    assert code == 2 and payload["verdict"] == "fail"
    assert [r["verdict"] for r in payload["reports"]] == ["pass"] * 5 + ["fail"]
    code, out, _ = run(capsys, "check", SAMPLES / "chain_rep.json", "--budget", "3")
    assert code == 3
    code, out, _ = run(capsys, "check", SAMPLES / "chain_rep.json", "--max-endo", "1")
    assert code == 3


def test_check_is_deterministic(capsys, tmp_path):
    for name in ("a.json", "b.json"):
        run(capsys, "check", SAMPLES / "chain_ties_rep.json", "--out", tmp_path / name)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_construct(capsys, tmp_path):
    code, out, _ = run(capsys, "construct", SAMPLES / "chain_rep.json", "--out", tmp_path)
    assert code == 0
    kind, rep = io.load_document(tmp_path / "representation.json")
    assert kind == "representation"
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert trace["var_order"] == ["U", "X", "Y"]
    assert trace["model_sha256"] == io.model_hash(rep.model)
    code, out, _ = run(capsys, "construct", SAMPLES / "cycle_table.json", "--out", tmp_path / "x")
    assert code == 2 and "refused" in out
    assert not (tmp_path / "x").exists()


def test_identify(capsys, tmp_path):
    code, out, _ = run(capsys, "identify", SAMPLES / "chain_rep.json", "--out", tmp_path / "i")
    assert (code, out.strip()) == (0, "identified")
    code, out, _ = run(capsys, "identify", SAMPLES / "chain_ties_rep.json", "--out", tmp_path / "t")
    assert code == 0 and out.startswith("not identified")
    a = io.load_document(tmp_path / "t" / "model_a.json")[1]
    b = io.load_document(tmp_path / "t" / "model_b.json")[1]
    assert a.equations["Y"] != b.equations["Y"]
    report = json.loads((tmp_path / "t" / "identify.json").read_text())
    assert report["strong_definiteness"]["verdict"] == "fail"


def test_fuzz(capsys, tmp_path):
    code, out, _ = run(capsys, "fuzz", "--count", 0, "--out", tmp_path / "z")
    assert code == 0 and out.strip() == "0/0 passed"
    assert json.loads((tmp_path / "z" / "fuzz.json").read_text())["instances"] == []
    code, out, _ = run(capsys, "fuzz", "--count", 3, "--seed", 4, "--out", tmp_path / "f")
    assert code == 0 and "3/3 passed" in out
    code, out, _ = run(capsys, "fuzz", "--count", 2, "--ties", "--out", tmp_path / "t")
    summary = json.loads((tmp_path / "t" / "fuzz.json").read_text())
    assert code == 0
    assert all(r["identification"] == "not identified" for r in summary["instances"])


def test_fuzz_parallel_matches_serial(capsys, tmp_path):
    run(capsys, "fuzz", "--count", 3, "--seed", 2, "--out", tmp_path / "s")
    run(capsys, "fuzz", "--count", 3, "--seed", 2, "--jobs", 2, "--out", tmp_path / "p")
    assert (tmp_path / "s" / "fuzz.json").read_bytes() == (tmp_path / "p" / "fuzz.json").read_bytes()


def test_usage_errors(capsys):
    with pytest.raises(SystemExit):
        main(["nope"])
