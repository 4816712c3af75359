import io
import json
import subprocess
import sys

import pytest

from imlbench.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "worlds": ["w0", "w1", "w2"],
        "le": [["w0", "w1"]],
        "r": [["w1", "w2"]],
        "val": {"p": ["w2"]},
    }))
    return str(path)


def test_parse_command():
    code, out, _ = run("parse", "--formula", "[] (p->q)")
    assert code == 0
    assert out.splitlines()[0] == "[](p -> q)"
    assert "length 4" in out


def test_syntax_error_exit_code():
    code, _, err = run("parse", "--formula", "p ->")
    assert code == 2
    assert "byte 4" in err


def test_formula_file(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("<>p -> []p\n")
    code, out, _ = run("parse", "--formula-file", str(path))
    assert code == 0 and out.startswith("<>p -> []p")


def test_formula_flags_are_exclusive():
    with pytest.raises(SystemExit) as info:
        main(["parse", "--formula", "p", "--formula-file", "x"])
    assert info.value.code == 2


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit):
        main(["parse", "--formula", "p", "--bogus"])


def test_closure_lists_strata():
    code, out, _ = run("closure", "--formula", "[][]p")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "rank 0 (3): {p, []p, [][]p}"
    assert lines[-1] == "rank 3 (0): {}"
    assert len(lines) == 5


def test_check_command(model_file):
    assert run("check", "--model", model_file, "--world", "w0", "--formula", "<>p",
               "--semantics", "std")[1] == "false\n"
    assert run("check", "--model", model_file, "--world", "w1", "--formula", "<>p")[1] == "true\n"
    code, out, _ = run("check", "--model", model_file, "--formula", "[]p")
    assert code == 0 and out == "true at: {w0, w1, w2}\n"


def test_model_errors_exit_3(model_file, tmp_path):
    assert run("check", "--model", str(tmp_path / "missing.json"), "--formula", "p")[0] == 3
    assert run("check", "--model", model_file, "--world", "nowhere", "--formula", "p")[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"worlds": ["a", "b"], "le": [["a", "b"]], "val": {"p": ["a"]}}))
    assert run("check", "--model", str(bad), "--formula", "p")[0] == 3


def test_valid_command(model_file):
    code, out, _ = run("valid", "--frame", model_file, "--formula", "[]p -> p")
    assert code == 0 and out.startswith("not valid")
    assert run("valid", "--frame", model_file, "--formula", "[]true")[1] == "valid\n"


def test_enumerate_command(tmp_path):
    out_path = tmp_path / "frames.json"
    code, out, _ = run("enumerate", "--max-size", "2", "--logic", "fik", "--out", str(out_path))
    assert code == 0
    assert out.splitlines() == ["size 1: 1 preorders, 2 frames in C_fc",
                                "size 2: 4 preorders, 48 frames in C_fc"]
    assert len(json.loads(out_path.read_text())) == 50


def test_saturate_command(model_file, tmp_path):
    out_path, dot, trace = tmp_path / "s.json", tmp_path / "s.dot", tmp_path / "t.jsonl"
    code, out, _ = run("saturate", "--model", model_file, "--world", "w0", "--logic", "fik",
                       "--formula", "[](p | q) -> <>p | []q", "--out", str(out_path),
                       "--dot", str(dot), "--trace", str(trace))
    assert code == 0
    assert "truth_lemma_ok: True" in out
    data = json.loads(out_path.read_text())
    assert data["provenance"]["t0"] == {"tip": {"name": 0, "world": "w0", "rank": 0, "height": 0}}
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert records and all({"pass", "rank", "height", "kind", "anchor", "new_tip", "witness"} <= set(r)
                           for r in records)
    assert dot.read_text().startswith("digraph saturated")


def test_saturate_rejects_satisfying_world(model_file):
    code, _, err = run("saturate", "--model", model_file, "--world", "w2", "--formula", "p")
    assert code == 3 and "BASE_MODEL_SATISFIES_A" in err


def test_saturate_fuel_failure_exit_4(model_file):
    code, _, err = run("saturate", "--model", model_file, "--world", "w0", "--fuel", "0",
                       "--formula", "[](p | q) -> <>p | []q")
    assert code == 4 and "FUEL_EXHAUSTED" in err


def test_decide_and_verify_round_trip(tmp_path):
    cert = tmp_path / "cert.json"
    code, out, _ = run("decide", "--logic", "fik", "--formula", "p | ~p", "--max-size", "3",
                       "--saturate", "--out", str(cert))
    assert code == 0
    data = json.loads(cert.read_text())
    assert data["verdict"] == "NonTheorem"
    assert len(data["model"]["worlds"]) == 2
    assert data["saturated"]["provenance"]
    assert run("verify", "--cert", str(cert))[0] == 0


def test_decide_no_countermodel_exit_1(tmp_path):
    cert = tmp_path / "cert.json"
    code, out, _ = run("decide", "--formula", "[]true", "--max-size", "2", "--out", str(cert))
    assert code == 1
    assert out.startswith("NoCountermodelUpToBound")
    assert run("verify", "--cert", str(cert))[0] == 0


def test_verify_rejects_tampered(tmp_path):
    cert = tmp_path / "cert.json"
    run("decide", "--formula", "[]p -> p", "--out", str(cert))
    data = json.loads(cert.read_text())
    data["model"]["val"]["p"] = ["w0"]
    cert.write_text(json.dumps(data))
    code, out, _ = run("verify", "--cert", str(cert))
    assert code == 4 and "REJECTED" in out
    assert run("verify", "--cert", str(tmp_path / "none.json"))[0] == 3


def test_outputs_are_deterministic(tmp_path):
    outputs = []
    for i in range(2):
        cert = tmp_path / f"c{i}.json"
        trace = tmp_path / "t.jsonl"
        code, out, _ = run("decide", "--logic", "lik", "--formula", "~~p -> p", "--saturate",
                           "--out", str(cert), "--trace", str(trace), "--jobs", str(i + 1))
        outputs.append((code, out, cert.read_text()))
    assert outputs[0] == outputs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "imlbench", "parse", "--formula", "~p"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "~p"
