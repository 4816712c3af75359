import copy
import itertools
import json

import pytest

from imlbench.decide import (Certificate, SearchConfig, Verdict, decide, search_countermodel,
                             verify_certificate)
from imlbench.formula import atoms_of, parse
from imlbench.kripke import C_DC, Semantics, frame_class_check, satisfies
from imlbench.logic import LogicId, axiom_schemata, instantiate_schema

from oracles import model_pairs, naive_countermodel_size, sat

FIK, LIK = LogicId.FIK, LogicId.LIK
AD = "[](p | q) -> <>p | []q"


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_frame_size=0)
    with pytest.raises(ValueError):
        SearchConfig(jobs=0)


def test_excluded_middle_found_at_size_two():
    res = search_countermodel(parse("p | ~p"), FIK, SearchConfig(3))
    m = res.model
    assert m.frame.size == 2
    assert m.frame.le_pairs() == [(0, 0), (0, 1), (1, 1)]
    assert m.val == {"p": 0b10}
    assert res.world == 0


def test_box_top_never_refuted():
    assert not search_countermodel(parse("[]true"), FIK, SearchConfig(3)).found


def test_ad_instance_refuted_in_fik_only():
    res = search_countermodel(parse(AD), FIK, SearchConfig(3))
    assert res.found and res.model.frame.size <= 3
    assert frame_class_check(res.model.frame, FIK.frame_class)
    assert not frame_class_check(res.model.frame, C_DC)
    assert not satisfies(res.model, res.world, parse(AD))
    assert not search_countermodel(parse(AD), LIK, SearchConfig(3)).found


@pytest.mark.parametrize("text, logic, conds", [
    ("[]p -> p", FIK, "f"),
    ("p | ~p", FIK, "f"),
    ("<>p -> []p", FIK, "f"),
    (AD, FIK, "f"),
    (AD, LIK, "fd"),
    ("[](p & q) -> []p", FIK, "f"),
    ("~<>false", FIK, "f"),
])
def test_minimal_size_matches_oracle(text, logic, conds):
    a = parse(text)
    expected = naive_countermodel_size(a, atoms_of(a), conds, 3)
    res = search_countermodel(a, logic, SearchConfig(3))
    assert (res.model.frame.size if res.found else None) == expected


@pytest.mark.parametrize("text, size", [("[]p -> p", 1), ("p | ~p", 2), ("<>p -> []p", 2)])
def test_decide_nontheorems(text, size):
    cert = decide(parse(text), FIK, SearchConfig(3))
    assert cert.verdict is Verdict.NON_THEOREM
    assert cert.model.frame.size == size <= 2
    W, le, R, V = model_pairs(cert.model)
    assert not sat(W, le, R, V, cert.model.frame.index(cert.world), parse(text))
    assert verify_certificate(cert)


@pytest.mark.parametrize("text", ["[](p & q) -> []p", "~<>false", "[]true"])
def test_decide_no_countermodel(text):
    cert = decide(parse(text), FIK, SearchConfig(3))
    assert cert.verdict is Verdict.NO_COUNTERMODEL
    assert cert.bound == 3 and cert.model is None
    # every fc frame of size 1..3 was examined
    assert cert.frames_examined == 2 + 48 + 6784
    assert verify_certificate(cert)


def test_saturation_attached_to_certificate():
    cert = decide(parse("p | ~p"), FIK, SearchConfig(3, run_saturation=True))
    assert cert.saturated is not None
    assert cert.report["violations"] == [] and cert.report["truth_lemma_ok"]
    assert set(cert.saturated["provenance"]) == set(cert.saturated["worlds"])
    assert verify_certificate(cert)


def test_saturation_failure_becomes_diagnostic():
    cert = decide(parse("p | ~p"), FIK, SearchConfig(3, run_saturation=True, fuel=0))
    assert cert.verdict is Verdict.NON_THEOREM
    assert cert.saturated is None
    assert any("FUEL_EXHAUSTED" in d for d in cert.diagnostics)
    assert verify_certificate(cert)


def test_certificate_json_round_trip():
    cert = decide(parse(AD), FIK, SearchConfig(3, run_saturation=True))
    data = json.loads(json.dumps(cert.to_json()))
    assert Certificate.from_json(data).to_json() == cert.to_json()
    assert verify_certificate(data)


def test_tampered_certificates_rejected():
    good = decide(parse("p | ~p"), FIK, SearchConfig(3, run_saturation=True)).to_json()
    assert verify_certificate(good)
    bad = copy.deepcopy(good)
    bad["model"]["val"]["p"] = ["w0"]            # not up-closed
    assert not verify_certificate(bad)
    bad = copy.deepcopy(good)
    bad["world"] = "w1"                          # p holds there
    assert not verify_certificate(bad)
    bad = copy.deepcopy(good)
    bad["saturated"]["val"]["p"] = []
    assert not verify_certificate(bad)
    bad = copy.deepcopy(good)
    bad["saturated"]["provenance"]["t1"]["tip"]["rank"] = 1
    assert not verify_certificate(bad)
    bad = copy.deepcopy(good)
    bad["formula"] = "p -> "
    assert not verify_certificate(bad)
    bad = copy.deepcopy(good)
    bad["model"]["r"] = [["w0", "w0"]]           # w1 lacks a forward witness
    assert not verify_certificate(bad)
    assert not verify_certificate({"verdict": "NonTheorem"})


def test_search_is_monotone_in_the_bound():
    for text in ("[]p -> p", "p | ~p", AD, "<>p -> []p"):
        a = parse(text)
        first = search_countermodel(a, FIK, SearchConfig(2))
        for k in (3, 4):
            later = search_countermodel(a, FIK, SearchConfig(k))
            assert later.model == first.model and later.world == first.world


def test_parallel_search_is_deterministic():
    for text in ("p | ~p", AD, "[](p & q) -> []p"):
        a = parse(text)
        one = decide(a, FIK, SearchConfig(3)).to_json()
        many = decide(a, FIK, SearchConfig(3, jobs=3)).to_json()
        assert one == many


def test_semantics_variant_is_recorded():
    cert = decide(parse("<>p -> []p"), FIK, SearchConfig(2, semantics=Semantics.FISCHER_SERVI))
    assert cert.semantics is Semantics.FISCHER_SERVI
    assert cert.to_json()["semantics"] == "fs"
    assert verify_certificate(cert)


@pytest.mark.parametrize("logic", [FIK, LIK])
def test_own_axiom_instances_never_refuted(logic):
    letters = [parse(x) for x in ("p", "q", "r")]
    compound = [parse(x) for x in ("p & q", "~r", "[]q", "<>p", "q -> r")]
    for s in axiom_schemata(logic):
        names = s.letters
        choices = list(itertools.product(letters, repeat=len(names)))
        if len(names) == 2:
            choices += list(itertools.product(compound[:3], compound[3:]))
        for combo in choices:
            a = instantiate_schema(s, dict(zip(names, combo)))
            cert = decide(a, logic, SearchConfig(3))
            assert cert.verdict is Verdict.NO_COUNTERMODEL, (s.name, str(a))
