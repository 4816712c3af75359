import json

import pytest
from hypothesis import assume, given, settings
import hypothesis.strategies as st

from imlbench.formula import BOT, Atom, closure_iterate, closure_of, parse
from imlbench.kripke import (C_FC, C_FDC, Frame, Model, frame_class_check, satisfies,
                             truth_set)
from imlbench.logic import LogicId
from imlbench.saturation import (MAXIMALITY, Clip, DefectKind,
                                 SaturationError, Tip, clip_from_json, clip_to_json,
                                 degree, extract_saturated_model, find_defects,
                                 find_strict_maximal_witness, initial_clip, repair_defect,
                                 run_pass, saturate, validate_clip, verify_truth_lemma)

from conftest import formulas, models

FIK, LIK = LogicId.FIK, LogicId.LIK
BOX_P = parse("[]p")


def box_model():
    f = Frame.build(["w", "u"], [], [("w", "u")])
    return Model.build(f, {"p": []})


def chain(n, top_p):
    names = ["w", "x", "y"][:n]
    f = Frame.build(names, list(zip(names, names[1:])))
    return Model.build(f, {"p": top_p})


# -- the []p example -----------------------------------------------------------

def test_box_example_initial_clip():
    c = initial_clip(box_model(), "w", BOX_P, FIK)
    assert c.tips == (Tip(0, 0, frozenset({BOX_P, Atom("p")}), 0, 0),)
    assert not c.ll and not c.tr
    ds = find_defects(c)
    assert len(ds) == 1
    assert ds[0].kind is DefectKind.BOX_ACC and ds[0].anchor == 0 and ds[0].formula == BOX_P


def test_box_example_repair_and_saturation():
    c = initial_clip(box_model(), "w", BOX_P, FIK)
    c2 = repair_defect(c, find_defects(c)[0])
    assert c2.tip(1) == Tip(1, 1, frozenset({Atom("p")}), 1, 0)
    assert c2.tr == {(0, 1)}
    assert find_defects(c2) == []
    done = saturate(box_model(), "w", BOX_P, FIK)
    assert len(done.tips) == 2 and find_defects(done) == []


def test_box_example_extraction():
    done = saturate(box_model(), "w", BOX_P, FIK)
    m = extract_saturated_model(done)
    assert m.worlds == ("t0", "t1")
    assert m.frame.le_pairs() == [(0, 0), (1, 1)]
    assert m.frame.r_pairs() == [(0, 1)]
    assert not satisfies(m, "t0", BOX_P)
    rep = verify_truth_lemma(done, m)
    assert rep.ok and rep.truth_lemma_ok
    # the pair (tip 1, p) is false on both sides
    assert not satisfies(m, "t1", Atom("p")) and not satisfies(done.base, "u", Atom("p"))


# -- preconditions ---------------------------------------------------------------

def test_initial_clip_rejects_bad_bases():
    with pytest.raises(SaturationError) as info:
        initial_clip(box_model(), "u", BOX_P, FIK)
    assert info.value.code == "BASE_MODEL_SATISFIES_A"
    non_fc = Model.build(Frame.build(["t", "s", "u"], [("t", "s")], [("t", "u")]), {})
    with pytest.raises(SaturationError) as info:
        initial_clip(non_fc, "t", BOX_P, FIK)
    assert info.value.code == "BASE_MODEL_WRONG_CLASS"
    fc_not_dc = Model.build(Frame.build(["w", "x", "u"], [("w", "x")], [("x", "u")]), {})
    initial_clip(fc_not_dc, "w", parse("<>p"), FIK)
    with pytest.raises(SaturationError) as info:
        initial_clip(fc_not_dc, "w", parse("<>p"), LIK)
    assert info.value.code == "BASE_MODEL_WRONG_CLASS"


def test_bottom_needs_no_repairs():
    for m in (box_model(), chain(3, ["y"])):
        c = saturate(m, 0, BOT, FIK)
        assert len(c.tips) == 1 and find_defects(c) == []


# -- maximality helpers --------------------------------------------------------

def test_degree_examples():
    m = chain(2, ["x"])
    assert degree(Tip(0, 1, frozenset({Atom("p")}), 0, 0), m) == 0
    assert degree(Tip(0, 0, frozenset({Atom("p")}), 0, 0), m) == 0
    a = parse("p | ~p")
    c = initial_clip(m, "w", a, FIK)
    assert degree(c.tips[0], c.base) <= len(closure_of(a))


def test_strict_maximal_witness():
    assert find_strict_maximal_witness(chain(3, ["y"]), "w", Atom("p")) == 1
    with pytest.raises(SaturationError) as info:
        find_strict_maximal_witness(chain(3, ["y"]), "y", Atom("p"))
    assert info.value.code == "NO_WITNESS"
    fork = Model.build(Frame.build(["w", "x0", "x1"], [("w", "x0"), ("w", "x1")]), {})
    assert find_strict_maximal_witness(fork, "w", Atom("p")) == 1


def test_impl_max_repair_bookkeeping():
    m = chain(2, ["x"])
    c = initial_clip(m, "w", parse("p | ~p"), FIK)
    ds = find_defects(c, MAXIMALITY)
    assert [d.kind for d in ds] == [DefectKind.IMPL_MAX]
    c2 = repair_defect(c, ds[0])
    new = c2.tip(1)
    assert (new.world, new.rank, new.height) == (1, 0, 1)
    assert c2.ll == {(0, 1)}


# -- passes --------------------------------------------------------------------

def test_run_pass_without_defects_is_identity():
    c = saturate(box_model(), "w", BOX_P, FIK)
    for group in ("maximality", "accessibility", "downward", "forward"):
        assert run_pass(c, group, 0) is c


def test_downward_pass_noop_for_fik():
    m = Model.build(Frame.build(["w", "x", "u"], [("w", "x")], [("x", "u"), ("w", "u")]),
                    {"p": ["u"]})
    c = initial_clip(m, "w", parse("~<>p"), FIK)
    assert run_pass(c, "downward", 0) is c


def test_maximality_pass_clears_its_rank():
    m = chain(3, ["y"])
    c = initial_clip(m, "w", parse("~~p -> p"), FIK)
    assert find_defects(c, MAXIMALITY, 0)
    out = run_pass(c, "maximality", 0)
    assert find_defects(out, MAXIMALITY, 0) == []
    assert validate_clip(out).coherent and validate_clip(out).regular


def test_fuel_exhaustion():
    with pytest.raises(SaturationError) as info:
        saturate(box_model(), "w", BOX_P, FIK, fuel=0)
    assert info.value.code == "FUEL_EXHAUSTED"


def test_extract_requires_clean_clip():
    c = initial_clip(box_model(), "w", BOX_P, FIK)
    with pytest.raises(SaturationError) as info:
        extract_saturated_model(c)
    assert info.value.code == "CLIP_NOT_CLEAN"


# -- validators ----------------------------------------------------------------

def test_initial_clip_is_coherent_and_regular():
    rep = validate_clip(initial_clip(box_model(), "w", BOX_P, FIK))
    assert rep.coherent and rep.regular and rep.clean is False


def test_incoherent_clip_rejected_early():
    c = initial_clip(box_model(), "w", BOX_P, FIK)
    bad = Clip(c.tips + (Tip(0, 1, c.tips[0].topic, 0, 0),), c.ll, c.tr, c.base, c.root, c.logic)
    rep = verify_truth_lemma(bad)
    assert not rep.coherent and not rep.ok
    assert rep.truth_lemma_ok is None


def test_bad_edge_is_incoherent():
    c = saturate(box_model(), "w", BOX_P, FIK)
    bad = Clip(c.tips, c.ll | {(0, 1)}, c.tr, c.base, c.root, c.logic)
    assert not validate_clip(bad).coherent


def test_clusters_in_base_are_collapsed():
    f = Frame.build(["a", "b", "u"], [("a", "b"), ("b", "a")], [("a", "u"), ("b", "u")])
    m = Model.build(f, {})
    assert frame_class_check(f, C_FC)
    c = saturate(m, "b", parse("[]p"), FIK)
    assert c.base.frame.size == 2
    assert verify_truth_lemma(c).ok


# -- whole-run properties -------------------------------------------------------

def _falsified(m, a):
    ts = truth_set(m, a)
    return next((i for i in range(m.frame.size) if not ts >> i & 1), None)


@settings(max_examples=80)
@given(models(classes=(C_FC, C_FDC), max_size=4), formulas(max_leaves=6), st.sampled_from([FIK, LIK]))
def test_saturation_end_to_end(m, a, logic):
    if not frame_class_check(m.frame, logic.frame_class):
        logic = FIK
    s0 = _falsified(m, a)
    assume(s0 is not None)
    trace = []
    c = saturate(m, s0, a, logic, trace=trace)
    rep = verify_truth_lemma(c)
    assert rep.ok, rep.violations
    card = len(c.sigma)
    for t in c.tips:
        assert t.topic == closure_iterate(c.sigma, t.rank) and t.rank <= card
    for rec in trace:
        if rec["kind"] in {k.value for k in MAXIMALITY}:
            assert rec["new_degree"] < rec["anchor_degree"]
        else:
            new = c.tip(rec["new_tip"])
            assert new.rank == rec["rank"] + 1 and new.height == rec["height"]
    if logic is LIK:
        assert frame_class_check(extract_saturated_model(c).frame, LIK.saturated_class)


@settings(max_examples=30)
@given(models(classes=(C_FDC,), max_size=4), formulas(max_leaves=6))
def test_clip_json_round_trip(m, a):
    s0 = _falsified(m, a)
    assume(s0 is not None)
    c = saturate(m, s0, a, LIK)
    data = json.loads(json.dumps(clip_to_json(c)))
    back = clip_from_json(data, m, a, LIK)
    assert set(back.tips) == set(c.tips)
    assert back.ll == c.ll and back.tr == c.tr
    assert set(data["provenance"]) == set(data["worlds"])
