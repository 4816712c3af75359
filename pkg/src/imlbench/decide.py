"""Bounded countermodel search and self-checking certificates.

``decide`` scans the logic's frame class in canonical order (sizes ascending,
then preorders, relations, valuations and worlds in encoding order) and
returns the first falsifying pair it meets.  A hit refutes membership; an
exhausted bound only says that no small countermodel exists.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .formula import Formula, ParseError, atoms_of, parse, render
from .kripke import (FrameClass, Model, ModelError, Semantics, _frame_unchecked,
                     class_relations, default_names, enumerate_preorders,
                     first_failure_over, frame_class_check, model_from_json,
                     model_to_json, satisfies, valuation_at)
from .logic import LogicId
from .saturation import (SaturationError, clip_from_json, clip_to_json,
                         extract_saturated_model, saturate, verify_truth_lemma)

__all__ = [
    "SearchConfig", "SearchResult", "Verdict", "Certificate",
    "search_countermodel", "decide", "verify_certificate",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    max_frame_size: int = 3
    semantics: Semantics = Semantics.STANDARD
    run_saturation: bool = False
    fuel: int | None = None
    # The search order is fixed; the seed is recorded but never consumed.
    seed: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.max_frame_size < 1:
            raise ValueError("max_frame_size must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


class Verdict(enum.Enum):
    NON_THEOREM = "NonTheorem"
    NO_COUNTERMODEL = "NoCountermodelUpToBound"

    def __str__(self):
        return self.value


@dataclass
class SearchResult:
    model: Model | None = None
    world: int | None = None
    frames: int = 0
    valuations: int = 0

    @property
    def found(self) -> bool:
        return self.model is not None


def _scan_preorder(size: int, up: tuple[int, ...], cls: FrameClass, phi: Formula,
                   atoms: list[str], sem: Semantics):
    """First hit among the class relations over one preorder.

    Returns ``(hit, frames, valuations)`` with ``hit`` either ``None`` or
    ``(relation rows, valuation index, world)``.
    """
    probe = _frame_unchecked(default_names(size), up, (0,) * size)
    ups = [m for m in range(1 << size) if probe.is_upset(m)]
    per_frame = len(ups) ** len(atoms)
    rels = class_relations(up, cls)
    hit = first_failure_over(up, rels, phi, atoms, ups, sem)
    if hit is None:
        return None, len(rels), len(rels) * per_frame
    i, k, w = hit
    return (rels[i], k, w), i + 1, i * per_frame + k + 1


def _scan_task(args):
    return _scan_preorder(*args)


def search_countermodel(a: Formula, l: LogicId, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Earliest falsifying (model, world) in canonical order, with counts of
    the frames and valuations examined."""
    atoms = atoms_of(a)
    cls = l.frame_class
    out = SearchResult()
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        for size in range(1, cfg.max_frame_size + 1):
            preorders = enumerate_preorders(size)
            tasks = [(size, up, cls, a, atoms, cfg.semantics) for up in preorders]
            # map() yields in submission order, so the first hit seen is the
            # earliest in canonical order whatever order workers finish in
            results = pool.map(_scan_task, tasks) if pool else map(_scan_task, tasks)
            for up, (hit, frames, valuations) in zip(preorders, results):
                out.frames += frames
                out.valuations += valuations
                if hit is None:
                    continue
                r, k, w = hit
                frame = _frame_unchecked(default_names(size), up, r)
                ups = [m for m in range(1 << size) if frame.is_upset(m)]
                out.model = Model(frame, valuation_at(ups, atoms, k))
                out.world = w
                log.info("countermodel of size %d after %d frames", size, out.frames)
                return out
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    return out


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    formula: Formula
    logic: LogicId
    bound: int
    semantics: Semantics = Semantics.STANDARD
    model: Model | None = None
    world: str | None = None
    frames_examined: int = 0
    valuations_examined: int = 0
    saturated: dict | None = None
    report: dict | None = None
    diagnostics: tuple[str, ...] = ()
    trace_path: str | None = None

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "formula": render(self.formula),
            "logic": self.logic.value,
            "bound": self.bound,
            "semantics": self.semantics.value,
            "counts": {"frames": self.frames_examined, "valuations": self.valuations_examined},
        }
        if self.model is not None:
            out["model"] = model_to_json(self.model)
            out["world"] = self.world
        if self.saturated is not None:
            out["saturated"] = self.saturated
            out["report"] = self.report
        if self.diagnostics:
            out["diagnostics"] = list(self.diagnostics)
        if self.trace_path is not None:
            out["trace"] = self.trace_path
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Certificate":
        counts = data.get("counts", {})
        model = model_from_json(data["model"]) if "model" in data else None
        return cls(
            verdict=Verdict(data["verdict"]),
            formula=parse(data["formula"]),
            logic=LogicId.parse(data["logic"]),
            bound=int(data["bound"]),
            semantics=Semantics(data.get("semantics", "std")),
            model=model,
            world=data.get("world"),
            frames_examined=int(counts.get("frames", 0)),
            valuations_examined=int(counts.get("valuations", 0)),
            saturated=data.get("saturated"),
            report=data.get("report"),
            diagnostics=tuple(data.get("diagnostics", ())),
            trace_path=data.get("trace"),
        )


def decide(a: Formula, l: LogicId, cfg: SearchConfig = SearchConfig(),
           trace: list | None = None) -> Certificate:
    """Search for a countermodel and package the outcome.

    With ``cfg.run_saturation`` a hit is also saturated into the upgraded
    class.  A failing saturation run does not change the verdict; it is
    reported under ``diagnostics`` instead.
    """
    res = search_countermodel(a, l, cfg)
    common = dict(formula=a, logic=l, bound=cfg.max_frame_size, semantics=cfg.semantics,
                  frames_examined=res.frames, valuations_examined=res.valuations)
    if not res.found:
        return Certificate(Verdict.NO_COUNTERMODEL, **common)
    world = res.model.frame.worlds[res.world]
    saturated = report = None
    diagnostics: list[str] = []
    if cfg.run_saturation:
        try:
            clip = saturate(res.model, res.world, a, l, cfg.fuel, trace)
            rep = verify_truth_lemma(clip, extract_saturated_model(clip))
            saturated, report = clip_to_json(clip), rep.to_json()
            if not rep.ok:
                diagnostics.append("saturation: validation failed")
        except SaturationError as e:
            diagnostics.append(f"saturation: {e.code}: {e}")
    return Certificate(Verdict.NON_THEOREM, model=res.model, world=world, saturated=saturated,
                       report=report, diagnostics=tuple(diagnostics), **common)


def _verify(data: Mapping) -> bool:
    verdict = Verdict(data["verdict"])
    a = parse(data["formula"])
    logic = LogicId.parse(data["logic"])
    sem = Semantics(data.get("semantics", "std"))
    bound = data["bound"]
    if not isinstance(bound, int) or bound < 1:
        return False
    if verdict is Verdict.NO_COUNTERMODEL:
        # Nothing to re-check beyond shape; a bound is not a proof.
        return "model" not in data and "saturated" not in data
    model = model_from_json(data["model"])
    if not frame_class_check(model.frame, logic.frame_class):
        return False
    if satisfies(model, data["world"], a, sem):
        return False
    if "saturated" not in data:
        return True
    stored = data["saturated"]
    clip = clip_from_json(stored, model, a, logic)
    extracted = extract_saturated_model(clip, check_clean=False)
    if model_to_json(extracted)["val"] != stored.get("val", {}):
        return False
    return verify_truth_lemma(clip, extracted).ok


def verify_certificate(c: Certificate | Mapping) -> bool:
    """Re-check a certificate from its serialized content alone."""
    data = c.to_json() if isinstance(c, Certificate) else c
    try:
        return _verify(data)
    except (KeyError, TypeError, ValueError, ModelError, ParseError, SaturationError):
        return False
