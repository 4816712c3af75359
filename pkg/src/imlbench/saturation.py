"""Selective filtration by saturation.

Starting from a finite base model in the class of the logic and a world ``s0``
falsifying the root formula ``A``, the procedure grows a *clip*: a finite set
of tips ``(name, world, topic, rank, height)`` joined by two relations, ``ll``
(order successor) and ``tr`` (modal successor).  Local obligations that the
clip does not yet meet are *defects*; each defect is repaired by adding one
tip whose world is a witness found in the base model.  When no defect is left
the clip itself, read as a frame with ``ll*`` as order and ``tr`` as
accessibility, is a finite model falsifying ``A`` that also satisfies upward
confluence.

The base model stands in for the canonical model: every query about truth,
maximality, successors and order is answered by model checking the base.
Bases with non-trivial ``le``-clusters are first collapsed by
:func:`~imlbench.kripke.cluster_quotient`, which preserves truth and class
membership and makes box-accessibility witnesses exist.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

from .formula import (Box, Dia, Formula, Impl, closure_iterate, closure_of,
                      formula_key, is_closed, modal_step, render,
                      sort_formulas)
from .kripke import (Confluence, Frame, FrameClass, Model, bits,
                     cluster_quotient, frame_class_check, satisfies,
                     truth_set)
from .logic import LogicId

log = logging.getLogger(__name__)

__all__ = [
    "SaturationError", "Tip", "Clip", "DefectKind", "Defect",
    "ValidationReport", "Budget", "MAXIMALITY", "ACCESSIBILITY", "DOWNWARD",
    "FORWARD", "GROUPS", "initial_clip", "degree", "is_maximal",
    "find_strict_maximal_witness", "find_defects", "is_defect",
    "repair_defect", "run_pass", "saturate", "extract_saturated_model",
    "verify_truth_lemma", "validate_clip", "clip_to_json", "clip_from_json",
    "default_fuel",
]


class SaturationError(RuntimeError):
    """Raised with a stable ``code``: BASE_MODEL_WRONG_CLASS,
    BASE_MODEL_SATISFIES_A, NO_WITNESS, WITNESS_NOT_FOUND, FUEL_EXHAUSTED,
    CLIP_NOT_CLEAN or INVARIANT_VIOLATION."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Tip:
    name: int
    world: int
    topic: frozenset
    rank: int
    height: int

    def describe(self, base: Model | None = None) -> str:
        w = base.worlds[self.world] if base is not None else self.world
        return f"({self.name}, {w}, rank {self.rank}, height {self.height})"


class DefectKind(enum.Enum):
    IMPL_MAX = "ImplMax"
    BOX_MAX = "BoxMax"
    BOX_ACC = "BoxAcc"
    DIA_ACC = "DiaAcc"
    DOWN_CONF = "DownConf"
    FWD_CONF = "FwdConf"

    def __str__(self):
        return self.value


MAXIMALITY = frozenset({DefectKind.IMPL_MAX, DefectKind.BOX_MAX})
ACCESSIBILITY = frozenset({DefectKind.BOX_ACC, DefectKind.DIA_ACC})
DOWNWARD = frozenset({DefectKind.DOWN_CONF})
FORWARD = frozenset({DefectKind.FWD_CONF})
GROUPS = {"maximality": MAXIMALITY, "accessibility": ACCESSIBILITY,
          "downward": DOWNWARD, "forward": FORWARD}
ALL_KINDS = frozenset(DefectKind)

_KIND_ORDER = {k: n for n, k in enumerate(DefectKind)}


@dataclass(frozen=True)
class Defect:
    """A defect anchored at ``tips[0]``.

    Maximality and accessibility defects have one tip and carry the offending
    formula (``B -> C``, ``[]B`` or ``<>B``).  Confluence defects carry the
    triple ``(i, j, k)``: for DownConf ``i ll j`` and ``j tr k``; for FwdConf
    ``j ll i`` and ``j tr k``.
    """
    kind: DefectKind
    tips: tuple[int, ...]
    formula: Formula | None
    rank: int
    height: int

    @property
    def anchor(self) -> int:
        return self.tips[0]

    @property
    def witness_formulas(self) -> tuple[Formula, ...]:
        f = self.formula
        if f is None:
            return ()
        if type(f) is Impl:
            return f.left, f.right
        return (f.body,)

    def sort_key(self):
        fkey = formula_key(self.formula) if self.formula is not None else (0, "")
        return self.anchor, _KIND_ORDER[self.kind], fkey, self.tips

    def __str__(self):
        what = render(self.formula) if self.formula is not None else "tips " + ",".join(map(str, self.tips))
        return f"{self.kind} at tip {self.anchor} [{what}] (rank {self.rank}, height {self.height})"


@dataclass(frozen=True)
class Clip:
    tips: tuple[Tip, ...]
    ll: frozenset
    tr: frozenset
    base: Model
    root: Formula
    logic: LogicId

    @cached_property
    def sigma(self) -> frozenset:
        return closure_of(self.root).members

    @cached_property
    def by_name(self) -> dict[int, Tip]:
        return {t.name: t for t in self.tips}

    def tip(self, name: int) -> Tip:
        return self.by_name[name]

    @cached_property
    def ll_succ(self) -> dict[int, list[int]]:
        return _adjacency(self.ll, 0, 1)

    @cached_property
    def ll_pred(self) -> dict[int, list[int]]:
        return _adjacency(self.ll, 1, 0)

    @cached_property
    def tr_succ(self) -> dict[int, list[int]]:
        return _adjacency(self.tr, 0, 1)

    @cached_property
    def tr_pred(self) -> dict[int, list[int]]:
        return _adjacency(self.tr, 1, 0)

    def next_name(self) -> int:
        return max(t.name for t in self.tips) + 1

    def world_name(self, tip: Tip | int) -> str:
        if isinstance(tip, int):
            tip = self.tip(tip)
        return self.base.worlds[tip.world]

    def h(self, rank: int) -> int:
        """Greatest height among tips of the given rank; 0 if there are none."""
        return max((t.height for t in self.tips if t.rank == rank), default=0)

    def __len__(self):
        return len(self.tips)


def _adjacency(pairs: Iterable[tuple[int, int]], a: int, b: int) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for p in pairs:
        out.setdefault(p[a], []).append(p[b])
    for v in out.values():
        v.sort()
    return out


# ---------------------------------------------------------------------------
# Base model queries

def _truth(m: Model, f: Formula) -> int:
    return truth_set(m, f)


def is_maximal(m: Model, s: int, b: Formula) -> bool:
    """Every world strictly above ``s`` satisfies ``b``."""
    return not m.frame.strict_up(s) & ~_truth(m, b)


def degree(t: Tip, m: Model) -> int:
    """Number of topic formulas false at the tip's world where that world is
    not maximal with respect to them."""
    tv = 0
    for b in t.topic:
        if not _truth(m, b) >> t.world & 1 and not is_maximal(m, t.world, b):
            tv += 1
    return tv


def find_strict_maximal_witness(m: Model, s: str | int, b: Formula) -> int:
    """A world ``t`` strictly above ``s`` falsifying ``b`` and maximal with
    respect to ``b``; the lowest index among the candidates."""
    s = m.frame.index(s)
    f = m.frame
    cand = f.strict_up(s) & ~_truth(m, b)
    if not cand:
        raise SaturationError("NO_WITNESS",
                              f"{m.worlds[s]} is maximal with respect to {render(b)}")
    for t in bits(cand):
        if not f.strict_up(t) & cand:
            return t
    raise AssertionError("finite strict order has maximal elements")  # pragma: no cover


# ---------------------------------------------------------------------------
# Construction

def _cluster_free_base(m: Model, s0: int) -> tuple[Model, int]:
    q, mapping = cluster_quotient(m)
    return q, mapping[s0]


def initial_clip(m: Model, s0: str | int, a: Formula, logic: LogicId) -> Clip:
    check = frame_class_check(m.frame, logic.frame_class)
    if not check:
        raise SaturationError(
            "BASE_MODEL_WRONG_CLASS",
            f"base frame is not in {logic.frame_class}: {check.confluence.name.lower()} "
            f"confluence fails at {check.witness}")
    s0 = m.frame.index(s0)
    if satisfies(m, s0, a):
        raise SaturationError("BASE_MODEL_SATISFIES_A",
                              f"{m.worlds[s0]} satisfies {render(a)}")
    base, s0 = _cluster_free_base(m, s0)
    sigma = closure_of(a).members
    return Clip((Tip(0, s0, sigma, 0, 0),), frozenset(), frozenset(), base, a, logic)


# ---------------------------------------------------------------------------
# Defects

def _tip_defects(c: Clip, t: Tip, kinds) -> list[Defect]:
    m = c.base
    s = t.world
    out = []
    for f in sort_formulas(t.topic):
        kind_f = type(f)
        if kind_f is Impl or kind_f is Box:
            tf = _truth(m, f)
            if tf >> s & 1:
                continue
            if is_maximal(m, s, f):
                if kind_f is Box and DefectKind.BOX_ACC in kinds:
                    tb = _truth(m, f.body)
                    if all(tb >> c.tip(j).world & 1 for j in c.tr_succ.get(t.name, ())):
                        out.append(Defect(DefectKind.BOX_ACC, (t.name,), f, t.rank, t.height))
            else:
                kind = DefectKind.IMPL_MAX if kind_f is Impl else DefectKind.BOX_MAX
                if kind in kinds and all(tf >> c.tip(j).world & 1
                                         for j in c.ll_succ.get(t.name, ())):
                    out.append(Defect(kind, (t.name,), f, t.rank, t.height))
        elif kind_f is Dia and DefectKind.DIA_ACC in kinds:
            if _truth(m, f) >> s & 1:
                tb = _truth(m, f.body)
                if not any(tb >> c.tip(j).world & 1 for j in c.tr_succ.get(t.name, ())):
                    out.append(Defect(DefectKind.DIA_ACC, (t.name,), f, t.rank, t.height))
    return out


def _down_defects(c: Clip, t: Tip) -> list[Defect]:
    i = t.name
    mine = set(c.tr_succ.get(i, ()))
    out = []
    for j in c.ll_succ.get(i, ()):
        for k in c.tr_succ.get(j, ()):
            if not mine.intersection(c.ll_pred.get(k, ())):
                out.append(Defect(DefectKind.DOWN_CONF, (i, j, k), None, t.rank, t.height))
    return out


def _fwd_defects(c: Clip, t: Tip) -> list[Defect]:
    i = t.name
    mine = set(c.tr_succ.get(i, ()))
    out = []
    for j in c.ll_pred.get(i, ()):
        for k in c.tr_succ.get(j, ()):
            if not mine.intersection(c.ll_succ.get(k, ())):
                out.append(Defect(DefectKind.FWD_CONF, (i, j, k), None, t.rank, t.height))
    return out


def find_defects(c: Clip, kinds: Iterable[DefectKind] = ALL_KINDS,
                 rank: int | None = None, height: int | None = None) -> list[Defect]:
    """Defects of the requested kinds, optionally restricted to a rank and a
    height, ordered by anchor name, kind and formula.  DownConf defects exist
    only for LIK."""
    kinds = frozenset(kinds)
    if c.logic is not LogicId.LIK:
        kinds -= DOWNWARD
    out: list[Defect] = []
    for t in sorted(c.tips, key=lambda t: t.name):
        if rank is not None and t.rank != rank:
            continue
        if height is not None and t.height != height:
            continue
        if kinds & (MAXIMALITY | ACCESSIBILITY):
            out.extend(_tip_defects(c, t, kinds))
        if DefectKind.DOWN_CONF in kinds:
            out.extend(_down_defects(c, t))
        if DefectKind.FWD_CONF in kinds:
            out.extend(_fwd_defects(c, t))
    out.sort(key=Defect.sort_key)
    return out


def is_defect(c: Clip, d: Defect) -> bool:
    """Whether ``d`` is still a defect of ``c``."""
    if d.anchor not in c.by_name:
        return False
    t = c.tip(d.anchor)
    return d in find_defects(c, {d.kind}, t.rank, t.height)


# ---------------------------------------------------------------------------
# Repairs

def _invariant(cond: bool, message: str):
    if not cond:
        raise SaturationError("INVARIANT_VIOLATION", message)


def _extend(c: Clip, tip: Tip, ll=(), tr=()) -> Clip:
    return Clip(c.tips + (tip,), c.ll | frozenset(ll), c.tr | frozenset(tr),
                c.base, c.root, c.logic)


def _first(mask: int, what: str, d: Defect) -> int:
    if not mask:
        raise SaturationError("WITNESS_NOT_FOUND", f"no {what} for {d}")
    return (mask & -mask).bit_length() - 1


def _repair(c: Clip, d: Defect) -> tuple[Clip, dict]:
    m = c.base
    f = m.frame
    anchor = c.tip(d.anchor)
    s = anchor.world
    new = c.next_name()
    record = {"kind": d.kind.value, "rank": d.rank, "height": d.height,
              "anchor": anchor.name, "new_tip": new}
    if d.kind in MAXIMALITY:
        try:
            t = find_strict_maximal_witness(m, s, d.formula)
        except SaturationError as e:
            raise SaturationError("WITNESS_NOT_FOUND", str(e)) from None
        tip = Tip(new, t, anchor.topic, anchor.rank, anchor.height + 1)
        out = _extend(c, tip, ll=[(anchor.name, new)])
        before, after = degree(anchor, m), degree(tip, m)
        _invariant(after < before,
                   f"degree did not decrease: {before} -> {after} repairing {d}")
        record.update(anchor_degree=before, new_degree=after)
    elif d.kind in ACCESSIBILITY:
        tb = _truth(m, d.formula.body)
        if d.kind is DefectKind.BOX_ACC:
            t = _first(f.r[s] & ~tb, "r-successor falsifying the box body", d)
        else:
            t = _first(f.r[s] & tb, "r-successor satisfying the diamond body", d)
        tip = Tip(new, t, modal_step(anchor.topic), anchor.rank + 1, anchor.height)
        out = _extend(c, tip, tr=[(anchor.name, new)])
    elif d.kind is DefectKind.DOWN_CONF:
        k = c.tip(d.tips[2])
        v = _first(f.r[s] & f.down[k.world], "downward confluence witness", d)
        tip = Tip(new, v, modal_step(anchor.topic), anchor.rank + 1, anchor.height)
        _invariant(tip.topic == k.topic and tip.rank == k.rank and tip.height == k.height - 1,
                   f"downward repair bookkeeping mismatch for {d}")
        _invariant(tip.height >= 0, f"negative height repairing {d}")
        out = _extend(c, tip, ll=[(new, k.name)], tr=[(anchor.name, new)])
    elif d.kind is DefectKind.FWD_CONF:
        k = c.tip(d.tips[2])
        v = _first(f.r[s] & f.up[k.world], "forward confluence witness", d)
        tip = Tip(new, v, modal_step(anchor.topic), anchor.rank + 1, anchor.height)
        _invariant(tip.topic == k.topic and tip.rank == k.rank and tip.height == k.height + 1,
                   f"forward repair bookkeeping mismatch for {d}")
        out = _extend(c, tip, ll=[(k.name, new)], tr=[(anchor.name, new)])
    else:  # pragma: no cover
        raise ValueError(d.kind)
    if d.kind not in MAXIMALITY:
        _invariant(tip.rank == anchor.rank + 1 and tip.height == anchor.height,
                   f"{d} created a tip off rank+1 / anchor height")
    _invariant(tip.topic == closure_iterate(c.sigma, tip.rank),
               f"topic of new tip {new} is not the rank-{tip.rank} stratum")
    _invariant(tip.rank <= len(c.sigma), f"rank bound exceeded by tip {new}")
    record["witness"] = m.worlds[tip.world]
    return out, record


def repair_defect(c: Clip, d: Defect) -> Clip:
    """Add the one tip (and edges) that removes defect ``d``."""
    return _repair(c, d)[0]


# ---------------------------------------------------------------------------
# Procedures

@dataclass
class Budget:
    """Shared repair counter; running out raises FUEL_EXHAUSTED."""
    remaining: int
    used: int = 0

    def spend(self):
        if self.remaining <= 0:
            raise SaturationError("FUEL_EXHAUSTED", f"step cap hit after {self.used} repairs")
        self.remaining -= 1
        self.used += 1


def default_fuel(a: Formula) -> int:
    return 4 ** (len(closure_of(a)) + 2)


def run_pass(c: Clip, kind_group: str, rank: int, fuel: int | Budget | None = None,
             trace: list | None = None) -> Clip:
    """Repair every defect of one group at one rank.

    Heights are swept upward from 0, except for the downward group, which is
    swept downward from the greatest height among tips of this rank.  Each
    height is handled as a batch: the defects present when the batch starts
    are repaired in order, skipping any that an earlier repair already cured.
    """
    kinds = GROUPS[kind_group]
    if kind_group == "downward" and c.logic is not LogicId.LIK:
        return c
    budget = fuel if isinstance(fuel, Budget) else Budget(fuel if fuel is not None else default_fuel(c.root))
    descending = kind_group == "downward"
    x = c.h(rank) if descending else 0
    while find_defects(c, kinds, rank):
        if x < 0:
            raise SaturationError("INVARIANT_VIOLATION",
                                  f"{kind_group} defects of rank {rank} left below height 0")
        for d in find_defects(c, kinds, rank, x):
            if not is_defect(c, d):
                continue
            budget.spend()
            c, record = _repair(c, d)
            if trace is not None:
                record = {"pass": kind_group, **record}
                trace.append(record)
            log.debug("repaired %s -> tip %s", d, record["new_tip"])
        x = x - 1 if descending else x + 1
    return c


def saturate(m: Model, s0: str | int, a: Formula, logic: LogicId,
             fuel: int | None = None, trace: list | None = None) -> Clip:
    """Run the saturation procedure to a clean clip.

    Ranks are processed in increasing order; each rank runs the maximality,
    accessibility, downward (LIK only) and forward passes in that order.
    """
    c = initial_clip(m, s0, a, logic)
    budget = Budget(fuel if fuel is not None else default_fuel(a))
    card = len(c.sigma)
    alpha = 0
    while find_defects(c):
        _invariant(alpha <= card, f"rank {alpha} exceeds Card(closure) = {card}")
        for group in ("maximality", "accessibility", "downward", "forward"):
            c = run_pass(c, group, alpha, budget, trace)
        alpha += 1
    return c


# ---------------------------------------------------------------------------
# Extraction and verification

def _clip_frame(c: Clip) -> tuple[Frame, dict[int, int]]:
    order = sorted(t.name for t in c.tips)
    index = {name: i for i, name in enumerate(order)}
    return Frame.build(
        [f"t{n}" for n in order],
        [(f"t{a}", f"t{b}") for a, b in sorted(c.ll)],
        [(f"t{a}", f"t{b}") for a, b in sorted(c.tr)],
    ), index


def extract_saturated_model(c: Clip, check_clean: bool = True) -> Model:
    """Worlds are the tips (named ``t<name>``), order is ``ll*``, accessibility
    is ``tr``, and an atom holds at a tip iff it holds at the tip's world."""
    if check_clean and find_defects(c):
        raise SaturationError("CLIP_NOT_CLEAN", f"{len(find_defects(c))} defects remain")
    frame, index = _clip_frame(c)
    val = {}
    for p, ext in c.base.val.items():
        mask = 0
        for t in c.tips:
            if ext >> t.world & 1:
                mask |= 1 << index[t.name]
        val[p] = mask
    return Model(frame, val)


@dataclass
class ValidationReport:
    coherent: bool = True
    regular: bool = True
    clean: bool | None = None
    frame_class_ok: bool | None = None
    truth_lemma_ok: bool | None = None
    homomorphism_ok: bool | None = None
    upward_confluent: bool | None = None
    topic_invariant_ok: bool | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        flags = (self.coherent, self.regular, self.clean, self.frame_class_ok,
                 self.truth_lemma_ok, self.homomorphism_ok, self.upward_confluent,
                 self.topic_invariant_ok)
        return all(f is not False for f in flags)

    def to_json(self) -> dict:
        return {
            "coherent": self.coherent, "regular": self.regular, "clean": self.clean,
            "frame_class_ok": self.frame_class_ok, "truth_lemma_ok": self.truth_lemma_ok,
            "homomorphism_ok": self.homomorphism_ok, "upward_confluent": self.upward_confluent,
            "topic_invariant_ok": self.topic_invariant_ok, "violations": list(self.violations),
        }


def _check_coherence(c: Clip, rep: ValidationReport):
    seen: dict[int, Tip] = {}
    for t in c.tips:
        if t.name in seen and seen[t.name] != t:
            rep.coherent = False
            rep.violations.append(f"coherence: two different tips named {t.name}")
        seen.setdefault(t.name, t)
        if not t.topic <= c.sigma or not is_closed(t.topic):
            rep.coherent = False
            rep.violations.append(f"coherence: topic of tip {t.name} is not a closed subset of the root closure")
        if not 0 <= t.world < c.base.frame.size:
            rep.coherent = False
            rep.violations.append(f"coherence: tip {t.name} refers to a missing world")
    if not rep.coherent:
        return
    f = c.base.frame
    for a, b in sorted(c.ll):
        if a not in seen or b not in seen:
            rep.coherent = False
            rep.violations.append(f"coherence: ll edge ({a}, {b}) names a missing tip")
            continue
        x, y = seen[a], seen[b]
        if not (a != b and f.le(x.world, y.world) and x.topic and y.topic == x.topic
                and y.rank == x.rank and y.height == x.height + 1):
            rep.coherent = False
            rep.violations.append(f"coherence: ll edge ({a}, {b})")
    for a, b in sorted(c.tr):
        if a not in seen or b not in seen:
            rep.coherent = False
            rep.violations.append(f"coherence: tr edge ({a}, {b}) names a missing tip")
            continue
        x, y = seen[a], seen[b]
        if not (a != b and f.rel(x.world, y.world) and x.topic and y.topic == modal_step(x.topic)
                and y.rank == x.rank + 1 and y.height == x.height):
            rep.coherent = False
            rep.violations.append(f"coherence: tr edge ({a}, {b})")


def _check_regularity(c: Clip, rep: ValidationReport):
    for rel, preds in (("ll", c.ll_pred), ("tr", c.tr_pred)):
        for k, ps in sorted(preds.items()):
            if len(set(ps)) > 1:
                rep.regular = False
                rep.violations.append(f"regularity: tip {k} has {len(set(ps))} {rel}-predecessors")
    for k in sorted(c.tr_pred):
        for i in c.tr_pred[k]:
            for j in c.ll_pred.get(k, ()):
                if not any((l, j) in c.tr for l in c.ll_pred.get(i, ())):
                    rep.regular = False
                    rep.violations.append(
                        f"regularity: {i} tr {k} and {j} ll {k} without a common square")


def _check_projection(c: Clip, rep: ValidationReport):
    frame, index = _clip_frame(c)
    f = c.base.frame
    by_index = {index[t.name]: t for t in c.tips}
    rep.homomorphism_ok = True
    for i, j in frame.le_pairs():
        if not f.le(by_index[i].world, by_index[j].world):
            rep.homomorphism_ok = False
            rep.violations.append(f"projection: ll* pair (t{by_index[i].name}, t{by_index[j].name}) not ordered in base")
    for a, b in c.tr:
        if not f.rel(c.tip(a).world, c.tip(b).world):
            rep.homomorphism_ok = False
            rep.violations.append(f"projection: tr pair ({a}, {b}) not related in base")
    up = frame_class_check(frame, FrameClass(frozenset({Confluence.UPWARD})))
    rep.upward_confluent = up.ok
    if not up.ok:
        rep.violations.append(f"clip frame not upward confluent at {up.witness}")


def _check_topics(c: Clip, rep: ValidationReport):
    rep.topic_invariant_ok = True
    card = len(c.sigma)
    for t in c.tips:
        if t.topic != closure_iterate(c.sigma, t.rank) or t.rank > card \
                or t.rank > card - len(t.topic):
            rep.topic_invariant_ok = False
            rep.violations.append(f"topic invariant fails at tip {t.name} (rank {t.rank})")


def validate_clip(c: Clip) -> ValidationReport:
    """Coherence, regularity and cleanness, plus the derived facts that the
    world projection is a homomorphism and that the clip frame is upward
    confluent."""
    rep = ValidationReport()
    _check_coherence(c, rep)
    if not rep.coherent:
        return rep
    _check_regularity(c, rep)
    _check_projection(c, rep)
    _check_topics(c, rep)
    if rep.regular:
        defects = find_defects(c)
        rep.clean = not defects
        for d in defects[:20]:
            rep.violations.append(f"defect: {d}")
    return rep


def verify_truth_lemma(c: Clip, extracted: Model | None = None) -> ValidationReport:
    """Full check of a finished run.

    Validates the clip, checks that the extracted frame lies in the upgraded
    class of the logic, that every topic formula has the same truth value at a
    tip as at its world, and that tip 0 falsifies the root formula.
    """
    rep = validate_clip(c)
    if not (rep.coherent and rep.regular):
        rep.violations.append("truth lemma not checked: clip is not coherent and regular")
        return rep
    if extracted is None:
        extracted = extract_saturated_model(c, check_clean=False)
    cls = frame_class_check(extracted.frame, c.logic.saturated_class)
    rep.frame_class_ok = cls.ok
    if not cls.ok:
        rep.violations.append(
            f"extracted frame not in {c.logic.saturated_class}: "
            f"{cls.confluence.name.lower()} confluence fails at {cls.witness}")
    _, index = _clip_frame(c)
    rep.truth_lemma_ok = True
    for t in sorted(c.tips, key=lambda t: t.name):
        for b in sort_formulas(t.topic):
            here = satisfies(extracted, index[t.name], b)
            there = satisfies(c.base, t.world, b)
            if here != there:
                rep.truth_lemma_ok = False
                rep.violations.append(
                    f"truth lemma: tip {t.name}, {render(b)}: saturated {here}, base {there}")
    if 0 not in index or satisfies(extracted, index[0], c.root):
        rep.truth_lemma_ok = False
        rep.violations.append("tip 0 does not falsify the root formula")
    return rep


# ---------------------------------------------------------------------------
# Serialization

def clip_to_json(c: Clip) -> dict:
    """The saturated model in model-file form.

    ``le`` lists exactly the ``ll`` edges (the loader closes them), ``r`` the
    ``tr`` edges, and ``provenance`` maps each world to its tip.
    """
    model = extract_saturated_model(c, check_clean=False)
    order = sorted(t.name for t in c.tips)
    return {
        "worlds": [f"t{n}" for n in order],
        "le": [[f"t{a}", f"t{b}"] for a, b in sorted(c.ll)],
        "r": [[f"t{a}", f"t{b}"] for a, b in sorted(c.tr)],
        "val": {p: model.frame.names(v) for p, v in model.val.items()},
        "provenance": {
            f"t{n}": {"tip": {"name": n, "world": c.world_name(n),
                              "rank": c.tip(n).rank, "height": c.tip(n).height}}
            for n in order
        },
    }


def clip_from_json(data: dict, base: Model, root: Formula, logic: LogicId) -> Clip:
    """Rebuild a clip from :func:`clip_to_json` output over the original base
    model (clusters are collapsed the same way saturation does).  Topics are
    recomputed from ranks."""
    qbase, _ = cluster_quotient(base)
    sigma = closure_of(root).members
    tips = []
    names = {}
    for wname, prov in data["provenance"].items():
        info = prov["tip"]
        tip = Tip(int(info["name"]), qbase.frame.index(info["world"]),
                  closure_iterate(sigma, int(info["rank"])), int(info["rank"]),
                  int(info["height"]))
        tips.append(tip)
        names[wname] = tip.name
    tips.sort(key=lambda t: t.name)
    ll = frozenset((names[a], names[b]) for a, b in data.get("le", []))
    tr = frozenset((names[a], names[b]) for a, b in data.get("r", []))
    return Clip(tuple(tips), ll, tr, qbase, root, logic)
