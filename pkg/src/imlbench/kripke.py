"""Finite birelational frames and models.

A frame is a finite set of worlds with a preorder ``le`` (the intuitionistic
order) and a binary relation ``r`` (modal accessibility).  Worlds are
identified by their index; names are kept for input and output only.  Sets of
worlds are int bitmasks throughout (bit ``i`` is world ``i``), which keeps
exhaustive enumeration of small frames cheap.

The satisfaction relation is computed as a truth set: ``truth_set(m, A)`` is
the mask of worlds at which ``A`` holds.
"""
from __future__ import annotations

import enum
import itertools
import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .formula import (And, Atom, Bot, Box, Dia, Formula, Impl, Or, Top,
                      atoms_of)

__all__ = [
    "ModelError", "Frame", "Model", "Confluence", "FrameClass",
    "C_ALL", "C_FC", "C_BC", "C_DC", "C_UC", "C_FDC", "C_FUC", "C_FDUC",
    "Semantics", "ClassCheck", "Validity",
    "preorder_closure", "frame_class_check", "truth_set", "satisfies",
    "valid_in_frame", "true_in_model", "enumerate_preorders",
    "enumerate_frames", "enumerate_valuations", "upsets", "random_model",
    "cluster_quotient", "model_from_json", "model_to_json", "frame_from_json",
    "load_model", "to_dot", "bits", "first_failure", "first_failure_over",
    "valuation_lanes", "class_relations",
    "valuation_at", "default_names",
]


class ModelError(ValueError):
    """Bad model or frame input.  ``code`` is a stable machine-readable tag."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _is_preorder(up: Sequence[int]) -> bool:
    for i, row in enumerate(up):
        if not row >> i & 1:
            return False
        for j in bits(row):
            if up[j] & ~row:
                return False
    return True


def _close(n: int, rows: list[int]) -> list[int]:
    rows = [rows[i] | (1 << i) for i in range(n)]
    # Warshall on bitmask rows
    for k in range(n):
        kb = 1 << k
        rk = rows[k]
        for i in range(n):
            if rows[i] & kb:
                rows[i] |= rk
    return rows


def _transpose(n: int, rows: Sequence[int]) -> tuple[int, ...]:
    cols = [0] * n
    for i, row in enumerate(rows):
        for j in bits(row):
            cols[j] |= 1 << i
    return tuple(cols)


@dataclass(frozen=True)
class Frame:
    """Finite frame ``(W, le, r)``.

    ``up[i]`` is the mask of worlds ``j`` with ``i <= j``; ``r[i]`` is the mask
    of ``r``-successors of ``i``.  ``up`` is always stored closed.
    """
    worlds: tuple[str, ...]
    up: tuple[int, ...]
    r: tuple[int, ...]
    down: tuple[int, ...] = field(init=False, repr=False, compare=False)
    rpred: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.worlds)
        if n == 0:
            raise ModelError("MODEL_EMPTY", "a frame needs at least one world")
        if len(set(self.worlds)) != n:
            raise ModelError("MODEL_BAD_REF", "duplicate world names")
        if len(self.up) != n or len(self.r) != n:
            raise ModelError("MODEL_BAD_REF", "relation rows do not match worlds")
        full = (1 << n) - 1
        if any(row & ~full for row in self.up + self.r):
            raise ModelError("MODEL_BAD_REF", "relation refers to a missing world")
        if not _is_preorder(self.up):
            raise ModelError("MODEL_NOT_PREORDER", "le is not reflexive and transitive")
        object.__setattr__(self, "down", _transpose(n, self.up))
        object.__setattr__(self, "rpred", _transpose(n, self.r))

    @classmethod
    def build(cls, worlds: Sequence[str], le: Iterable[tuple[str, str]] = (),
              r: Iterable[tuple[str, str]] = ()) -> "Frame":
        """Frame from named generator pairs; ``le`` is closed here."""
        worlds = tuple(worlds)
        index = _index(worlds)
        n = len(worlds)
        up = [0] * n
        for a, b in le:
            up[_lookup(index, a)] |= 1 << _lookup(index, b)
        rows = [0] * n
        for a, b in r:
            rows[_lookup(index, a)] |= 1 << _lookup(index, b)
        return cls(worlds, tuple(_close(n, up)), tuple(rows))

    @property
    def size(self) -> int:
        return len(self.worlds)

    @property
    def full(self) -> int:
        return (1 << len(self.worlds)) - 1

    def index(self, world: str | int) -> int:
        if isinstance(world, int):
            if not 0 <= world < len(self.worlds):
                raise ModelError("MODEL_BAD_REF", f"no world with index {world}")
            return world
        try:
            return self.worlds.index(world)
        except ValueError:
            raise ModelError("MODEL_BAD_REF", f"unknown world {world!r}") from None

    def le(self, a: int, b: int) -> bool:
        return bool(self.up[a] >> b & 1)

    def lt(self, a: int, b: int) -> bool:
        """Strict order: ``a <= b`` and not ``b <= a``."""
        return self.le(a, b) and not self.le(b, a)

    def strict_up(self, a: int) -> int:
        """Mask of worlds strictly above ``a``."""
        return self.up[a] & ~self.down[a]

    def rel(self, a: int, b: int) -> bool:
        return bool(self.r[a] >> b & 1)

    def le_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.size) for j in bits(self.up[i])]

    def r_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.size) for j in bits(self.r[i])]

    def is_partial_order(self) -> bool:
        return all(self.up[i] & self.down[i] == 1 << i for i in range(self.size))

    def names(self, mask: int) -> list[str]:
        return [self.worlds[i] for i in bits(mask)]

    def mask(self, names: Iterable[str | int]) -> int:
        m = 0
        for w in names:
            m |= 1 << self.index(w)
        return m

    def is_upset(self, mask: int) -> bool:
        return all(not (self.up[i] & ~mask) for i in bits(mask))

    def upclose(self, mask: int) -> int:
        out = mask
        for i in bits(mask):
            out |= self.up[i]
        return out


def _index(worlds: Sequence[str]) -> dict[str, int]:
    return {w: i for i, w in enumerate(worlds)}


def _lookup(index: Mapping[str, int], w: str) -> int:
    try:
        return index[w]
    except KeyError:
        raise ModelError("MODEL_BAD_REF", f"unknown world {w!r}") from None


def preorder_closure(pairs: Iterable[tuple[str, str]], worlds: Iterable[str]) -> frozenset:
    """Reflexive-transitive closure of ``pairs`` over ``worlds``."""
    worlds = tuple(worlds)
    index = _index(worlds)
    n = len(worlds)
    rows = [0] * n
    for a, b in pairs:
        rows[_lookup(index, a)] |= 1 << _lookup(index, b)
    rows = _close(n, rows)
    return frozenset((worlds[i], worlds[j]) for i in range(n) for j in bits(rows[i]))


@dataclass(frozen=True)
class Model:
    """A frame plus a valuation mapping atom names to up-closed world masks.

    Atoms missing from ``val`` are false everywhere.
    """
    frame: Frame
    val: Mapping[str, int]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "val", dict(sorted(self.val.items())))
        for p, m in self.val.items():
            if m & ~self.frame.full:
                raise ModelError("MODEL_BAD_REF", f"val({p}) refers to a missing world")
            if not self.frame.is_upset(m):
                raise ModelError("MODEL_VAL_NOT_CLOSED", f"val({p}) is not le-closed")

    @classmethod
    def build(cls, frame: Frame, val: Mapping[str, Iterable[str | int]]) -> "Model":
        return cls(frame, {p: frame.mask(ws) for p, ws in val.items()})

    @property
    def worlds(self) -> tuple[str, ...]:
        return self.frame.worlds

    def extension(self, p: str) -> set[str]:
        return set(self.frame.names(self.val.get(p, 0)))


# ---------------------------------------------------------------------------
# Frame classes

class Confluence(enum.Enum):
    FORWARD = "f"
    BACKWARD = "b"
    DOWNWARD = "d"
    UPWARD = "u"


_ORDER = (Confluence.FORWARD, Confluence.BACKWARD, Confluence.DOWNWARD, Confluence.UPWARD)


@dataclass(frozen=True)
class FrameClass:
    requirements: frozenset

    @property
    def name(self) -> str:
        if not self.requirements:
            return "all"
        return "".join(c.value for c in _ORDER if c in self.requirements) + "c"

    @classmethod
    def parse(cls, name: str) -> "FrameClass":
        """``"all"``, ``"fc"``, ``"fdc"``, ``"fduc"``, ..."""
        if name == "all":
            return cls(frozenset())
        if not name.endswith("c") or len(name) < 2:
            raise ValueError(f"unknown frame class {name!r}")
        by_letter = {c.value: c for c in Confluence}
        try:
            return cls(frozenset(by_letter[ch] for ch in name[:-1]))
        except KeyError:
            raise ValueError(f"unknown frame class {name!r}") from None

    def __str__(self):
        return "C_" + self.name


C_ALL = FrameClass(frozenset())
C_FC = FrameClass(frozenset({Confluence.FORWARD}))
C_BC = FrameClass(frozenset({Confluence.BACKWARD}))
C_DC = FrameClass(frozenset({Confluence.DOWNWARD}))
C_UC = FrameClass(frozenset({Confluence.UPWARD}))
C_FDC = FrameClass(frozenset({Confluence.FORWARD, Confluence.DOWNWARD}))
C_FUC = FrameClass(frozenset({Confluence.FORWARD, Confluence.UPWARD}))
C_FDUC = FrameClass(frozenset({Confluence.FORWARD, Confluence.DOWNWARD, Confluence.UPWARD}))


class ClassCheck(NamedTuple):
    """Result of a frame class check.  ``witness`` is the violating
    ``(s, t, u)`` triple, named as in the violated condition."""
    ok: bool
    confluence: Confluence | None = None
    witness: tuple[str, str, str] | None = None

    def __bool__(self):
        return self.ok


def _forward_violation(f: Frame):
    # t <= s and t R u  =>  s R v and u <= v for some v
    for t in range(f.size):
        for s in bits(f.up[t]):
            for u in bits(f.r[t]):
                if not f.r[s] & f.up[u]:
                    return s, t, u
    return None


def _backward_violation(f: Frame):
    # s R t and t <= u  =>  s <= v and v R u for some v
    for s in range(f.size):
        for t in bits(f.r[s]):
            for u in bits(f.up[t]):
                if not f.up[s] & f.rpred[u]:
                    return s, t, u
    return None


def _downward_violation(f: Frame):
    # s <= t and t R u  =>  s R v and v <= u for some v
    for s in range(f.size):
        for t in bits(f.up[s]):
            for u in bits(f.r[t]):
                if not f.r[s] & f.down[u]:
                    return s, t, u
    return None


def _upward_violation(f: Frame):
    # s R t and u <= t  =>  v <= s and v R u for some v
    for s in range(f.size):
        for t in bits(f.r[s]):
            for u in bits(f.down[t]):
                if not f.down[s] & f.rpred[u]:
                    return s, t, u
    return None


_CHECKS = {
    Confluence.FORWARD: _forward_violation,
    Confluence.BACKWARD: _backward_violation,
    Confluence.DOWNWARD: _downward_violation,
    Confluence.UPWARD: _upward_violation,
}


def frame_class_check(f: Frame, c: FrameClass) -> ClassCheck:
    for conf in _ORDER:
        if conf in c.requirements:
            v = _CHECKS[conf](f)
            if v is not None:
                return ClassCheck(False, conf, tuple(f.worlds[i] for i in v))
    return ClassCheck(True)


# ---------------------------------------------------------------------------
# Satisfaction

class Semantics(enum.Enum):
    """Readings of the diamond.  All other connectives are shared."""
    STANDARD = "std"
    FISCHER_SERVI = "fs"
    WIJESEKERA = "w"


def _box(f: Frame, a: int) -> int:
    ok = 0
    for t in range(f.size):
        if not f.r[t] & ~a:
            ok |= 1 << t
    out = 0
    for s in range(f.size):
        if not f.up[s] & ~ok:
            out |= 1 << s
    return out


def _dia(f: Frame, a: int, sem: Semantics) -> int:
    hit = 0
    for t in range(f.size):
        if f.r[t] & a:
            hit |= 1 << t
    if sem is Semantics.FISCHER_SERVI:
        return hit
    out = 0
    if sem is Semantics.STANDARD:
        for s in range(f.size):
            if f.down[s] & hit:
                out |= 1 << s
    else:
        for s in range(f.size):
            if not f.up[s] & ~hit:
                out |= 1 << s
    return out


def _impl(f: Frame, a: int, b: int) -> int:
    bad = a & ~b
    out = 0
    for s in range(f.size):
        if not f.up[s] & bad:
            out |= 1 << s
    return out


def _eval(f: Frame, val: Mapping[str, int], phi: Formula, sem: Semantics, memo: dict) -> int:
    hit = memo.get(phi)
    if hit is not None:
        return hit
    t = type(phi)
    if t is Atom:
        out = val.get(phi.name, 0)
    elif t is Top:
        out = f.full
    elif t is Bot:
        out = 0
    elif t is And:
        out = _eval(f, val, phi.left, sem, memo) & _eval(f, val, phi.right, sem, memo)
    elif t is Or:
        out = _eval(f, val, phi.left, sem, memo) | _eval(f, val, phi.right, sem, memo)
    elif t is Impl:
        out = _impl(f, _eval(f, val, phi.left, sem, memo), _eval(f, val, phi.right, sem, memo))
    elif t is Box:
        out = _box(f, _eval(f, val, phi.body, sem, memo))
    elif t is Dia:
        out = _dia(f, _eval(f, val, phi.body, sem, memo), sem)
    else:
        raise TypeError(f"not a formula: {phi!r}")
    memo[phi] = out
    return out


def truth_set(m: Model, phi: Formula, sem: Semantics = Semantics.STANDARD) -> int:
    """Mask of the worlds of ``m`` satisfying ``phi``."""
    memo = m._cache.setdefault(sem, {})
    return _eval(m.frame, m.val, phi, sem, memo)


def satisfies(m: Model, w: str | int, phi: Formula,
              sem: Semantics = Semantics.STANDARD) -> bool:
    return bool(truth_set(m, phi, sem) >> m.frame.index(w) & 1)


def true_in_model(m: Model, phi: Formula) -> bool:
    return truth_set(m, phi) == m.frame.full


class Validity(NamedTuple):
    """Validity verdict; on failure carries a countervaluation and world."""
    valid: bool
    valuation: dict | None = None
    world: str | None = None

    def __bool__(self):
        return self.valid


# Batch evaluation.  Each lane is one (relation, valuation) pair over a fixed
# preorder; a lane holds a world mask in a uint64.

_BATCH_MAX_WORLDS = 64
_BATCH_MAX_LANES = 1 << 18


class _Batch(NamedTuple):
    n: int
    up: tuple            # np.uint64 per world
    down: tuple
    r: tuple             # np.uint64 or lane array per world
    lanes: int


def _lanes(bools, s: int):
    return bools.astype(np.uint64) << np.uint64(s)


def _all_within(b: _Batch, bad, rows) -> np.ndarray:
    """Mask of worlds ``s`` whose row misses ``bad`` entirely, per lane."""
    out = np.zeros(b.lanes, dtype=np.uint64)
    for s in range(b.n):
        out |= _lanes((bad & rows[s]) == 0, s)
    return out


def _meets(b: _Batch, good, rows) -> np.ndarray:
    out = np.zeros(b.lanes, dtype=np.uint64)
    for s in range(b.n):
        out |= _lanes((good & rows[s]) != 0, s)
    return out


def _eval_batch(b: _Batch, val: Mapping[str, np.ndarray], phi: Formula,
                sem: Semantics, memo: dict) -> np.ndarray:
    hit = memo.get(phi)
    if hit is not None:
        return hit
    t = type(phi)
    if t is Atom:
        out = val.get(phi.name)
        if out is None:
            out = np.zeros(b.lanes, dtype=np.uint64)
    elif t is Top:
        out = np.full(b.lanes, (1 << b.n) - 1, dtype=np.uint64)
    elif t is Bot:
        out = np.zeros(b.lanes, dtype=np.uint64)
    elif t is And:
        out = _eval_batch(b, val, phi.left, sem, memo) & _eval_batch(b, val, phi.right, sem, memo)
    elif t is Or:
        out = _eval_batch(b, val, phi.left, sem, memo) | _eval_batch(b, val, phi.right, sem, memo)
    elif t is Impl:
        bad = _eval_batch(b, val, phi.left, sem, memo) & ~_eval_batch(b, val, phi.right, sem, memo)
        out = _all_within(b, bad, b.up)
    elif t is Box:
        ok = _all_within(b, ~_eval_batch(b, val, phi.body, sem, memo), b.r)
        out = _all_within(b, ~ok, b.up)
    elif t is Dia:
        reach = _meets(b, _eval_batch(b, val, phi.body, sem, memo), b.r)
        if sem is Semantics.FISCHER_SERVI:
            out = reach
        elif sem is Semantics.STANDARD:
            out = _meets(b, reach, b.down)
        else:
            out = _all_within(b, ~reach, b.up)
    else:
        raise TypeError(f"not a formula: {phi!r}")
    memo[phi] = out
    return out


def valuation_lanes(ups: Sequence[int], atoms: Sequence[str]) -> dict[str, np.ndarray]:
    """Lane arrays enumerating ``itertools.product(ups, repeat=len(atoms))``
    in order, one array per atom."""
    if not atoms:
        return {}
    arr = np.asarray(ups, dtype=np.uint64)
    grids = np.meshgrid(*([arr] * len(atoms)), indexing="ij")
    return {p: g.ravel() for p, g in zip(atoms, grids)}


def first_failure_over(up: Sequence[int], relations: Sequence[Sequence[int]], phi: Formula,
                       atoms: Sequence[str], ups: Sequence[int],
                       sem: Semantics = Semantics.STANDARD,
                       lanes: Mapping[str, np.ndarray] | None = None) -> tuple[int, int, int] | None:
    """First failure of ``phi`` over several relations sharing the preorder
    ``up``, as ``(relation index, valuation index, world)``.

    Relations are tried in the given order and valuations in the order of
    ``itertools.product(ups, repeat=len(atoms))``; lowest world first.
    """
    n = len(up)
    if not relations:
        return None
    nval = len(ups) ** len(atoms)
    if n > _BATCH_MAX_WORLDS or nval > _BATCH_MAX_LANES:
        for i, r in enumerate(relations):
            f = _frame_unchecked(default_names(n), tuple(up), tuple(r))
            for k, combo in enumerate(itertools.product(ups, repeat=len(atoms))):
                got = _eval(f, dict(zip(atoms, combo)), phi, sem, {})
                if got != f.full:
                    return i, k, next(bits(f.full & ~got))
        return None
    if lanes is None:
        lanes = valuation_lanes(ups, atoms)
    up_rows = tuple(np.uint64(x) for x in up)
    down_rows = tuple(np.uint64(x) for x in _transpose(n, up))
    full = np.uint64((1 << n) - 1)
    per_chunk = max(1, _BATCH_MAX_LANES // nval)
    for start in range(0, len(relations), per_chunk):
        chunk = np.asarray(relations[start:start + per_chunk], dtype=np.uint64).reshape(-1, n)
        m = chunk.shape[0]
        r_rows = tuple(np.repeat(chunk[:, w], nval) for w in range(n))
        val = {p: np.tile(v, m) for p, v in lanes.items()}
        got = _eval_batch(_Batch(n, up_rows, down_rows, r_rows, m * nval), val, phi, sem, {})
        bad = np.flatnonzero(got != full)
        if bad.size:
            lane = int(bad[0])
            rel, k = divmod(lane, nval)
            return start + rel, k, next(bits(int(full) & ~int(got[lane])))
    return None


def first_failure(f: Frame, phi: Formula, atoms: Sequence[str], ups: Sequence[int],
                  lanes: Mapping[str, np.ndarray] | None = None,
                  sem: Semantics = Semantics.STANDARD) -> tuple[int, int] | None:
    """First ``(valuation index, world)`` in canonical order at which ``phi``
    fails on ``f``, the index counting ``itertools.product(ups, repeat=len(atoms))``."""
    hit = first_failure_over(f.up, [f.r], phi, atoms, ups, sem, lanes)
    return None if hit is None else hit[1:]


def valuation_at(ups: Sequence[int], atoms: Sequence[str], k: int) -> dict[str, int]:
    """The ``k``-th valuation of ``itertools.product(ups, repeat=len(atoms))``."""
    out = {}
    for p in reversed(atoms):
        k, digit = divmod(k, len(ups))
        out[p] = ups[digit]
    return dict(sorted(out.items()))


def valid_in_frame(f: Frame, phi: Formula,
                   sem: Semantics = Semantics.STANDARD) -> Validity:
    """Check ``phi`` under every up-closed valuation of its atoms."""
    atoms = atoms_of(phi)
    ups = upsets(f)
    hit = first_failure(f, phi, atoms, ups, sem=sem)
    if hit is None:
        return Validity(True)
    k, w = hit
    val = valuation_at(ups, atoms, k)
    return Validity(False, {p: f.names(m) for p, m in val.items()}, f.worlds[w])


# ---------------------------------------------------------------------------
# Enumeration

def _spread_positions(n: int) -> list[int]:
    return [i * n + j for i in range(n) for j in range(n) if i != j]


@lru_cache(maxsize=None)
def enumerate_preorders(n: int) -> tuple[tuple[int, ...], ...]:
    """All preorders on ``n`` labelled points as up-set rows, ordered by the
    integer value of their row-major adjacency-matrix encoding."""
    if n < 1:
        raise ValueError("size must be at least 1")
    positions = _spread_positions(n)
    diag = sum(1 << (i * n + i) for i in range(n))
    row_mask = (1 << n) - 1
    out = []
    for x in range(1 << len(positions)):
        code = diag
        for k, pos in enumerate(positions):
            if x >> k & 1:
                code |= 1 << pos
        rows = tuple((code >> (i * n)) & row_mask for i in range(n))
        if _is_preorder(rows):
            out.append(rows)
    return tuple(out)


def _frame_unchecked(worlds: tuple[str, ...], up: tuple[int, ...], r: tuple[int, ...]) -> Frame:
    f = object.__new__(Frame)
    object.__setattr__(f, "worlds", worlds)
    object.__setattr__(f, "up", up)
    object.__setattr__(f, "r", r)
    object.__setattr__(f, "down", _transpose(len(worlds), up))
    object.__setattr__(f, "rpred", _transpose(len(worlds), r))
    return f


def default_names(n: int) -> tuple[str, ...]:
    return tuple(f"w{i}" for i in range(n))


@lru_cache(maxsize=1024)
def class_relations(up: tuple[int, ...], c: FrameClass = C_ALL) -> tuple[tuple[int, ...], ...]:
    """Relations ``r`` (as rows, in encoding order) making ``(up, r)`` a frame
    of class ``c``."""
    size = len(up)
    names = default_names(size)
    row_mask = (1 << size) - 1
    out = []
    for code in range(1 << (size * size)):
        r = tuple((code >> (i * size)) & row_mask for i in range(size))
        if frame_class_check(_frame_unchecked(names, up, r), c):
            out.append(r)
    return tuple(out)


def enumerate_frames(size: int, c: FrameClass = C_ALL) -> Iterator[Frame]:
    """Every labelled frame on ``w0 .. w{size-1}`` in class ``c``.

    Order: preorders in encoding order, then relations in encoding order.
    """
    names = default_names(size)
    for up in enumerate_preorders(size):
        for r in class_relations(up, c):
            yield _frame_unchecked(names, up, r)


def upsets(f: Frame) -> list[int]:
    """All up-closed world masks of ``f`` in increasing mask order."""
    return [m for m in range(1 << f.size) if f.is_upset(m)]


def enumerate_valuations(f: Frame, atoms: Sequence[str]) -> Iterator[dict[str, int]]:
    ups = upsets(f)
    for combo in itertools.product(ups, repeat=len(atoms)):
        yield dict(zip(atoms, combo))


# ---------------------------------------------------------------------------
# Random models

def _force_class(up: Sequence[int], r: list[int], c: FrameClass) -> list[int]:
    """Grow ``r`` until the frame lies in ``c``.

    Every confluence violation ``(s, t, u)`` is cured by adding ``s r u``
    (``u`` itself is a valid witness for each of the four conditions), so
    iterating to a fixpoint always terminates inside the class.
    """
    n = len(up)
    while True:
        f = _frame_unchecked(default_names(n), tuple(up), tuple(r))
        bad = None
        for conf in _ORDER:
            if conf in c.requirements:
                bad = _CHECKS[conf](f)
                if bad is not None:
                    break
        if bad is None:
            return r
        s, _, u = bad
        r[s] |= 1 << u


def random_frame(rng: random.Random, size: int, c: FrameClass = C_ALL,
                 le_density: float | None = None, r_density: float | None = None) -> Frame:
    if size < 1:
        raise ValueError("size must be at least 1")
    le_density = rng.uniform(0.0, 0.5) if le_density is None else le_density
    r_density = rng.uniform(0.05, 0.5) if r_density is None else r_density
    rows = [0] * size
    for i in range(size):
        for j in range(size):
            if i != j and rng.random() < le_density:
                rows[i] |= 1 << j
    up = _close(size, rows)
    r = [0] * size
    for i in range(size):
        for j in range(size):
            if rng.random() < r_density:
                r[i] |= 1 << j
    r = _force_class(up, r, c)
    return Frame(default_names(size), tuple(up), tuple(r))


def random_model(seed: int, size: int, c: FrameClass = C_ALL,
                 atoms: Sequence[str] = ("p",), retries: int = 100) -> Model:
    """Deterministic pseudo-random model in class ``c``."""
    rng = random.Random(seed)
    for _ in range(retries):
        f = random_frame(rng, size, c)
        if frame_class_check(f, c):
            break
    else:
        raise RuntimeError(f"random_model: no frame in {c} after {retries} tries (seed {seed})")
    val = {}
    for p in atoms:
        raw = 0
        for i in range(size):
            if rng.random() < 0.4:
                raw |= 1 << i
        val[p] = f.upclose(raw)
    return Model(f, val)


# ---------------------------------------------------------------------------
# Cluster quotient

def cluster_quotient(m: Model) -> tuple[Model, list[int]]:
    """Collapse each ``le``-cluster (worlds above and below each other) to its
    lowest-index member.

    Returns the quotient model and the map from old to new world indices.  The
    quotient satisfies exactly the same formulas at corresponding worlds and
    stays in every confluence class the original belongs to.
    """
    f = m.frame
    reps: list[int] = []
    old_to_new = [0] * f.size
    for i in range(f.size):
        cluster = f.up[i] & f.down[i]
        lowest = (cluster & -cluster).bit_length() - 1
        if lowest == i:
            old_to_new[i] = len(reps)
            reps.append(i)
        else:
            old_to_new[i] = old_to_new[lowest]
    if len(reps) == f.size:
        return m, old_to_new
    n = len(reps)

    def image(mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= 1 << old_to_new[i]
        return out

    up = [0] * n
    r = [0] * n
    for i in range(f.size):
        up[old_to_new[i]] |= image(f.up[i])
        r[old_to_new[i]] |= image(f.r[i])
    frame = Frame(tuple(f.worlds[i] for i in reps), tuple(up), tuple(r))
    return Model(frame, {p: image(v) for p, v in m.val.items()}), old_to_new


# ---------------------------------------------------------------------------
# File formats

def model_to_json(m: Model, provenance: Mapping[str, object] | None = None) -> dict:
    """Model as a JSON-ready dict; ``le`` lists the non-reflexive pairs."""
    f = m.frame
    out = {
        "worlds": list(f.worlds),
        "le": [[f.worlds[i], f.worlds[j]] for i, j in f.le_pairs() if i != j],
        "r": [[f.worlds[i], f.worlds[j]] for i, j in f.r_pairs()],
        "val": {p: f.names(v) for p, v in m.val.items()},
    }
    if provenance is not None:
        out["provenance"] = dict(provenance)
    return out


def _pairs(data, key):
    raw = data.get(key, [])
    if not isinstance(raw, list):
        raise ModelError("MODEL_BAD_FORMAT", f"{key!r} must be a list of pairs")
    out = []
    for pair in raw:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(w, str) for w in pair)):
            raise ModelError("MODEL_BAD_FORMAT", f"bad pair in {key!r}: {pair!r}")
        out.append((pair[0], pair[1]))
    return out


def frame_from_json(data: Mapping) -> Frame:
    if not isinstance(data, Mapping) or not isinstance(data.get("worlds"), list):
        raise ModelError("MODEL_BAD_FORMAT", "expected an object with a 'worlds' list")
    if not all(isinstance(w, str) for w in data["worlds"]):
        raise ModelError("MODEL_BAD_FORMAT", "world names must be strings")
    return Frame.build(data["worlds"], _pairs(data, "le"), _pairs(data, "r"))


def model_from_json(data: Mapping) -> Model:
    """Load a model dict: ``le`` is closed, ``val`` must be up-closed."""
    frame = frame_from_json(data)
    raw = data.get("val", {})
    if not isinstance(raw, Mapping):
        raise ModelError("MODEL_BAD_FORMAT", "'val' must be an object")
    val = {}
    for p, ws in raw.items():
        if not isinstance(ws, list):
            raise ModelError("MODEL_BAD_FORMAT", f"val({p}) must be a list")
        val[p] = frame.mask(ws)
    return Model(frame, val)


def load_model(path: str, frame_only: bool = False) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ModelError("MODEL_IO", str(e)) from None
    except json.JSONDecodeError as e:
        raise ModelError("MODEL_BAD_FORMAT", str(e)) from None
    if frame_only:
        return Model(frame_from_json(data), {})
    return model_from_json(data)


def _reduced_le(f: Frame) -> list[tuple[int, int]]:
    out = []
    for i, j in f.le_pairs():
        if i == j:
            continue
        outside = ~(f.up[i] & f.down[i]) & ~(f.up[j] & f.down[j])
        if not (f.up[i] & f.down[j] & outside):
            out.append((i, j))
    return out


def to_dot(m: Model, name: str = "model") -> str:
    """Graphviz rendering: dashed ``le`` (transitively reduced), solid ``r``."""
    f = m.frame
    lines = [f"digraph {name} {{"]
    for i, w in enumerate(f.worlds):
        props = [p for p, v in m.val.items() if v >> i & 1]
        label = w + ("\\n" + ",".join(props) if props else "")
        lines.append(f'  "{w}" [label="{label}"];')
    for i, j in _reduced_le(f):
        lines.append(f'  "{f.worlds[i]}" -> "{f.worlds[j]}" [style=dashed];')
    for i, j in f.r_pairs():
        lines.append(f'  "{f.worlds[i]}" -> "{f.worlds[j]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
