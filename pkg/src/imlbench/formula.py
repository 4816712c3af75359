"""Formulas of the modal intuitionistic language.

Formulas are immutable trees built from atoms, the constants ``true`` and
``false``, the binary connectives ``->``, ``&``, ``|`` and the unary modal
operators ``[]`` (box) and ``<>`` (diamond).  Negation is not a constructor:
``~A`` is read as ``A -> false``.

Besides parsing and printing, this module provides the closed-set machinery
used by the saturation engine: :func:`closure_of` computes the least closed set
containing a formula, :func:`modal_step` projects a set onto the bodies of its
modal members and :func:`closure_iterate` iterates that projection.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

__all__ = [
    "Formula", "Atom", "Top", "Bot", "Impl", "And", "Or", "Box", "Dia",
    "TOP", "BOT", "Not", "ParseError", "ClosureSet",
    "parse", "render", "formula_length", "substitute", "atoms_of",
    "closure_of", "modal_step", "closure_iterate", "is_closed",
    "formula_key", "sort_formulas", "modal_depth", "depth",
]


class _Node:
    """Shared behaviour for formula nodes: cached hash and text form."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)  # type: ignore[arg-type]

    def __reduce__(self):
        # rebuild through the constructor so the cached hash matches the
        # receiving process's string hashing
        return type(self), tuple(getattr(self, f) for f in self._fields)


def _cache_hash(obj, *parts) -> None:
    object.__setattr__(obj, "_hash", hash((type(obj).__name__,) + parts))


@dataclass(frozen=True, eq=True, repr=False)
class Atom(_Node):
    _fields = ("name",)
    name: str
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _cache_hash(self, self.name)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Top(_Node):
    _fields = ()
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _cache_hash(self)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Top()"


@dataclass(frozen=True, eq=True, repr=False)
class Bot(_Node):
    _fields = ()
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _cache_hash(self)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Bot()"


@dataclass(frozen=True, eq=True, repr=False)
class _Binary(_Node):
    _fields = ("left", "right")
    left: "Formula"
    right: "Formula"
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _cache_hash(self, self.left, self.right)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class _Unary(_Node):
    _fields = ("body",)
    body: "Formula"
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _cache_hash(self, self.body)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}({self.body!r})"


class Impl(_Binary):
    __slots__ = ()


class And(_Binary):
    __slots__ = ()


class Or(_Binary):
    __slots__ = ()


class Box(_Unary):
    __slots__ = ()


class Dia(_Unary):
    __slots__ = ()


Formula = Union[Atom, Top, Bot, Impl, And, Or, Box, Dia]

TOP = Top()
BOT = Bot()


def Not(f: Formula) -> Formula:
    """``~f``, i.e. ``f -> false``."""
    return Impl(f, BOT)


# ---------------------------------------------------------------------------
# Parsing

class ParseError(ValueError):
    """Syntax error carrying the byte offset of the offending token and the
    set of tokens that would have been accepted there."""

    def __init__(self, text: str, pos: int, expected: Iterable[str], found: str):
        self.text = text
        self.column = pos
        self.offset = len(text[:pos].encode("utf-8"))
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__(
            f"syntax error at byte {self.offset}: found {found}, expected one of: {exp}")


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ident>[a-z][a-zA-Z0-9_]*)
  | (?P<op>->|\[\]|<>|[~&|()])
  | (?P<uni>[⊤⊥¬∧∨→□◇])
""", re.VERBOSE)

_UNICODE = {"⊤": "true", "⊥": "false", "¬": "~", "∧": "&", "∨": "|",
            "→": "->", "□": "[]", "◇": "<>"}

_ATOM_START = frozenset({"IDENT", "true", "false", "(", "~", "[]", "<>"})


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(text, pos, _ATOM_START | {"->", "&", "|", ")"},
                             repr(text[pos]))
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "ident":
            if lexeme in ("true", "false"):
                tokens.append((lexeme, lexeme, pos))
            else:
                tokens.append(("IDENT", lexeme, pos))
        elif kind == "op":
            tokens.append((lexeme, lexeme, pos))
        elif kind == "uni":
            canon = _UNICODE[lexeme]
            tokens.append((canon, lexeme, pos))
        pos = m.end()
    tokens.append(("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, lexeme, pos = self.tokens[self.i]
        found = "end of input" if kind == "EOF" else repr(lexeme)
        raise ParseError(self.text, pos, expected, found)

    def parse(self) -> Formula:
        f = self.impl()
        if self.peek() != "EOF":
            self.fail({"->", "&", "|", "EOF"})
        return f

    # impl := disj ('->' impl)?
    def impl(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.advance()
            return Impl(left, self.impl())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.peek() == "|":
            self.advance()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.peek() == "&":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind = self.peek()
        if kind == "~":
            self.advance()
            return Impl(self.unary(), BOT)
        if kind == "[]":
            self.advance()
            return Box(self.unary())
        if kind == "<>":
            self.advance()
            return Dia(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind = self.peek()
        if kind == "IDENT":
            return Atom(self.advance()[1])
        if kind == "true":
            self.advance()
            return TOP
        if kind == "false":
            self.advance()
            return BOT
        if kind == "(":
            self.advance()
            f = self.impl()
            if self.peek() != ")":
                self.fail({")", "->", "&", "|"})
            self.advance()
            return f
        self.fail(_ATOM_START)


def parse(text: str) -> Formula:
    """Parse formula text.

    Precedence, tightest first: the unary operators ``~ [] <>``, then ``&``,
    then ``|``, then ``->`` which associates to the right.  ``&`` and ``|``
    associate to the left.  The Unicode symbols ``⊤ ⊥ ¬ ∧ ∨ → □ ◇`` are
    accepted as aliases.

    >>> parse("p -> q | r")
    Impl(Atom('p'), Or(Atom('q'), Atom('r')))
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC_IMPL, _PREC_OR, _PREC_AND, _PREC_UNARY = 1, 2, 3, 4


def _is_negation(f) -> bool:
    return type(f) is Impl and type(f.right) is Bot


def _prec(f) -> int:
    t = type(f)
    if t is Impl:
        return _PREC_UNARY if _is_negation(f) else _PREC_IMPL
    if t is Or:
        return _PREC_OR
    if t is And:
        return _PREC_AND
    return _PREC_UNARY


def _wrap(f, min_prec: int) -> str:
    s = render(f)
    return f"({s})" if _prec(f) < min_prec else s


def render(f: Formula) -> str:
    """Minimal-parentheses ASCII text for ``f``; ``parse(render(f)) == f``.

    ``A -> false`` is printed as ``~A``.
    """
    t = type(f)
    if t is Atom:
        return f.name
    if t is Top:
        return "true"
    if t is Bot:
        return "false"
    if t is Impl:
        if _is_negation(f):
            return "~" + _wrap(f.left, _PREC_UNARY)
        return f"{_wrap(f.left, _PREC_IMPL + 1)} -> {_wrap(f.right, _PREC_IMPL)}"
    if t is Or:
        return f"{_wrap(f.left, _PREC_OR)} | {_wrap(f.right, _PREC_OR + 1)}"
    if t is And:
        return f"{_wrap(f.left, _PREC_AND)} & {_wrap(f.right, _PREC_AND + 1)}"
    if t is Box:
        return "[]" + _wrap(f.body, _PREC_UNARY)
    if t is Dia:
        return "<>" + _wrap(f.body, _PREC_UNARY)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Measures and substitution

def formula_length(f: Formula) -> int:
    """Number of atom, constant and connective occurrences (no parentheses)."""
    if isinstance(f, _Binary):
        return 1 + formula_length(f.left) + formula_length(f.right)
    if isinstance(f, _Unary):
        return 1 + formula_length(f.body)
    return 1


def depth(f: Formula) -> int:
    if isinstance(f, _Binary):
        return 1 + max(depth(f.left), depth(f.right))
    if isinstance(f, _Unary):
        return 1 + depth(f.body)
    return 0


def modal_depth(f: Formula) -> int:
    if isinstance(f, _Binary):
        return max(modal_depth(f.left), modal_depth(f.right))
    if isinstance(f, _Unary):
        return 1 + modal_depth(f.body)
    return 0


def atoms_of(f: Formula) -> list[str]:
    """Atom names occurring in ``f``, sorted."""
    seen: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if type(g) is Atom:
            seen.add(g.name)
        elif isinstance(g, _Binary):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, _Unary):
            stack.append(g.body)
    return sorted(seen)


def substitute(f: Formula, binding: Mapping[str, Formula]) -> Formula:
    """Simultaneously replace every atom named in ``binding``.

    Images are inserted as-is; they are not themselves rewritten.
    """
    if not binding:
        return f
    t = type(f)
    if t is Atom:
        return binding.get(f.name, f)
    if isinstance(f, _Binary):
        return t(substitute(f.left, binding), substitute(f.right, binding))
    if isinstance(f, _Unary):
        return t(substitute(f.body, binding))
    return f


def formula_key(f: Formula) -> tuple[int, str]:
    """Canonical total order on formulas: by length, then by printed text."""
    return formula_length(f), render(f)


def sort_formulas(fs: Iterable[Formula]) -> list[Formula]:
    return sorted(fs, key=formula_key)


# ---------------------------------------------------------------------------
# Closed sets

def _children(f: Formula) -> tuple:
    if isinstance(f, _Binary):
        return f.left, f.right
    if isinstance(f, _Unary):
        return (f.body,)
    return ()


def _sigma(f: Formula) -> frozenset:
    out = {f}
    stack = [f]
    while stack:
        for c in _children(stack.pop()):
            if c not in out:
                out.add(c)
                stack.append(c)
    return frozenset(out)


def is_closed(g: Iterable[Formula]) -> bool:
    g = set(g)
    return all(c in g for f in g for c in _children(f))


@dataclass(frozen=True)
class ClosureSet:
    """A closed set of formulas lying inside ``closure_of(root)``.

    Iteration follows the canonical formula order so that anything derived
    from a closure set (procedure traces, printed output) is reproducible.
    """
    members: frozenset
    root: Formula

    def __iter__(self):
        return iter(sort_formulas(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, f) -> bool:
        return f in self.members

    def __str__(self) -> str:
        return "{" + ", ".join(render(f) for f in self) + "}"


def closure_of(a: Formula) -> ClosureSet:
    """The least closed set containing ``a``.

    Built by the structural recursion ``S(B op C) = {B op C} | S(B) | S(C)``,
    ``S([]B) = {[]B} | S(B)`` and so on; atoms and constants are singletons.
    """
    return ClosureSet(_sigma(a), a)


def modal_step(g: Iterable[Formula]) -> frozenset:
    """Union of the closures of ``B`` over all ``[]B`` and ``<>B`` in ``g``."""
    out: set = set()
    for f in g:
        if type(f) is Box or type(f) is Dia:
            out |= _sigma(f.body)
    return frozenset(out)


def closure_iterate(g: Iterable[Formula], alpha: int) -> frozenset:
    """``alpha``-fold application of :func:`modal_step` to ``g``."""
    if alpha < 0:
        raise ValueError("alpha must be a natural number")
    cur = frozenset(g.members if isinstance(g, ClosureSet) else g)
    for _ in range(alpha):
        if not cur:
            break
        cur = modal_step(cur)
    return cur
