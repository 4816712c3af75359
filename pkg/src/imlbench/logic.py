"""Axiom schemata, inference rules and the logics FIK and LIK as data.

Schemata are formulas over the schematic atoms ``p``, ``q`` and ``r``.  The
logics carry the frame classes they are complete for, which is what the
decision pipeline searches over.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from .formula import Atom, Formula, atoms_of, parse, substitute, _Binary, _Unary
from .kripke import C_FC, C_FDC, C_FDUC, C_FUC, FrameClass

__all__ = [
    "AxiomSchema", "InferenceRule", "LogicId", "SchemaError", "SCHEMATA",
    "RULES", "axiom_schemata", "instantiate_schema", "check_rule_instance",
    "match_patterns",
]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class AxiomSchema:
    name: str
    pattern: Formula

    @property
    def letters(self) -> list[str]:
        return atoms_of(self.pattern)

    def __str__(self):
        return f"({self.name}) {self.pattern}"


@dataclass(frozen=True)
class InferenceRule:
    name: str
    premises: tuple[Formula, ...]
    conclusion: Formula

    def __str__(self):
        prem = ", ".join(str(p) for p in self.premises)
        return f"({self.name}) {prem} / {self.conclusion}"


def _schema(name: str, text: str) -> AxiomSchema:
    return AxiomSchema(name, parse(text))


SCHEMATA: dict[str, AxiomSchema] = {s.name: s for s in (
    _schema("D□", "[]p & []q -> [](p & q)"),
    _schema("D◇", "<>(p | q) -> <>p | <>q"),
    _schema("N□", "[]true"),
    _schema("N◇", "~<>false"),
    _schema("wCD", "[](p | q) -> (<>p -> []q) -> []q"),
    _schema("Af", "<>(p -> q) -> []p -> <>q"),
    _schema("Ab", "(<>p -> []q) -> [](p -> q)"),
    _schema("Ad", "[](p | q) -> <>p | []q"),
)}

RULES: dict[str, InferenceRule] = {r.name: r for r in (
    InferenceRule("MP", (parse("p"), parse("p -> q")), parse("q")),
    InferenceRule("R□", (parse("p -> q"),), parse("[]p -> []q")),
    InferenceRule("R◇", (parse("p -> q"),), parse("<>p -> <>q")),
    InferenceRule("RI", (parse("<>p -> q | [](p -> r)"),), parse("<>p -> q | <>r")),
)}

_CORE = ("D□", "D◇", "N□", "N◇", "wCD")


class LogicId(enum.Enum):
    FIK = "fik"
    LIK = "lik"

    @property
    def axiom_names(self) -> tuple[str, ...]:
        if self is LogicId.FIK:
            return _CORE + ("Af",)
        return _CORE + ("Af", "Ad")

    @property
    def frame_class(self) -> FrameClass:
        """Class the logic is complete for; countermodels are searched here."""
        return C_FC if self is LogicId.FIK else C_FDC

    @property
    def saturated_class(self) -> FrameClass:
        """Class of the finite models produced by saturation."""
        return C_FUC if self is LogicId.FIK else C_FDUC

    @classmethod
    def parse(cls, text: str) -> "LogicId":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown logic {text!r} (expected fik or lik)") from None

    def __str__(self):
        return self.name


def axiom_schemata(logic: LogicId) -> list[AxiomSchema]:
    return [SCHEMATA[n] for n in logic.axiom_names]


def instantiate_schema(s: AxiomSchema, binding: Mapping[str, Formula]) -> Formula:
    missing = [p for p in s.letters if p not in binding]
    if missing:
        raise SchemaError(f"{s.name}: no binding for {', '.join(missing)}")
    return substitute(s.pattern, binding)


def _match(pattern: Formula, target: Formula, binding: dict) -> bool:
    if type(pattern) is Atom:
        bound = binding.get(pattern.name)
        if bound is None:
            binding[pattern.name] = target
            return True
        return bound == target
    if type(pattern) is not type(target):
        return False
    if isinstance(pattern, _Binary):
        return _match(pattern.left, target.left, binding) and _match(pattern.right, target.right, binding)
    if isinstance(pattern, _Unary):
        return _match(pattern.body, target.body, binding)
    return True


def match_patterns(patterns: Sequence[Formula], targets: Sequence[Formula]) -> dict | None:
    """One substitution of the schematic atoms sending every pattern to its
    target, or ``None``."""
    if len(patterns) != len(targets):
        return None
    binding: dict = {}
    for pat, tgt in zip(patterns, targets):
        if not _match(pat, tgt, binding):
            return None
    return binding


def check_rule_instance(rule: InferenceRule, premises: Sequence[Formula],
                        conclusion: Formula) -> bool:
    return match_patterns(rule.premises + (rule.conclusion,),
                          tuple(premises) + (conclusion,)) is not None
