"""Workbench for the intuitionistic modal logics FIK and LIK.

Modules: ``formula`` (syntax and closed sets), ``kripke`` (birelational
models), ``logic`` (axioms and rules as data), ``saturation`` (the clip
repair procedure), ``decide`` (bounded search and certificates) and ``cli``.
"""
from .formula import Formula, parse, render, closure_of
from .kripke import Frame, Model, Semantics, satisfies, frame_class_check
from .logic import LogicId
from .saturation import saturate, verify_truth_lemma
from .decide import SearchConfig, decide, verify_certificate

__version__ = "0.1.0"
