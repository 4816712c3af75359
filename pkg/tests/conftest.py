import hypothesis.strategies as st
from hypothesis import settings

from imlbench.formula import And, Atom, Bot, Box, Dia, Impl, Or, Top
from imlbench.kripke import C_ALL, C_FC, C_FDC, random_model

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ATOMS = ("p", "q", "r")


def formulas(atoms=ATOMS, max_leaves=8):
    leaves = st.one_of(st.sampled_from([Atom(a) for a in atoms]), st.just(Top()), st.just(Bot()))

    def extend(children):
        return st.one_of(
            st.builds(Impl, children, children),
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(Box, children),
            st.builds(Dia, children),
        )
    return st.recursive(leaves, extend, max_leaves=max_leaves)


def models(classes=(C_ALL, C_FC, C_FDC), max_size=4, atoms=ATOMS):
    return st.builds(
        lambda seed, size, c: random_model(seed, size, c, list(atoms)),
        st.integers(0, 10**6), st.integers(1, max_size), st.sampled_from(classes),
    )
