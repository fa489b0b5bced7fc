from pathlib import Path

import pytest
from hypothesis import strategies as st

from heq.terms import HOLE, Term, app

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

SYMBOLS = (("a", 0), ("b", 0), ("g", 1), ("f", 2))


def ground_terms(max_leaves: int = 6) -> st.SearchStrategy[Term]:
    leaves = st.sampled_from([app("a"), app("b")])
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.builds(lambda t: app("g", t), kids),
            st.builds(lambda s, t: app("f", s, t), kids, kids),
        ),
        max_leaves=max_leaves,
    )


def templates(max_leaves: int = 5) -> st.SearchStrategy[Term]:
    """Terms with at least one hole and no variables."""
    leaves = st.sampled_from([app("a"), app("b"), HOLE, HOLE])
    base = st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.builds(lambda t: app("g", t), kids),
            st.builds(lambda s, t: app("f", s, t), kids, kids),
        ),
        max_leaves=max_leaves,
    )
    return base.filter(lambda t: t.holes > 0)


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


def load(name: str) -> str:
    return (PROGRAMS / name).read_text()
