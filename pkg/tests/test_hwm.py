from __future__ import annotations

import pickle

import pytest
from hypothesis import given, strategies as st

from gnfsys.errors import ElementSyntaxError
from gnfsys.hwm import (
    EMPTY,
    FALSE,
    Alphabet,
    Atom,
    FList,
    components,
    flat_list,
    is_false,
    parse_element,
    rank,
    render_element,
    size,
    sort_key,
)

from conftest import oracle_parse, oracle_rank, oracle_render, oracle_size

ATOMS = st.sampled_from(["a", "b", "c"])
ELEMENTS = st.recursive(
    ATOMS.map(Atom) | st.just(EMPTY),
    lambda inner: st.lists(inner, max_size=4).map(FList),
    max_leaves=20,
)


def test_parse_examples():
    assert parse_element("a") == Atom("a")
    assert parse_element("<a,<b>>") == FList([Atom("a"), FList([Atom("b")])])
    assert parse_element("<>") == EMPTY
    assert parse_element(" < a , < > > ") == FList([Atom("a"), EMPTY])


def test_render_examples():
    assert render_element(Atom("a")) == "a"
    assert render_element(EMPTY) == "<>"
    assert render_element(FList([Atom("a"), Atom("b")])) == "<a,b>"


def test_size_and_rank_examples():
    assert size(Atom("a")) == 1
    assert size(EMPTY) == 1
    assert size(parse_element("<a,<b,c>>")) == 5
    assert rank(Atom("a")) == 0
    assert rank(parse_element("<a,b>")) == 1
    assert rank(parse_element("<<a>>")) == 2
    assert rank(EMPTY) == 1


def test_components():
    assert components(parse_element("<a,<>>")) == (Atom("a"), EMPTY)
    assert components(Atom("a")) == ()
    assert components(EMPTY) == ()


@pytest.mark.parametrize("text", ["", "<", "<a", "<a,>", "<,a>", "a b", "<a>>", "A", "<1>"])
def test_parse_errors(text):
    with pytest.raises(ElementSyntaxError):
        parse_element(text)


def test_unknown_atom_against_alphabet():
    alpha = Alphabet(["a", "b"])
    assert parse_element("<a,b>", alpha) == parse_element("<a,b>")
    with pytest.raises(ElementSyntaxError, match="unknown atom"):
        parse_element("<a,c>", alpha)


def test_alphabet_always_has_false():
    alpha = Alphabet(["a"])
    assert "false" in alpha
    assert alpha.user_names == ("a",)
    with pytest.raises(ValueError):
        Alphabet(["Bad"])


def test_atoms_are_interned_and_opaque():
    assert Atom("a") is Atom("a")
    assert is_false(FALSE) and not is_false(Atom("a"))
    assert bool(Atom("a"))
    with pytest.raises(TypeError):
        len(Atom("a"))
    with pytest.raises(TypeError):
        iter(Atom("a"))


def test_atoms_and_lists_never_compare_equal():
    assert Atom("a") != FList([Atom("a")])
    assert EMPTY != FALSE
    assert len({Atom("a"), FList([Atom("a")]), EMPTY}) == 3


def test_flat_list():
    assert render_element(flat_list(["a", "b"], 3)) == "<a,b,a>"


@given(ELEMENTS)
def test_roundtrip(e):
    assert parse_element(render_element(e)) == e


@given(ELEMENTS)
def test_size_rank_match_oracle(e):
    o = oracle_parse(render_element(e))
    assert e.size == oracle_size(o)
    assert e.rank == oracle_rank(o)
    assert oracle_render(o) == render_element(e)


@given(ELEMENTS)
def test_pickle_roundtrip(e):
    back = pickle.loads(pickle.dumps(e))
    assert back == e and back.size == e.size and back.rank == e.rank


@given(ELEMENTS, ELEMENTS)
def test_sort_key_is_consistent_with_equality(x, y):
    assert (sort_key(x) == sort_key(y)) == (x == y)
