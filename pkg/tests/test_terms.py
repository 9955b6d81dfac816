from __future__ import annotations

import pytest

from gnfsys.baseops import default_decl
from gnfsys.errors import DomainError, StrippingError, TermSyntaxError, UnboundVariable
from gnfsys.hwm import Atom, parse_element
from gnfsys.meter import Meter
from gnfsys.terms import (
    App,
    Binding,
    Const,
    Lit,
    Signature,
    VariadicList,
    XVar,
    YVar,
    eval_ground,
    expand,
    expand_calls,
    free_vars,
    parse_term,
    render_term,
    split_vars,
    strip_recursive,
    substitute,
    term_size,
)

OPS = {name: default_decl(name) for name in ("list", "conc", "cons", "head", "tail", "rev")}
E = parse_element


def test_parse_examples():
    assert parse_term("conc(x1,x2)") == App("conc", (XVar(1), XVar(2)))
    assert parse_term("f1(x2)") == App("f1", (XVar(2),))
    assert parse_term("listof(y[i], desc)") == VariadicList(YVar(None), True)
    assert parse_term("a") == Const("a")
    assert parse_term("<a,<>>") == Lit(E("<a,<>>"))


@pytest.mark.parametrize("text", [
    "conc(x1,x2)", "listof(f1(x[i]),desc)", "list(a,<b>,x3)", "head(tail(x1))", "list()",
])
def test_render_roundtrip(text):
    assert render_term(parse_term(text)) == text


def test_signature_resolution():
    sig = Signature({"conc": 2, "list": -1}, 1)
    assert parse_term("list(x1,x2,x3)", sig) == App("list", (XVar(1), XVar(2), XVar(3)))
    with pytest.raises(TermSyntaxError, match="expects 2"):
        parse_term("conc(x1)", sig)
    with pytest.raises(TermSyntaxError, match="unknown symbol"):
        parse_term("f2(x1)", sig)
    with pytest.raises(TermSyntaxError, match="unknown symbol"):
        parse_term("rev(x1)", sig)


@pytest.mark.parametrize("text", ["conc(x1", "x[i]", "listof(listof(x[i],asc),asc)", "listof(x[i],up)", "x1 x2"])
def test_parse_errors(text):
    with pytest.raises(TermSyntaxError):
        parse_term(text)


def test_free_vars():
    assert free_vars(parse_term("conc(x1,x1)")) == {XVar(1)}
    assert free_vars(parse_term("listof(y[i],desc)"), arity=3) == {YVar(1), YVar(2), YVar(3)}
    assert free_vars(Const("a")) == frozenset()


def test_split_vars():
    assert split_vars(App("conc", (XVar(1), YVar(2)))) == ({XVar(1)}, {YVar(2)})
    assert split_vars(Const("a")) == (frozenset(), frozenset())
    assert split_vars(App("head", (YVar(1),))) == (frozenset(), {YVar(1)})


def test_strip_examples():
    stripped, calls = strip_recursive(parse_term("conc(f1(x2),x3)"))
    assert stripped == App("conc", (YVar(2), XVar(3)))
    assert calls.entries == {2: (1, 2)}
    assert strip_recursive(Const("a"))[0] == Const("a")
    assert len(strip_recursive(Const("a"))[1]) == 0


def test_strip_rejects_nested_calls():
    with pytest.raises(StrippingError) as err:
        strip_recursive(parse_term("f1(f1(x1))"))
    assert err.value.condition == "C1"
    with pytest.raises(StrippingError) as err:
        strip_recursive(parse_term("f1(conc(x1,x2))"))
    assert err.value.condition == "C1"


def test_strip_rejects_shared_variable():
    with pytest.raises(StrippingError) as err:
        strip_recursive(parse_term("conc(f1(x1),f2(x1))"))
    assert err.value.condition == "C2"
    # the same symbol twice is not a C2 problem
    stripped, _ = strip_recursive(parse_term("conc(f1(x1),f1(x1))"))
    assert stripped == App("conc", (YVar(1), YVar(1)))


def test_strip_variadic():
    stripped, calls = strip_recursive(parse_term("listof(f1(x[i]),desc)"))
    assert stripped == VariadicList(YVar(None), True)
    assert expand_calls(calls, 3).entries == {1: (1, 1), 2: (1, 2), 3: (1, 3)}
    assert expand(stripped, 3) == App("list", (YVar(3), YVar(2), YVar(1)))


def test_substitute_examples():
    b = Binding({1: E("<a>")}, {1: E("<b>")})
    ground = substitute(App("conc", (XVar(1), YVar(1))), b)
    assert render_term(ground) == "conc(<a>,<b>)"
    assert substitute(Const("a"), b) == Const("a")
    b3 = Binding({}, {1: Atom("a"), 2: Atom("b"), 3: Atom("c")})
    ground = substitute(VariadicList(YVar(None), True), b3)
    assert eval_ground(ground, OPS) == E("<c,b,a>")


def test_substitute_meters_ground_size_and_rejects_unbound():
    m = Meter()
    substitute(App("conc", (XVar(1), XVar(1))), Binding({1: E("<a,b>")}), m)
    assert m.steps == term_size(parse_term("conc(<a,b>,<a,b>)")) == 7
    with pytest.raises(UnboundVariable):
        substitute(XVar(2), Binding({1: E("a")}))


def test_eval_ground_examples():
    assert eval_ground(parse_term("conc(<a>,<b>)"), OPS) == E("<a,b>")
    assert eval_ground(parse_term("head(<a,b>)"), OPS) == Atom("a")
    with pytest.raises(DomainError):
        eval_ground(parse_term("head(<>)"), OPS)


def test_eval_ground_charges_declared_costs():
    m = Meter()
    eval_ground(parse_term("conc(list(a),<b>)"), OPS, m)
    # list(a): 1 + 1; conc(<a>,<b>): 1 + 4
    assert m.steps == 2 + 5
    assert m.by_kind["base"] == 7
