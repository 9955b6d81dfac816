from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from gnfsys import EMPTY, FALSE, Atom, FList, parse_element, render_element
from gnfsys.errors import DomainError, NotAccepted, RuntimeViolation
from gnfsys.engine import Session, enumerate_universe, evaluate, evaluate_naive
from gnfsys.complexity import chain

from conftest import oracle_mirror, oracle_parse, oracle_render

E = parse_element
ELEMENTS = st.recursive(
    st.sampled_from([Atom("a"), Atom("b"), Atom("c"), EMPTY]),
    lambda inner: st.lists(inner, max_size=4).map(FList),
    max_leaves=15,
)


def oracle_alternate(e, depth=0):
    """f1 reverses its list, f2 keeps the order; they alternate by depth."""
    if isinstance(e, str):
        return e
    kids = [oracle_alternate(c, depth + 1) for c in e]
    return kids[::-1] if depth % 2 == 0 else kids


def oracle_mirror_steps(text: str, memo: bool) -> int:
    """Step count of the mirror system, from the cost model written out by hand."""
    seen: set[str] = set()

    def cost(e) -> int:
        key = oracle_render(e)
        n = _size(e)
        probe = (1 + n) if memo else 0
        if memo and key in seen:
            return probe
        insert = (1 + n) if memo else 0
        seen.add(key)
        if isinstance(e, str):
            return probe + (1 + n) + insert          # initial lookup hit
        k = len(e)
        s = sum(_size(c) for c in e)                 # mirror preserves sizes
        total = probe + (1 + n)                      # initial lookup miss
        total += 1 + 1 + (1 + 2 * k)                 # rule scanned, guard, emitted list(f1(x_k),...)
        total += sum(1 + cost(c) for c in e)         # dispatch + sub-call
        total += (1 + k) + (1 + s)                   # stripped size + ground size
        total += 1 + s                               # list base op
        return total + insert

    return cost(oracle_parse(text))


def _size(e) -> int:
    return 1 if isinstance(e, str) else 1 + sum(_size(c) for c in e)


def test_mirror_example(mirror):
    assert render_element(evaluate(mirror, 1, E("<a,<b,c>>")).result) == "<<c,b>,a>"
    assert evaluate(mirror, 1, E("a")).result == E("a")


@pytest.mark.parametrize("text", ["a", "<>", "<a,<b,c>>", "<<a,a>,<a,a>>", "<<<>>,<b>,c>"])
@pytest.mark.parametrize("memo", [True, False])
def test_mirror_steps_match_hand_oracle(mirror, text, memo):
    assert evaluate(mirror, 1, E(text), memo=memo).measurement.steps == oracle_mirror_steps(text, memo)


def test_step_examples(mirror):
    w = E("<a,<b,c>>")
    assert evaluate_naive(mirror, 1, w).measurement.steps == 56
    assert evaluate(mirror, 1, w, memo=False).measurement.steps == 56
    assert evaluate(mirror, 1, w).measurement.steps == 88


@settings(max_examples=200, deadline=None)
@given(ELEMENTS)
def test_mirror_matches_oracle(mirror, w):
    got = evaluate(mirror, 1, w).result
    assert render_element(got) == oracle_render(oracle_mirror(oracle_parse(render_element(w))))


@settings(max_examples=200, deadline=None)
@given(ELEMENTS)
def test_identity_is_identity(identity, w):
    assert evaluate(identity, 1, w).result == w


@settings(max_examples=100, deadline=None)
@given(ELEMENTS)
def test_alternate_matches_oracle(systems, w):
    got = evaluate(systems["alternate"], 1, w).result
    assert render_element(got) == oracle_render(oracle_alternate(oracle_parse(render_element(w))))


@pytest.mark.parametrize("name", ["mirror", "identity", "alternate", "empty"])
def test_naive_agrees_exhaustively_small(systems, name):
    sys_ = systems[name]
    for w in enumerate_universe(["a", "b"], 6, 6):
        for i in range(1, sys_.n + 1):
            fast = evaluate(sys_, i, w, memo=False)
            slow = evaluate_naive(sys_, i, w)
            assert fast.result == slow.result
            assert fast.measurement.steps == slow.measurement.steps
            assert evaluate(sys_, i, w).result == slow.result


def test_false_agreement_on_empty_rules(systems):
    sys_ = systems["empty"]
    assert evaluate(sys_, 1, E("<a>")).result is FALSE
    assert evaluate_naive(sys_, 1, E("<a>")).result is FALSE
    assert not evaluate(sys_, 1, E("<a>")).defined
    assert evaluate(sys_, 1, E("<a,b>")).result == E("<b,a>")


def test_measurement_fields(mirror):
    m = evaluate(mirror, 1, E("<a,<b,c>>")).measurement
    assert (m.input_size, m.input_rank, m.output_size) == (5, 2, 5)
    assert m.bound_size == 20 and m.bound_time == 36 * 16 * 3 * 25
    assert m.size_ok and m.time_ok
    assert m.render() == "steps=88 bound_time=43200 size=5 rank=2 output_size=5 bound_size=20"


def test_false_has_output_size_zero(systems):
    assert evaluate(systems["empty"], 1, E("<a>")).measurement.output_size == 0


def test_trace(mirror):
    out = evaluate(mirror, 1, E("<a,<b,c>>"), trace=True)
    assert out.trace_lines() == [
        "EVAL f1 <a,<b,c>> => rule#1",
        "EVAL f1 a => initial",
        "EVAL f1 <b,c> => rule#1",
        "EVAL f1 b => initial",
        "EVAL f1 c => initial",
    ]
    assert evaluate(mirror, 1, E("a")).trace_lines() == []


def test_trace_reports_false(systems):
    out = evaluate(systems["empty"], 1, E("<a>"), trace=True)
    assert out.trace_lines() == ["EVAL f1 <a> => false"]


def test_memo_is_shared_within_a_session(mirror):
    s = Session(mirror)
    first = s.evaluate(1, E("<a,b>")).measurement.steps
    again = s.evaluate(1, E("<a,b>")).measurement.steps
    assert again == 1 + 3 < first


def test_rejected_systems_need_force(systems):
    with pytest.raises(NotAccepted):
        evaluate(systems["doubling"], 1, E("<a>"))
    with pytest.raises(NotAccepted):
        evaluate_naive(systems["viol_c3"], 1, E("<a,b>"))


def test_doubling_runtime_violation(systems):
    sys_ = systems["doubling"]
    assert evaluate(sys_, 1, E("<>"), force=True).result == E("<a,a>")
    with pytest.raises(RuntimeViolation) as err:
        evaluate(sys_, 1, E("<<>>"), force=True)
    exc = err.value
    assert exc.condition == "C5"
    assert (exc.lhs, exc.rhs) == (5, 4)
    assert "conc(y1,y1) instantiated as conc(<a,a>,<a,a>)" in str(exc)
    assert "5 > 4" in str(exc)


def test_doubling_chain_of_size_12(systems):
    with pytest.raises(RuntimeViolation, match="C5"):
        evaluate(systems["doubling"], 1, chain(11), force=True)
    with pytest.raises(RuntimeViolation, match="C5"):
        evaluate_naive(systems["doubling"], 1, chain(11), force=True)


def test_domain_error_is_an_evaluation_error(systems):
    with pytest.raises(DomainError):
        evaluate(systems["doubling"], 1, E("<a>"), force=True)


def test_unknown_symbol(mirror):
    with pytest.raises((KeyError, IndexError, ValueError)):
        evaluate(mirror, 2, E("a"))
