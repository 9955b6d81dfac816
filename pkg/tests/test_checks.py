from __future__ import annotations

import json

import pytest

from gnfsys import FList, parse_system
from gnfsys.checks import check_c1, check_c2, check_c3, check_c4_static, check_c5_static, check_system
from gnfsys.engine import Session, enumerate_universe

HEADER = """atoms: a, b
baseops:
  list arity=* cost=1+n size=additive(1)
  conc arity=2 cost=1+n size=additive(0)
  head arity=1 cost=1 size=selective
"""
F2 = """function f2:
  C = 4
  p = 1
  initial:
    atoms -> identity
  rules:
    is_list => listof(f2(x[i]),asc)
"""


def one_rule(template: str, guard: str = "arity = 2", C: int = 4, list_cost: str = "1+n"):
    text = HEADER.replace("cost=1+n size=additive(1)", f"cost={list_cost} size=additive(1)") + (
        f"function f1:\n  C = {C}\n  p = 1\n  initial:\n    atoms -> identity\n"
        f"  rules:\n    {guard} => {template}\n"
    ) + F2
    return parse_system(text, enforce_domination=False)


EXPECTED = {
    "mirror": [],
    "identity": [],
    "empty": [],
    "alternate": [],
    "doubling": ["C5"],
    "viol_c1": ["C1"],
    "viol_c2": ["C2"],
    "viol_c3": ["C3"],
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_fixture_verdicts(systems, name):
    report = check_system(systems[name])
    assert report.failed == EXPECTED[name]
    assert report.accepted == (not EXPECTED[name])


def test_unstrippable_templates_skip_later_conditions(systems):
    report = check_system(systems["viol_c1"])
    assert [report.verdicts[c].status for c in ("C1", "C2", "C3", "C4", "C5")] == [
        "fail", "pass", "skipped", "skipped", "skipped"]


@pytest.mark.parametrize("template,ok", [
    ("conc(f1(x1),x2)", True),
    ("list(f1(conc(x1,x2)))", False),
    ("list(f1(f2(x1)))", False),
])
def test_c1_examples(template, ok):
    assert check_c1(one_rule(template)).passed == ok


def test_c1_message_quotes_the_condition(systems):
    (finding,) = check_c1(systems["viol_c1"]).findings
    assert "f1(f1(x1)): recursive applications must be only of the form f_j(x_i)" in finding.message


@pytest.mark.parametrize("template,ok", [
    ("conc(f1(x1),f2(x2))", True),
    ("conc(f1(x1),f2(x1))", False),
    ("conc(f1(x1),f1(x1))", True),
])
def test_c2_examples(template, ok):
    assert check_c2(one_rule(template)).passed == ok


@pytest.mark.parametrize("template,guard,ok", [
    ("conc(f1(x1),x2)", "arity = 2", True),
    ("conc(f1(x1),x1)", "arity = 2", False),
    ("listof(f1(x[i]),desc)", "is_list", True),
])
def test_c3_examples(template, guard, ok):
    assert check_c3(one_rule(template, guard)).passed == ok


def test_c4_examples(mirror, systems):
    assert check_c4_static(mirror).passed
    assert check_c4_static(systems["doubling"]).passed
    # list costs 5 + n: no template using it fits in C = 4
    assert not check_c4_static(one_rule("listof(f1(x[i]),desc)", "is_list", list_cost="5+n")).passed


def test_c5_examples(mirror, systems):
    assert check_c5_static(mirror).passed
    verdict = check_c5_static(systems["doubling"])
    (finding,) = verdict.findings
    assert "conc(y1,y1)" in finding.message
    assert "do not exceed |w̄|+|l̄|" in finding.message
    assert check_c5_static(one_rule("head(f1(x1))", "arity = 1")).passed


def test_c4_listof_cost_oracle(mirror):
    """Replacement + base cost of the mirror template against C*max(1,T)^p,
    computed by hand for every input of size <= 8."""
    C, p = 4, 1
    for w in enumerate_universe(["a", "b"], 8, 8):
        if not isinstance(w, FList):
            continue
        k = len(w.children)
        S = sum(c.size for c in w.children)  # mirror preserves sizes, so sum |y| = S too
        stripped = 1 + k             # list(y_k, ..., y_1)
        ground = 1 + S               # list(<values>)
        base = 1 + S                 # list cost 1 + n on total argument size
        T = S + S
        assert stripped + ground + base <= C * max(1, T) ** p


def test_c4_conc_cost_oracle():
    """conc(y1,y1) under additive cost: cost never exceeds 8*T for any sizes."""
    C, p = 8, 1
    for w1 in range(1, 12):
        for y1 in range(1, 60):
            stripped, ground, base = 3, 1 + 2 * y1, 1 + 2 * y1
            assert stripped + ground + base <= C * max(1, w1 + y1) ** p


def test_c5_listof_value_oracle(mirror):
    """Every mirror value stays within |w̄|+|l̄| (checked at runtime by the
    engine, and recomputed here) for all inputs of size <= 10, rank <= 2."""
    session = Session(mirror)
    for w in enumerate_universe(["a", "b"], 10, 2, cap=10**6):
        value = session.value(1, w)
        if isinstance(w, FList) and w.children:
            comps = sum(c.size for c in w.children)
            ys = sum(session.value(1, c).size for c in w.children)
            assert value.size <= comps + ys


def test_report_renderings(systems):
    report = check_system(systems["doubling"])
    data = report.to_dict()
    assert json.loads(json.dumps(data)) == data
    assert data["accepted"] is False
    assert [v["condition"] for v in data["verdicts"]] == ["C1", "C2", "C3", "C4", "C5"]
    text = report.render_text()
    assert text.splitlines()[-1] == "accepted: no"
    assert "C5 fail" in text
