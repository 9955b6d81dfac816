from __future__ import annotations

import pytest

from gnfsys import EMPTY, FALSE, Atom, parse_element, render_element
from gnfsys.errors import UniverseTooLarge
from gnfsys.engine import (
    Session,
    crosscheck_fixpoint,
    enumerate_universe,
    initial_stage,
    inject_fault,
    iterate_stage,
    run_to_fixpoint,
    universe_count,
    verify_monotone,
)
from gnfsys.hwm import sort_key

from conftest import oracle_mirror, oracle_parse, oracle_rank, oracle_render, oracle_universe

E = parse_element


def test_enumerate_examples():
    # every element with size <= 2 and rank <= 2 over {a}: <<>> has size 2 and rank 2
    assert [render_element(e) for e in enumerate_universe(["a"], 2, 2)] == ["a", "<>", "<a>", "<<>>"]
    assert [render_element(e) for e in enumerate_universe(["a", "b"], 1, 1)] == ["a", "b", "<>"]


@pytest.mark.parametrize("atoms,max_size,max_rank", [
    (["a"], 2, 2), (["a", "b"], 1, 1), (["a", "b"], 5, 2), (["a", "b"], 6, 6), (["a", "b", "c"], 5, 3),
])
def test_enumerate_matches_brute_force(atoms, max_size, max_rank):
    got = enumerate_universe(atoms, max_size, max_rank)
    rendered = [render_element(e) for e in got]
    assert len(set(rendered)) == len(rendered)
    assert set(rendered) == oracle_universe(atoms, max_size, max_rank)
    assert len(got) == universe_count(len(atoms), max_size, max_rank)
    order = {a: n for n, a in enumerate(atoms)}
    assert got == sorted(got, key=lambda e: sort_key(e, order))


def test_enumerate_never_includes_false():
    assert FALSE not in enumerate_universe(["a", "false"], 3, 2)


def test_enumerate_errors(monkeypatch):
    with pytest.raises(ValueError):
        enumerate_universe(["a"], 0, 1)
    with pytest.raises(ValueError):
        enumerate_universe(["a"], 2, 0)
    with pytest.raises(UniverseTooLarge):
        enumerate_universe(["a", "b"], 8, 3, cap=1000)
    monkeypatch.setenv("GNF_MAX_UNIVERSE", "10")
    with pytest.raises(UniverseTooLarge, match="GNF_MAX_UNIVERSE"):
        enumerate_universe(["a", "b"], 3, 3)
    monkeypatch.setenv("GNF_MAX_UNIVERSE", "lots")
    with pytest.raises(ValueError):
        enumerate_universe(["a"], 1, 1)


def test_universe_count_known_values():
    assert universe_count(2, 9, 3) == 252930
    assert universe_count(2, 8, 8) == 72186


def test_first_mirror_stage_over_a(mirror):
    domain = enumerate_universe(["a"], 3, 3)
    s0 = initial_stage(mirror, domain)
    assert s0.entries[1] == {Atom("a"): Atom("a")}
    s1 = iterate_stage(mirror, s0)
    new = {render_element(w): render_element(v) for w, v in s1.entries[1].items() if w not in s0.entries[1]}
    # exactly the lists whose components are already defined at stage 0
    assert new == {"<>": "<>", "<a>": "<a>", "<a,a>": "<a,a>"}
    session = Session(mirror)
    for w, v in s1.entries[1].items():
        assert session.value(1, w) == v


def test_mirror_stage_k_defines_rank_k(mirror):
    domain = enumerate_universe(["a", "b"], 6, 3)
    run = run_to_fixpoint(mirror, domain, 10)
    for st in run.stages:
        expect = {
            render_element(w): oracle_render(oracle_mirror(oracle_parse(render_element(w))))
            for w in domain
            if oracle_rank(oracle_parse(render_element(w))) <= st.stage
        }
        got = {render_element(w): render_element(v) for w, v in st.entries[1].items()}
        assert got == expect
    assert [st.defined_count() for st in run.stages] == [2, 65, 914, 1794, 1794]
    assert run.stabilized_at == 4


def test_fixed_point_is_stable(mirror):
    domain = enumerate_universe(["a", "b"], 4, 3)
    run = run_to_fixpoint(mirror, domain, 10)
    again = iterate_stage(mirror, run.final)
    assert again.entries == run.final.entries


def test_initial_only_system(systems):
    sys_ = systems["empty"]
    domain = enumerate_universe(["a", "b"], 4, 2)
    run = run_to_fixpoint(sys_, domain, 5)
    assert run.stabilized_at == 1
    assert run.stages[1].entries == run.stages[0].entries
    assert run.stages[1].get(1, E("<a>")) is FALSE
    assert run.stages[1].get(1, E("<a,b>")) == E("<b,a>")


@pytest.mark.parametrize("name", ["mirror", "identity", "alternate", "empty"])
@pytest.mark.parametrize("R", [1, 2, 3])
def test_stabilizes_by_rank_plus_one(systems, name, R):
    domain = enumerate_universe(["a", "b"], 6, R)
    run = run_to_fixpoint(systems[name], domain, R + 5)
    assert run.stabilized_at is not None and run.stabilized_at <= R + 1
    assert verify_monotone(run.stages).passed
    assert crosscheck_fixpoint(systems[name], run.stages).passed


def test_max_stages_limit(mirror):
    domain = enumerate_universe(["a", "b"], 6, 3)
    run = run_to_fixpoint(mirror, domain, 2)
    assert run.stabilized_at is None and len(run.stages) == 3
    with pytest.raises(ValueError):
        run_to_fixpoint(mirror, domain, 0)


def test_injected_fault_is_caught(mirror):
    run = run_to_fixpoint(mirror, enumerate_universe(["a", "b"], 4, 3), 10)
    i, w = inject_fault(run.stages)
    verdict = verify_monotone(run.stages)
    assert not verdict.passed
    assert verdict.problems[0].startswith(f"f{i}({render_element(w)}): stage 0")


def test_monotone_needs_two_stages(mirror):
    with pytest.raises(ValueError):
        verify_monotone([initial_stage(mirror, [EMPTY])])


def test_crosscheck_detects_corrupted_memo(mirror):
    domain = enumerate_universe(["a", "b"], 4, 3)
    run = run_to_fixpoint(mirror, domain, 10)
    session = Session(mirror)
    session.memo[1][E("<a,b>")] = E("<a,b>")
    verdict = crosscheck_fixpoint(mirror, run.stages, session=session)
    assert not verdict.passed
    assert "f1(<a,b>): table <b,a>, evaluate <a,b>" in verdict.problems
    assert verdict.render().startswith("fail: ")


def test_crosscheck_treats_absent_entries_as_false(systems):
    sys_ = systems["empty"]
    run = run_to_fixpoint(sys_, enumerate_universe(["a", "b"], 3, 2), 3)
    assert crosscheck_fixpoint(sys_, run.stages).passed
