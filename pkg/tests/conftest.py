from __future__ import annotations

import itertools

import pytest

from gnfsys import load_system, shipped

FIXTURES = ("mirror", "identity", "doubling", "viol_c1", "viol_c2", "viol_c3", "empty", "alternate")


@pytest.fixture(scope="session")
def systems():
    return {name: load_system(shipped(name)) for name in FIXTURES}


@pytest.fixture(scope="session")
def mirror(systems):
    return systems["mirror"]


@pytest.fixture(scope="session")
def identity(systems):
    return systems["identity"]


# ---------------------------------------------------------------- oracles
# Independent of the package: elements are plain str (atom) or list (list).

def oracle_parse(text: str):
    pos = 0

    def elem():
        nonlocal pos
        if text[pos] == "<":
            pos += 1
            items = []
            if text[pos] == ">":
                pos += 1
                return items
            while True:
                items.append(elem())
                if text[pos] == ",":
                    pos += 1
                    continue
                assert text[pos] == ">"
                pos += 1
                return items
        start = pos
        while pos < len(text) and text[pos] not in "<>,":
            pos += 1
        return text[start:pos]

    text = text.replace(" ", "")
    out = elem()
    assert pos == len(text)
    return out


def oracle_render(e) -> str:
    if isinstance(e, str):
        return e
    return "<" + ",".join(oracle_render(c) for c in e) + ">"


def oracle_size(e) -> int:
    return 1 if isinstance(e, str) else 1 + sum(oracle_size(c) for c in e)


def oracle_rank(e) -> int:
    return 0 if isinstance(e, str) else 1 + max((oracle_rank(c) for c in e), default=0)


def oracle_mirror(e):
    return e if isinstance(e, str) else [oracle_mirror(c) for c in reversed(e)]


def oracle_universe(atoms, max_size: int, max_rank: int) -> set[str]:
    """Brute force: all elements as rendered strings, by explicit composition."""
    by_size: dict[int, list] = {1: list(atoms) + [[]]}
    for s in range(2, max_size + 1):
        found = []
        # a list of size s has children whose sizes sum to s-1
        for parts in _compositions(s - 1):
            pools = [by_size[p] for p in parts]
            found.extend(list(combo) for combo in itertools.product(*pools))
        by_size[s] = found
    return {
        oracle_render(e)
        for s in range(1, max_size + 1)
        for e in by_size[s]
        if oracle_rank(e) <= max_rank
    }


def _compositions(n: int):
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
