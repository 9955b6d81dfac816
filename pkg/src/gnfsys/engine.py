"""Least-fixed-point evaluation.

``evaluate`` computes f_i(w) on demand with a per-session memo; it is the
production path and runs each gamma instance through a compiled closure.
``evaluate_naive`` re-derives the same value from the public term
operations (gamma, strip, substitute, ground evaluation) with no memo and
no compilation, and is used as an oracle.  The stagewise functions build
the chain of approximations g^(0) <= g^(1) <= ... over a finite slice.

Sub-calls are made in ascending y-index order and stop at the first
``false``; both evaluators follow that order so their step counts agree.
"""
from __future__ import annotations

import gc
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from operator import attrgetter, itemgetter
from typing import Callable, Iterable, Sequence

from . import meter as cm
from .complexity import Measurement
from .errors import NotAccepted, RankDescentError, RuntimeViolation, UniverseTooLarge
from .hwm import FALSE, Alphabet, Atom, Element, FList, make_list, render_element
from .meter import Meter
from .system import (
    Family,
    GNFSystem,
    Instance,
    apply_gamma,
    gamma_step,
    initial_lookup,
    select_rule,
)
from .terms import (
    LIST_OP,
    App,
    Binding,
    Const,
    Lit,
    XVar,
    YVar,
    eval_ground,
    render_term,
    strip_recursive,
    substitute,
    subterms,
    term_size,
)

DEFAULT_MAX_UNIVERSE = 100_000

_size = attrgetter("size")


@contextmanager
def _gc_paused():
    """Elements are acyclic, so bulk passes that allocate hundreds of
    thousands of them need not pay for cyclic collection."""
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


# ---------------------------------------------------------------- acceptance

def accepted(sys: GNFSystem) -> bool:
    """Static check verdict, computed once per system object."""
    if "accepted" not in sys.cache:
        from .checks import check_system

        sys.cache["accepted"] = check_system(sys).accepted
    return sys.cache["accepted"]


def _require_accepted(sys: GNFSystem, force: bool) -> None:
    if not force and not accepted(sys):
        raise NotAccepted(f"{sys.name} fails static checking; use force to evaluate anyway")


# ---------------------------------------------------------------- compiled instances

@dataclass
class Compiled:
    inst: Instance
    calls: tuple[tuple[int, int, int], ...]  # (y index, symbol j, x index), ascending y
    run: Callable  # (xs, ys, acc) -> Element, adds base-op cost to acc[0]
    nonvar_size: int
    x_occ: tuple[int, ...]
    y_occ: tuple[int, ...]
    # (getter, cost, impl) when the template is one base op applied to
    # distinct y-variables; such instances skip the closure and the
    # per-occurrence size loops.
    flat: tuple | None = None


def _compile_term(t, ops) -> Callable:
    cls = t.__class__
    if cls is XVar:
        n = t.index - 1
        return lambda xs, ys, acc: xs[n]
    if cls is YVar:
        n = t.index
        return lambda xs, ys, acc: ys[n]
    if cls is Const:
        atom = Atom(t.name)
        return lambda xs, ys, acc: atom
    if cls is Lit:
        value = t.value
        return lambda xs, ys, acc: value
    if cls is App:
        op = ops[t.symbol]
        cost, impl = op.cost.fast(), op.impl
        if t.args and all(a.__class__ is YVar for a in t.args):
            # the common shape list(y_k, ..., y_1): fetch all arguments in C
            idx = [a.index for a in t.args]
            get = itemgetter(*idx) if len(idx) > 1 else (lambda ys, n=idx[0]: (ys[n],))

            def run_y(xs, ys, acc):
                vals = get(ys)
                acc[0] += cost(sum(map(_size, vals)))
                return impl(*vals)

            return run_y
        args = tuple(_compile_term(a, ops) for a in t.args)

        def run(xs, ys, acc):
            vals = [f(xs, ys, acc) for f in args]
            acc[0] += cost(sum(map(_size, vals)))
            return impl(*vals)

        return run
    raise TypeError(f"cannot compile {render_term(t)}")


def compiled(sys: GNFSystem, fam: Family, inst: Instance) -> Compiled:
    key = (inst.rule_index, inst.arity)
    c = fam.compiled.get(key)
    if c is None:
        stripped = inst.stripped
        x_occ = tuple(s.index for _, s in subterms(stripped) if s.__class__ is XVar)
        y_occ = tuple(s.index for _, s in subterms(stripped) if s.__class__ is YVar)
        flat = None
        if (stripped.__class__ is App and stripped.args and not x_occ
                and all(a.__class__ is YVar for a in stripped.args) and len(set(y_occ)) == len(y_occ)):
            op = sys.base_ops[stripped.symbol]
            get = itemgetter(*y_occ) if len(y_occ) > 1 else (lambda ys, n=y_occ[0]: (ys[n],))
            flat = (get, op.cost.fast(), op.impl, stripped.symbol == LIST_OP)
        c = fam.compiled[key] = Compiled(
            inst=inst,
            calls=tuple((yi, j, xi) for yi, (j, xi) in inst.calls),
            run=_compile_term(stripped, sys.base_ops),
            nonvar_size=inst.stripped_size - len(x_occ) - len(y_occ),
            x_occ=x_occ,
            y_occ=y_occ,
            flat=flat,
        )
    return c


def dispatch(sys: GNFSystem, fam: Family, w: Element) -> tuple[int, int | None, Compiled | None]:
    """(gamma cost, matching rule, compiled instance or None if gamma/arity says false).

    Guard primitives only inspect the node kind, the arity and the head
    atom, so the answer is cached per family on that triple.
    """
    if w.__class__ is FList:
        k = len(w)
        head = w[0] if k and w[0].__class__ is Atom else None
        key = ("dispatch", k, head)
    else:
        k = 0
        key = ("dispatch", None)
    hit = fam.compiled.get(key)
    if hit is None:
        r, cost = select_rule(fam, w)
        c = None
        if r is not None:
            inst = fam.instance(r, k)
            cost += inst.emitted_size
            if fam.rules[r].xbar_length(k) == k:
                c = compiled(sys, fam, inst)
        hit = fam.compiled[key] = (cost, r, c)
    return hit


def _runtime_checks(fam: Family, stripped, comps, comp_total: int, yvals: dict, value: Element,
                    base_cost: int, replace_cost: int) -> None:
    """C4 (template cost within C*T^p) and, when y-variables occur, C5."""
    y_total = 0
    for v in yvals.values():
        y_total += v.size
    total = comp_total + y_total
    budget = fam.C * (total if total > 1 else 1) ** fam.p
    if base_cost > budget:
        raise RuntimeViolation("C4", fam.index, render_term(stripped), base_cost, budget,
                               "base-operation cost exceeds C*T^p")
    if replace_cost > budget:
        raise RuntimeViolation("C4", fam.index, render_term(stripped), replace_cost, budget,
                               "replacement cost exceeds C*T^p")
    if yvals and value.size > total:
        binding = Binding({n: c for n, c in enumerate(comps, 1)}, dict(yvals))
        ground = render_term(substitute(stripped, binding))
        raise RuntimeViolation(
            "C5", fam.index, f"{render_term(stripped)} instantiated as {ground}", value.size, total,
            f"|value| = {value.size} exceeds |w̄|+|l̄| = {comp_total} + {y_total}",
        )


def _apply_compiled(fam: Family, c: Compiled, w: Element, yvals: dict) -> tuple[Element, int, int]:
    """Run a compiled instance; returns (value, replacement cost, base cost).

    The bounds are tested inline; ``_runtime_checks`` only runs to build the
    diagnostic once one of them fails.
    """
    if w.__class__ is FList:
        comps = w
        comp_total = w.size - 1
    else:
        comps = ()
        comp_total = 0
    if c.flat is not None:
        get, cost, impl, is_list = c.flat
        vals = get(yvals)
        y_total = sum(map(_size, vals))
        base_cost = cost(y_total)
        replace_cost = c.inst.stripped_size + c.nonvar_size + y_total
        value = make_list(vals, 1 + y_total) if is_list else impl(*vals)
        total = comp_total + y_total
        budget = fam.C * (total if total > 1 else 1) ** fam.p
        if base_cost > budget or replace_cost > budget or value.size > total:
            _runtime_checks(fam, c.inst.stripped, comps, comp_total, yvals, value, base_cost, replace_cost)
        return value, replace_cost, base_cost
    ground_size = c.nonvar_size
    for n in c.x_occ:
        ground_size += comps[n - 1].size
    for n in c.y_occ:
        ground_size += yvals[n].size
    replace_cost = c.inst.stripped_size + ground_size
    acc = [0]
    value = c.run(comps, yvals, acc)
    total = comp_total + sum(map(_size, yvals.values())) if yvals else comp_total
    budget = fam.C * (total if total > 1 else 1) ** fam.p
    if acc[0] > budget or replace_cost > budget or (yvals and value.size > total):
        _runtime_checks(fam, c.inst.stripped, comps, comp_total, yvals, value, acc[0], replace_cost)
    return value, replace_cost, acc[0]


# ---------------------------------------------------------------- on-demand evaluation

@dataclass
class TraceEvent:
    symbol: int
    w: Element
    tag: str  # "initial", "rule#r" or "false"

    def render(self) -> str:
        return f"EVAL f{self.symbol} {render_element(self.w)} => {self.tag}"


@dataclass
class Outcome:
    result: Element
    measurement: Measurement
    trace: list[TraceEvent] | None = None

    @property
    def defined(self) -> bool:
        return self.result is not FALSE

    def trace_lines(self) -> list[str]:
        return [e.render() for e in self.trace or ()]


class Session:
    """Memo table and meter for a sequence of evaluations over one system."""

    def __init__(self, sys: GNFSystem, *, memo: bool = True, trace: bool = False, force: bool = False):
        _require_accepted(sys, force)
        self.sys = sys
        self.memo: dict[int, dict[Element, Element]] | None = (
            {fam.index: {} for fam in sys.families} if memo else None
        )
        self.meter = Meter()
        self.events: list[TraceEvent] | None = [] if trace else None
        self._fams = (None,) + tuple(sys.families)

    def evaluate(self, i: int, w: Element) -> Outcome:
        fam = self.sys.family(i)
        start = self.meter.steps
        mark = len(self.events) if self.events is not None else 0
        result = self._eval(i, w)
        m = Measurement(i, w.size, w.rank, 0 if result is FALSE else result.size,
                        self.meter.steps - start, fam.C, fam.p)
        trace = self.events[mark:] if self.events is not None else None
        return Outcome(result, m, trace)

    def value(self, i: int, w: Element) -> Element:
        """Like ``evaluate(i, w).result`` without building a Measurement."""
        self.sys.family(i)
        return self._eval(i, w)

    # The hot path charges the meter fields directly; the amounts are the
    # ones initial_lookup / gamma_step / meter.memo_cost would charge, which
    # the naive evaluator uses verbatim (tests compare the two step counts).
    def _eval(self, i: int, w: Element) -> Element:
        memo = self.memo
        if memo is not None:
            cost = w.size + 1
            self.meter.by_kind["memo"] += cost
            self.meter.steps += cost
            hit = memo[i].get(w)
            if hit is not None:
                return hit
        return self._compute(i, w)

    def _compute(self, i: int, w: Element) -> Element:
        """Everything after a memo miss, including the memo insert.

        Charges are summed locally and added to the meter once per call.
        """
        fam = self._fams[i]
        n = w.size
        p = fam.p
        budget = fam.C * (n if p == 1 else n ** p)
        initial = n + 1
        if initial > budget:
            initial_lookup(self.sys, i, w)  # raises the C4 violation
        init = fam.initial
        v = init.table.get(w) if init.table else None
        if v is None and init.atoms_identity and w.__class__ is Atom and w is not FALSE:
            v = w
        events = self.events
        memo = self.memo
        by = self.meter.by_kind
        charged = initial
        if v is not None:
            if events is not None:
                events.append(TraceEvent(i, w, "initial"))
            result = v
        else:
            gcost, r, c = dispatch(self.sys, fam, w)
            if gcost > budget:
                gamma_step(self.sys, i, w)  # raises the C4 violation
            if gcost:
                by["gamma"] += gcost
                charged += gcost
            if c is None:
                if events is not None:
                    events.append(TraceEvent(i, w, "false"))
                result = FALSE
            else:
                if events is not None:
                    events.append(TraceEvent(i, w, f"rule#{r + 1}"))
                wrank = w.rank
                yvals: dict[int, Element] = {}
                result = None
                dispatched = probed = 0
                for yi, j, xi in c.calls:
                    arg = w[xi - 1]
                    if arg.rank >= wrank:
                        raise RankDescentError(f"f{j}({render_element(arg)}) does not descend from {render_element(w)}")
                    dispatched += 1
                    if memo is not None:  # inlined _eval probe
                        probed += arg.size + 1
                        val = memo[j].get(arg)
                        if val is None:
                            val = self._compute(j, arg)
                    else:
                        val = self._compute(j, arg)
                    if val is FALSE:
                        result = FALSE
                        break
                    yvals[yi] = val
                if dispatched:
                    dispatched *= cm.DISPATCH
                    by["dispatch"] += dispatched
                    charged += dispatched
                    if probed:
                        by["memo"] += probed
                        charged += probed
                if result is None:
                    result, rcost, bcost = _apply_compiled(fam, c, w, yvals)
                    by["replace"] += rcost
                    by["base"] += bcost
                    charged += rcost + bcost
        by["initial"] += initial
        if memo is not None:
            by["memo"] += initial  # insert costs 1 + |w|, same as the lookup
            charged += initial
            memo[i][w] = result
        self.meter.steps += charged
        return result


def evaluate(sys: GNFSystem, i: int, w: Element, *, memo: bool = True, trace: bool = False,
             force: bool = False) -> Outcome:
    """f_i(w) in the least fixed point, or ``FALSE`` where it is undefined."""
    return Session(sys, memo=memo, trace=trace, force=force).evaluate(i, w)


def evaluate_naive(sys: GNFSystem, i: int, w: Element, *, force: bool = False) -> Outcome:
    """Direct transcription of the defining equation; no memo, no compilation."""
    _require_accepted(sys, force)
    meter = Meter()

    def f(i: int, w: Element) -> Element:
        fam = sys.family(i)
        v = initial_lookup(sys, i, w, meter)
        if v is not None:
            return v
        term = apply_gamma(sys, i, w, meter)
        if term is FALSE:
            return FALSE
        comps = list(w.children)
        r, _ = select_rule(fam, w)
        if fam.rules[r].xbar_length(len(comps)) != len(comps):
            return FALSE
        stripped, calls = strip_recursive(term)
        yvals = {}
        for yi, (j, xi) in calls:
            arg = comps[xi - 1]
            if arg.rank >= w.rank:
                raise RankDescentError(f"f{j}({render_element(arg)}) does not descend from {render_element(w)}")
            meter.charge("dispatch", cm.DISPATCH)
            val = f(j, arg)
            if val is FALSE:
                return FALSE
            yvals[yi] = val
        before = meter.steps
        meter.charge("replace", term_size(stripped))
        ground = substitute(stripped, Binding({n: c for n, c in enumerate(comps, 1)}, yvals), meter)
        replace_cost = meter.steps - before
        sub = Meter()
        value = eval_ground(ground, sys.base_ops, sub)
        if sub.steps:
            meter.charge("base", sub.steps)
        _runtime_checks(fam, stripped, comps, sum(c.size for c in comps), yvals, value, sub.steps, replace_cost)
        return value

    fam = sys.family(i)
    result = f(i, w)
    m = Measurement(i, w.size, w.rank, 0 if result is FALSE else result.size, meter.steps, fam.C, fam.p)
    return Outcome(result, m)


# ---------------------------------------------------------------- universe slices

def _cap() -> int:
    raw = os.environ.get("GNF_MAX_UNIVERSE")
    if raw is None:
        return DEFAULT_MAX_UNIVERSE
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"GNF_MAX_UNIVERSE must be an integer, got {raw!r}") from None


def universe_count(n_atoms: int, max_size: int, max_rank: int) -> int:
    """Number of elements with size <= max_size and rank <= max_rank."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def elems(s: int, r: int) -> int:
        n = n_atoms if s == 1 else 0
        if r >= 1:
            n += seqs(s - 1, r - 1)
        return n

    @lru_cache(maxsize=None)
    def seqs(s: int, r: int) -> int:
        if s == 0:
            return 1
        return sum(elems(k, r) * seqs(s - k, r) for k in range(1, s + 1))

    return sum(elems(s, max_rank) for s in range(1, max_size + 1))


def enumerate_universe(alphabet: Alphabet | Iterable[str], max_size: int, max_rank: int,
                       cap: int | None = None) -> list[Element]:
    """All elements up to the bounds, ordered by ``hwm.sort_key``.

    ``false`` is never included.  The cap defaults to ``GNF_MAX_UNIVERSE``.
    """
    if max_size < 1 or max_rank < 1:
        raise ValueError("max_size and max_rank must be at least 1")
    names = alphabet.user_names if isinstance(alphabet, Alphabet) else tuple(n for n in alphabet if n != "false")
    limit = _cap() if cap is None else cap
    total = universe_count(len(names), max_size, max_rank)
    if total > limit:
        raise UniverseTooLarge(f"slice has {total} elements, cap is {limit} (set GNF_MAX_UNIVERSE to raise it)")
    with _gc_paused():
        return _enumerate(names, max_size, max_rank)


def _enumerate(names: Sequence[str], max_size: int, max_rank: int) -> list[Element]:
    atoms = [Atom(n) for n in names]
    elem_cache: dict[tuple[int, int], list[Element]] = {}
    seq_cache: dict[tuple[int, int], list[tuple[Element, ...]]] = {}

    # Generated in sort order: within a size, atoms then lists, and lists
    # compare child by child on (size, key), which is exactly the order in
    # which seqs() picks the first child and recurses on the rest.
    def elems(s: int, r: int) -> list[Element]:
        key = (s, r)
        out = elem_cache.get(key)
        if out is None:
            out = list(atoms) if s == 1 else []
            if r >= 1:
                out.extend(FList(t) for t in seqs(s - 1, r - 1))
            elem_cache[key] = out
        return out

    def seqs(s: int, r: int) -> list[tuple[Element, ...]]:
        key = (s, r)
        out = seq_cache.get(key)
        if out is None:
            if s == 0:
                out = [()]
            else:
                out = []
                for k in range(1, s + 1):
                    rests = seqs(s - k, r)
                    for e in elems(k, r):
                        out.extend((e,) + rest for rest in rests)
            seq_cache[key] = out
        return out

    result: list[Element] = []
    for s in range(1, max_size + 1):
        result.extend(elems(s, max_rank))
    return result


# ---------------------------------------------------------------- stagewise iteration

@dataclass
class StageTable:
    """Approximation g^(k) restricted to a slice.

    ``entries[i]`` holds the defined values of g_i; ``refused[i]`` holds the
    inputs where gamma (or the arity guard) says ``false`` for good.
    Inputs in neither are not yet determined.
    """

    stage: int
    domain: tuple[Element, ...]
    entries: dict[int, dict[Element, Element]]
    refused: dict[int, frozenset[Element]] = field(default_factory=dict)
    # Semi-naive bookkeeping: undetermined inputs keyed by the sub-call that
    # blocks them, and the (symbol, input) pairs this stage determined.  The
    # next stage only revisits inputs whose blocker is in ``fresh``.
    waiting: dict | None = field(default=None, repr=False, compare=False)
    fresh: list | None = field(default=None, repr=False, compare=False)

    def get(self, i: int, w: Element) -> Element | None:
        """Value, ``FALSE`` if refused, ``None`` if not yet determined."""
        v = self.entries[i].get(w)
        if v is not None:
            return v
        if w in self.refused.get(i, ()):
            return FALSE
        return None

    def defined_count(self, i: int | None = None) -> int:
        if i is not None:
            return len(self.entries[i])
        return sum(len(d) for d in self.entries.values())

    def same_function(self, other: StageTable) -> bool:
        return self.entries == other.entries


def initial_stage(sys: GNFSystem, domain: Sequence[Element]) -> StageTable:
    domain = tuple(domain)
    entries = {}
    for fam in sys.families:
        d = {}
        for w in domain:
            v = fam.initial.lookup(w)
            if v is not None:
                d[w] = v
        entries[fam.index] = d
    return StageTable(0, domain, entries, {fam.index: frozenset() for fam in sys.families})


def iterate_stage(sys: GNFSystem, table: StageTable) -> StageTable:
    """One application of the extension operator, reading only ``table``."""
    with _gc_paused():
        return _iterate_stage(sys, table)


def _iterate_stage(sys: GNFSystem, table: StageTable) -> StageTable:
    prev_entries = table.entries
    prev_refused = {fam.index: table.refused.get(fam.index, frozenset()) for fam in sys.families}
    entries = {i: dict(d) for i, d in prev_entries.items()}
    refused = {i: set(r) for i, r in prev_refused.items()}
    if table.waiting is None:
        waiting: dict = {}
        work = []
        for fam in sys.families:
            cur, ref = prev_entries[fam.index], prev_refused[fam.index]
            work.extend((fam, w, None) for w in table.domain if w not in cur and w not in ref)
    else:
        waiting = dict(table.waiting)
        work = []
        for key in table.fresh:
            work.extend(waiting.pop(key, ()))
    fresh = []
    add_fresh = fresh.append
    for fam, w, c in work:
        i = fam.index
        if c is None:
            init = fam.initial
            v = init.table.get(w) if init.table else None
            if v is None and init.atoms_identity and w.__class__ is Atom and w is not FALSE:
                v = w
            if v is not None:
                entries[i][w] = v
                add_fresh((i, w))
                continue
            c = dispatch(sys, fam, w)[2]
            if c is None:
                refused[i].add(w)
                add_fresh((i, w))
                continue
        wrank = w.rank
        yvals = {}
        value = None
        for yi, j, xi in c.calls:
            arg = w[xi - 1]
            if arg.rank >= wrank:
                raise RankDescentError(f"f{j}({render_element(arg)}) does not descend from {render_element(w)}")
            sub = prev_entries[j].get(arg)
            if sub is None:
                if arg in prev_refused[j]:
                    value = FALSE
                    break
                # Park w behind the undetermined sub-call of highest rank:
                # the last one likely to resolve.
                key = (j, arg)
                best = arg.rank
                for _, j2, x2 in c.calls:
                    a2 = w[x2 - 1]
                    if a2.rank > best and a2 not in prev_entries[j2] and a2 not in prev_refused[j2]:
                        key, best = (j2, a2), a2.rank
                waiting.setdefault(key, []).append((fam, w, c))
                break
            yvals[yi] = sub
        else:
            value = _apply_compiled(fam, c, w, yvals)[0]
        if value is None:
            continue
        if value is FALSE:
            refused[i].add(w)
        else:
            entries[i][w] = value
        add_fresh((i, w))
    return StageTable(
        table.stage + 1, table.domain, entries, {i: frozenset(r) for i, r in refused.items()}, waiting, fresh
    )


@dataclass
class FixpointRun:
    stages: list[StageTable]
    stabilized_at: int | None  # first k >= 1 with g^(k) == g^(k-1), or None

    @property
    def final(self) -> StageTable:
        return self.stages[-1]


def run_to_fixpoint(sys: GNFSystem, domain: Sequence[Element], max_stages: int) -> FixpointRun:
    if max_stages < 1:
        raise ValueError("max_stages must be at least 1")
    stages = [initial_stage(sys, domain)]
    for _ in range(max_stages):
        nxt = iterate_stage(sys, stages[-1])
        stages.append(nxt)
        if nxt.same_function(stages[-2]):
            return FixpointRun(stages, nxt.stage)
    return FixpointRun(stages, None)


@dataclass
class ChainVerdict:
    passed: bool
    problems: list[str] = field(default_factory=list)

    def render(self) -> str:
        return "pass" if self.passed else "fail: " + "; ".join(self.problems[:5])


def verify_monotone(stages: Sequence[StageTable], limit: int = 20) -> ChainVerdict:
    """Every defined entry of stage k persists with the same value in stage k+1."""
    if len(stages) < 2:
        raise ValueError("need at least two stages")
    problems = []
    for prev, nxt in zip(stages, stages[1:]):
        for i, d in prev.entries.items():
            later = nxt.entries.get(i, {})
            for w, v in d.items():
                u = later.get(w)
                if u != v:
                    got = "undefined" if u is None else render_element(u)
                    problems.append(
                        f"f{i}({render_element(w)}): stage {prev.stage} has {render_element(v)}, "
                        f"stage {nxt.stage} has {got}"
                    )
                    if len(problems) >= limit:
                        return ChainVerdict(False, problems)
    return ChainVerdict(not problems, problems)


def crosscheck_fixpoint(sys: GNFSystem, stages: Sequence[StageTable], domain: Sequence[Element] | None = None,
                        *, session: Session | None = None, limit: int = 20) -> ChainVerdict:
    """The final table agrees with on-demand evaluation on every (i, w) in the slice."""
    final = stages[-1]
    domain = final.domain if domain is None else domain
    session = session or Session(sys, force=True)
    with _gc_paused():
        return _crosscheck(sys, final, domain, session, limit)


def _crosscheck(sys, final, domain, session, limit) -> ChainVerdict:
    problems = []
    for fam in sys.families:
        i = fam.index
        for w in domain:
            want = final.get(i, w)
            want = FALSE if want is None else want
            got = session.value(i, w)
            if got != want:
                problems.append(f"f{i}({render_element(w)}): table {render_element(want)}, evaluate {render_element(got)}")
                if len(problems) >= limit:
                    return ChainVerdict(False, problems)
    return ChainVerdict(not problems, problems)


def inject_fault(stages: list[StageTable]) -> tuple[int, Element] | None:
    """Test hook: change one value carried from the first stage that defines
    anything into the next one.  Returns the corrupted (i, w), if any."""
    for k in range(len(stages) - 1):
        for i, d in stages[k].entries.items():
            for w, v in d.items():
                bad = FList((v,))
                stages[k + 1].entries[i][w] = bad
                return i, w
    return None
