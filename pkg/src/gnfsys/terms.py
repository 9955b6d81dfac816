"""Terms over the signature: parsing, variable analysis, stripping,
substitution and metered ground evaluation.

Recursive symbols are named ``f1 .. fn`` and are unary.  ``listof(body,
asc|desc)`` denotes one term per arity k: ``list(body[1], ..., body[k])``
(or the reverse), where the body may mention the iteration index through
``x[i]`` and ``y[i]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .errors import StrippingError, TermSyntaxError, UnboundVariable, DomainError
from .hwm import ATOM_RE, Alphabet, Atom, Element, _ElementParser, render_element
from .meter import Meter

REC_RE = re.compile(r"f([1-9][0-9]*)")
VAR_RE = re.compile(r"([xy])([1-9][0-9]*)")
LIST_OP = "list"


@dataclass(frozen=True)
class XVar:
    index: int | None  # None is the listof iteration index

    def __str__(self):
        return "x[i]" if self.index is None else f"x{self.index}"


@dataclass(frozen=True)
class YVar:
    index: int | None

    def __str__(self):
        return "y[i]" if self.index is None else f"y{self.index}"


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Lit:
    """An element value embedded in a ground term (produced by substitution)."""

    value: Element


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class VariadicList:
    body: Term
    descending: bool = False


Term = Union[XVar, YVar, Const, Lit, App, VariadicList]
Var = Union[XVar, YVar]


def rec_index(symbol: str) -> int | None:
    m = REC_RE.fullmatch(symbol)
    return int(m.group(1)) if m else None


@dataclass
class Signature:
    """Symbols a term may mention.  ``base_arity`` uses -1 for variadic."""

    base_arity: dict[str, int] = field(default_factory=dict)
    n_recursive: int = 0
    alphabet: Alphabet | None = None

    def arity(self, symbol: str) -> int | None:
        idx = rec_index(symbol)
        if idx is not None:
            return 1 if idx <= self.n_recursive else None
        return self.base_arity.get(symbol)


@dataclass
class CallMap:
    """y-index -> (recursive symbol index j, x-index i) for each stripped ``f_j(x_i)``."""

    entries: dict[int | None, tuple[int, int | None]] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries.items(), key=lambda kv: (kv[0] is None, kv[0] or 0)))


@dataclass
class Binding:
    x_values: dict[int, Element] = field(default_factory=dict)
    y_values: dict[int, Element] = field(default_factory=dict)


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r"\s*(?:([a-z][a-z0-9_]*)|(\d+)|(.))")


class _TermParser:
    def __init__(self, text: str, sig: Signature | None):
        self.text = text
        self.pos = 0
        self.sig = sig
        self.in_body = False

    def error(self, msg: str, pos: int | None = None) -> TermSyntaxError:
        return TermSyntaxError(msg, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = ATOM_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected identifier" if self.pos < len(self.text) else "unexpected end of input")
        self.pos = m.end()
        return m.group()

    def parse(self) -> Term:
        t = self.term()
        if self.peek():
            raise self.error("trailing input")
        return t

    def term(self) -> Term:
        if self.peek() == "<":
            ep = _ElementParser(self.text, self.sig.alphabet if self.sig else None)
            ep.pos = self.pos
            try:
                value = ep.element()
            except Exception as exc:
                raise self.error(str(exc)) from None
            self.pos = ep.pos
            return Lit(value)
        start = self.pos
        name = self.ident()
        if name in ("x", "y") and self.peek() == "[":
            self.pos += 1
            if self.ident() != "i":
                raise self.error("only the index variable i may appear in brackets")
            self.expect("]")
            if not self.in_body:
                raise self.error(f"{name}[i] outside listof", start)
            return XVar(None) if name == "x" else YVar(None)
        m = VAR_RE.fullmatch(name)
        if m:
            idx = int(m.group(2))
            return XVar(idx) if m.group(1) == "x" else YVar(idx)
        if self.peek() != "(":
            if self.sig is not None and self.sig.alphabet is not None and name not in self.sig.alphabet:
                raise self.error(f"unknown atom {name!r}", start)
            return Const(name)
        self.pos += 1
        if name == "listof":
            return self.listof(start)
        args: list[Term] = []
        if self.peek() != ")":
            while True:
                args.append(self.term())
                if self.peek() == ",":
                    self.pos += 1
                    continue
                break
        self.expect(")")
        if self.sig is not None:
            arity = self.sig.arity(name)
            if arity is None:
                raise self.error(f"unknown symbol {name!r}", start)
            if arity >= 0 and arity != len(args):
                raise self.error(f"{name} expects {arity} argument(s), got {len(args)}", start)
        return App(name, tuple(args))

    def listof(self, start: int) -> Term:
        if self.in_body:
            raise self.error("nested listof is not supported", start)
        if self.sig is not None and self.sig.arity(LIST_OP) is None:
            raise self.error("listof requires the list base operation", start)
        self.in_body = True
        body = self.term()
        self.in_body = False
        self.expect(",")
        order = self.ident()
        if order not in ("asc", "desc"):
            raise self.error("listof order must be asc or desc")
        self.expect(")")
        return VariadicList(body, order == "desc")


def parse_term(text: str, signature: Signature | None = None) -> Term:
    """Parse a term; with a signature, symbols and arities are resolved."""
    return _TermParser(text, signature).parse()


def render_term(t: Term) -> str:
    cls = t.__class__
    if cls is XVar or cls is YVar:
        return str(t)
    if cls is Const:
        return t.name
    if cls is Lit:
        return render_element(t.value)
    if cls is App:
        return f"{t.symbol}(" + ",".join(render_term(a) for a in t.args) + ")"
    if cls is VariadicList:
        return f"listof({render_term(t.body)},{'desc' if t.descending else 'asc'})"
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- structure

def term_size(t: Term) -> int:
    cls = t.__class__
    if cls is Lit:
        return t.value.size
    if cls is App:
        return 1 + sum(term_size(a) for a in t.args)
    if cls is VariadicList:
        return 1 + term_size(t.body)
    return 1


def subterms(t: Term, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Term]]:
    """Pre-order walk yielding ``(path, subterm)``."""
    yield path, t
    if t.__class__ is App:
        for k, a in enumerate(t.args):
            yield from subterms(a, path + (k,))
    elif t.__class__ is VariadicList:
        yield from subterms(t.body, path + (0,))


def count_apps(t: Term) -> int:
    return sum(1 for _, s in subterms(t) if s.__class__ is App)


def has_variadic(t: Term) -> bool:
    return any(s.__class__ is VariadicList for _, s in subterms(t))


def max_x_index(t: Term) -> int:
    return max((s.index for _, s in subterms(t) if s.__class__ is XVar and s.index is not None), default=0)


def max_var_index(t: Term) -> int:
    return max(
        (s.index for _, s in subterms(t) if s.__class__ in (XVar, YVar) and s.index is not None),
        default=0,
    )


def _replace_index(t: Term, n: int) -> Term:
    cls = t.__class__
    if cls is XVar and t.index is None:
        return XVar(n)
    if cls is YVar and t.index is None:
        return YVar(n)
    if cls is App:
        return App(t.symbol, tuple(_replace_index(a, n) for a in t.args))
    return t


def expand(t: Term, arity: int) -> Term:
    """Instantiate every ``listof`` node at the given arity."""
    cls = t.__class__
    if cls is VariadicList:
        order = range(arity, 0, -1) if t.descending else range(1, arity + 1)
        return App(LIST_OP, tuple(_replace_index(t.body, n) for n in order))
    if cls is App:
        return App(t.symbol, tuple(expand(a, arity) for a in t.args))
    return t


def free_vars(t: Term, arity: int | None = None) -> frozenset[Var]:
    """Variables occurring in ``t``.  With an arity, ``listof`` is expanded first;
    otherwise the index variables ``x[i]``/``y[i]`` are reported as such."""
    if arity is not None:
        t = expand(t, arity)
    return frozenset(s for _, s in subterms(t) if s.__class__ is XVar or s.__class__ is YVar)


def split_vars(t: Term, arity: int | None = None) -> tuple[frozenset[XVar], frozenset[YVar]]:
    fv = free_vars(t, arity)
    return (
        frozenset(v for v in fv if v.__class__ is XVar),
        frozenset(v for v in fv if v.__class__ is YVar),
    )


# ---------------------------------------------------------------- stripping

def recursive_calls(t: Term) -> list[tuple[tuple[int, ...], App]]:
    return [(p, s) for p, s in subterms(t) if s.__class__ is App and rec_index(s.symbol) is not None]


def c1_violations(t: Term) -> list[tuple[tuple[int, ...], App]]:
    """Recursive applications whose argument is not a single x-variable."""
    bad = []
    for path, app in recursive_calls(t):
        if len(app.args) != 1 or app.args[0].__class__ is not XVar:
            bad.append((path, app))
    return bad


def c2_violations(t: Term) -> list[tuple[int | None, list[int]]]:
    """x-indices that occur under two different recursive symbols."""
    seen: dict[int | None, set[int]] = {}
    for _, app in recursive_calls(t):
        if len(app.args) == 1 and app.args[0].__class__ is XVar:
            seen.setdefault(app.args[0].index, set()).add(rec_index(app.symbol))
    return [(i, sorted(js)) for i, js in seen.items() if len(js) > 1]


def strip_recursive(t: Term) -> tuple[Term, CallMap]:
    """Replace each ``f_j(x_i)`` by ``y_i``; return the stripped term and the call map."""
    bad = c1_violations(t)
    if bad:
        path, app = bad[0]
        raise StrippingError("C1", f"{render_term(app)} is not of the form f_j(x_i)", path)
    clash = c2_violations(t)
    if clash:
        i, js = clash[0]
        xi = "x[i]" if i is None else f"x{i}"
        raise StrippingError("C2", f"{xi} appears under " + " and ".join(f"f{j}" for j in js))
    calls = CallMap()

    def go(s: Term) -> Term:
        cls = s.__class__
        if cls is App:
            j = rec_index(s.symbol)
            if j is not None:
                i = s.args[0].index
                calls.entries[i] = (j, i)
                return YVar(i)
            return App(s.symbol, tuple(go(a) for a in s.args))
        if cls is VariadicList:
            return VariadicList(go(s.body), s.descending)
        return s

    return go(t), calls


def expand_calls(calls: CallMap, arity: int) -> CallMap:
    """Concrete call map for an expanded variadic template."""
    out = CallMap()
    for yi, (j, xi) in calls.entries.items():
        if yi is None:
            for n in range(1, arity + 1):
                out.entries[n] = (j, n)
        else:
            out.entries[yi] = (j, xi)
    return out


# ---------------------------------------------------------------- evaluation

def substitute(t: Term, b: Binding, meter: Meter | None = None) -> Term:
    """Simultaneously replace variables by literal values.

    A ``listof`` node is expanded at the largest index bound in ``b``.
    Charges the size of the resulting ground term.
    """
    if has_variadic(t):
        arity = max(list(b.x_values) + list(b.y_values), default=0)
        t = expand(t, arity)

    def go(s: Term) -> Term:
        cls = s.__class__
        if cls is XVar:
            try:
                return Lit(b.x_values[s.index])
            except KeyError:
                raise UnboundVariable(str(s)) from None
        if cls is YVar:
            try:
                return Lit(b.y_values[s.index])
            except KeyError:
                raise UnboundVariable(str(s)) from None
        if cls is App:
            if rec_index(s.symbol) is not None:
                raise ValueError(f"recursive symbol {s.symbol} in substitution; strip first")
            return App(s.symbol, tuple(go(a) for a in s.args))
        return s

    ground = go(t)
    if meter is not None:
        meter.charge("replace", term_size(ground))
    return ground


def eval_ground(t: Term, ops: Mapping, meter: Meter | None = None) -> Element:
    """Bottom-up, left-to-right evaluation of a ground term.

    Each base application charges its declared cost on the sum of its
    argument sizes.  Domain errors propagate as ``DomainError``.
    """
    cls = t.__class__
    if cls is Lit:
        return t.value
    if cls is Const:
        return Atom(t.name)
    if cls is App:
        op = ops.get(t.symbol)
        if op is None:
            raise ValueError(f"no base operation {t.symbol!r}")
        args = [eval_ground(a, ops, meter) for a in t.args]
        if meter is not None:
            meter.charge("base", op.charge([a.size for a in args]))
        try:
            return op.impl(*args)
        except DomainError:
            raise
        except TypeError as exc:
            raise DomainError(f"{t.symbol}: {exc}") from None
    raise ValueError(f"not a ground term: {render_term(t)}")
