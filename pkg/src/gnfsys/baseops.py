"""Base operations of the signature, with cost and size metadata.

A system file declares which operations it uses and what they cost; the
implementations come from the fixed library in ``LIBRARY``.  Declarations
must be at least as pessimistic as the library's intrinsic metadata.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DomainError
from .hwm import Atom, Element, FList

VARIADIC = -1


@dataclass(frozen=True)
class CostPoly:
    """Non-negative integer polynomial ``sum(c_j * n**j)`` in the total argument size n."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if not coeffs:
            coeffs = (0,)
        if any(c < 0 for c in coeffs):
            raise ValueError("cost coefficients must be non-negative")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: int) -> int:
        total = 0
        for c in reversed(self.coeffs):
            total = total * n + c
        return total

    def fast(self):
        """An equivalent plain callable, specialised for degree <= 1."""
        if self.degree == 0:
            c0 = self.coeffs[0]
            return lambda n: c0
        if self.degree == 1:
            c0, c1 = self.coeffs
            return lambda n: c0 + c1 * n
        return self.__call__

    def __add__(self, other: CostPoly) -> CostPoly:
        a, b = self.coeffs, other.coeffs
        m = max(len(a), len(b))
        return CostPoly(tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(m)))

    def __mul__(self, other: CostPoly) -> CostPoly:
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return CostPoly(tuple(out))

    def compose(self, inner: CostPoly) -> CostPoly:
        """``self(inner(n))``."""
        result = CostPoly((0,))
        for c in reversed(self.coeffs):
            result = result * inner + CostPoly((c,))
        return result

    def dominates(self, other: CostPoly) -> bool:
        """Coefficient-wise ``self >= other``; implies pointwise for n >= 0."""
        a, b = self.coeffs, other.coeffs
        return all((a[i] if i < len(a) else 0) >= c for i, c in enumerate(b))

    def dominated_by(self, C: int, p: int) -> bool:
        """Exact test of ``self(n) <= C * max(1, n)**p`` for all n >= 0.

        With non-negative coefficients, ``c_j n^j <= c_j n^p`` for n >= 1 and
        j <= p, so the test reduces to degree <= p and self(1) <= C.
        """
        return self.degree <= p and self(1) <= C

    def render(self) -> str:
        parts = []
        for j, c in enumerate(self.coeffs):
            if c == 0 and (j > 0 or len(self.coeffs) > 1):
                continue
            if j == 0:
                parts.append(str(c))
            elif j == 1:
                parts.append("n" if c == 1 else f"{c}*n")
            else:
                parts.append(f"n^{j}" if c == 1 else f"{c}*n^{j}")
        return "+".join(parts) if parts else "0"

    @classmethod
    def constant(cls, c: int) -> CostPoly:
        return cls((c,))

    @classmethod
    def linear(cls, c0: int, c1: int) -> CostPoly:
        return cls((c0, c1))


_TERM_RE = re.compile(r"^(?:(\d+)\s*\*?\s*)?(n(?:\s*\^\s*(\d+))?)?$")


def parse_cost(text: str) -> CostPoly:
    """Parse ``1+n``, ``2 + 3*n + n^2`` and the like."""
    coeffs: dict[int, int] = {}
    for raw in text.split("+"):
        term = raw.strip()
        m = _TERM_RE.match(term)
        if not term or not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"bad cost term {raw.strip()!r}")
        coef = int(m.group(1)) if m.group(1) is not None else 1
        if m.group(2) is None:
            deg = 0
        else:
            deg = int(m.group(3)) if m.group(3) is not None else 1
        coeffs[deg] = coeffs.get(deg, 0) + coef
    top = max(coeffs)
    return CostPoly(tuple(coeffs.get(j, 0) for j in range(top + 1)))


@dataclass(frozen=True)
class SizeBound:
    """Declared output-size behaviour of a base operation.

    ``additive``: out <= c + sum(args); ``selective``: out <= max(args);
    ``constant``: out <= c.
    """

    kind: str
    c: int = 0

    def __post_init__(self):
        if self.kind not in ("additive", "selective", "constant"):
            raise ValueError(f"unknown size bound kind {self.kind!r}")
        if self.c < 0:
            raise ValueError("size bound constant must be non-negative")

    def bound(self, arg_sizes: Sequence[int]) -> int:
        if self.kind == "additive":
            return self.c + sum(arg_sizes)
        if self.kind == "selective":
            return max(arg_sizes, default=0)
        return self.c

    def render(self) -> str:
        if self.kind == "selective":
            return "selective"
        return f"{self.kind}({self.c})"

    def implies(self, intrinsic: SizeBound, min_arg_total: int) -> bool:
        """Whether this declaration is a sound over-approximation of ``intrinsic``."""
        k = intrinsic.kind
        if self.kind == "additive":
            if k == "additive":
                return self.c >= intrinsic.c
            if k == "selective":
                return True
            return intrinsic.c <= self.c + min_arg_total
        if self.kind == "selective":
            if k == "selective":
                return True
            if k == "constant":
                return intrinsic.c <= 1
            return False
        return k == "constant" and self.c >= intrinsic.c


_SIZE_RE = re.compile(r"^(additive|constant)\s*\(\s*(\d+)\s*\)$|^selective$")


def parse_size_bound(text: str) -> SizeBound:
    text = text.strip()
    m = _SIZE_RE.match(text)
    if not m:
        raise ValueError(f"bad size bound {text!r}")
    if text == "selective":
        return SizeBound("selective")
    return SizeBound(m.group(1), int(m.group(2)))


def _need_list(name: str, e: Element) -> FList:
    if e.__class__ is not FList:
        raise DomainError(f"{name}: expected a list, got atom {e.name}")
    return e


def _list(*args: Element) -> Element:
    return FList(args)


def _conc(a: Element, b: Element) -> Element:
    return FList(_need_list("conc", a).children + _need_list("conc", b).children)


def _cons(a: Element, b: Element) -> Element:
    return FList((a,) + _need_list("cons", b).children)


def _head(a: Element) -> Element:
    lst = _need_list("head", a)
    if not lst.children:
        raise DomainError("head: empty list")
    return lst.children[0]


def _tail(a: Element) -> Element:
    lst = _need_list("tail", a)
    if not lst.children:
        raise DomainError("tail: empty list")
    return FList(lst.children[1:])


def _rev(a: Element) -> Element:
    return FList(reversed(_need_list("rev", a).children))


@dataclass(frozen=True)
class LibraryOp:
    name: str
    arity: int
    impl: Callable[..., Element]
    min_cost: CostPoly
    size_bound: SizeBound
    doc: str


LIBRARY: dict[str, LibraryOp] = {
    op.name: op
    for op in (
        LibraryOp("list", VARIADIC, _list, CostPoly.linear(1, 1), SizeBound("additive", 1),
                  "list(a1,...,ak) = <a1,...,ak>"),
        LibraryOp("conc", 2, _conc, CostPoly.linear(1, 1), SizeBound("additive", 0),
                  "concatenation of two lists"),
        LibraryOp("cons", 2, _cons, CostPoly.linear(1, 1), SizeBound("additive", 0),
                  "cons(e, <a1..ak>) = <e,a1..ak>"),
        LibraryOp("head", 1, _head, CostPoly.constant(1), SizeBound("selective"),
                  "first child of a non-empty list"),
        LibraryOp("tail", 1, _tail, CostPoly.linear(1, 1), SizeBound("selective"),
                  "all but the first child"),
        LibraryOp("rev", 1, _rev, CostPoly.linear(1, 1), SizeBound("selective"),
                  "top-level reversal"),
    )
}


@dataclass(frozen=True)
class BaseOpDecl:
    name: str
    arity: int
    cost: CostPoly
    size_bound: SizeBound
    impl: Callable[..., Element]

    @property
    def variadic(self) -> bool:
        return self.arity == VARIADIC

    def charge(self, arg_sizes: Sequence[int]) -> int:
        return self.cost(sum(arg_sizes))

    def render(self) -> str:
        arity = "*" if self.variadic else str(self.arity)
        return f"{self.name} arity={arity} cost={self.cost.render()} size={self.size_bound.render()}"


def declare(name: str, arity: int, cost: CostPoly, size_bound: SizeBound) -> BaseOpDecl:
    """Bind a declaration to its library implementation, rejecting unsound metadata."""
    if name not in LIBRARY:
        raise ValueError(f"no implementation for base operation {name!r}")
    lib = LIBRARY[name]
    if arity != lib.arity:
        want = "*" if lib.arity == VARIADIC else lib.arity
        raise ValueError(f"{name}: declared arity does not match library arity {want}")
    if cost.coeffs[0] < 1:
        raise ValueError(f"{name}: cost must charge at least 1 per application")
    if not cost.dominates(lib.min_cost):
        raise ValueError(f"{name}: declared cost {cost.render()} under-states intrinsic {lib.min_cost.render()}")
    min_total = 0 if lib.arity == VARIADIC else lib.arity
    if not size_bound.implies(lib.size_bound, min_total):
        raise ValueError(
            f"{name}: declared size bound {size_bound.render()} is unsound for intrinsic {lib.size_bound.render()}"
        )
    return BaseOpDecl(name, arity, cost, size_bound, lib.impl)


def default_decl(name: str) -> BaseOpDecl:
    lib = LIBRARY[name]
    return BaseOpDecl(name, lib.arity, lib.min_cost, lib.size_bound, lib.impl)


__all__ = [
    "BaseOpDecl",
    "CostPoly",
    "LIBRARY",
    "SizeBound",
    "VARIADIC",
    "declare",
    "default_decl",
    "parse_cost",
    "parse_size_bound",
]
