"""Hereditarily finite lists over a finite atom alphabet.

Elements are immutable trees.  ``size`` is the node count and ``rank`` the
nesting depth; both are computed once at construction so that the
evaluator can read them in O(1).
"""
from __future__ import annotations

import re
from operator import attrgetter
from typing import Iterable, Sequence

from .errors import ElementSyntaxError

ATOM_RE = re.compile(r"[a-z][a-z0-9_]*")
FALSE_NAME = "false"


class Atom(str):
    """An atom.  Interned, so ``Atom(n) is Atom(n)``.

    Atoms subclass ``str`` (and lists ``tuple``) so that hashing and
    structural equality run in C; the evaluator keys large memo tables on
    elements.  Length and iteration are disabled to keep atoms opaque.
    """

    size = 1
    rank = 0
    children: tuple = ()
    _interned: dict = {}

    def __new__(cls, name: str):
        atom = cls._interned.get(name)
        if atom is None:
            atom = str.__new__(cls, name)
            atom.name = str(name)
            cls._interned[name] = atom
        return atom

    def __len__(self):
        raise TypeError("atoms have no length")

    def __iter__(self):
        raise TypeError("atoms are not iterable")

    def __bool__(self):
        return True

    def __repr__(self):
        return f"Atom({self.name})"

    def __reduce__(self):
        return (Atom, (self.name,))


_size = attrgetter("size")
_rank = attrgetter("rank")


class FList(tuple):
    """A finite list of elements; the tuple items are the children."""

    def __new__(cls, children: Iterable[Element] = ()):
        self = tuple.__new__(cls, children)
        self.size = 1 + sum(map(_size, self))
        self.rank = 1 + max(map(_rank, self)) if self else 1
        return self

    @property
    def children(self) -> tuple[Element, ...]:
        return self

    def __repr__(self):
        return f"FList{list(self)!r}"

    def __reduce__(self):
        return (FList, (tuple(self),))


_tuple_new = tuple.__new__


def make_list(children: tuple, size: int) -> FList:
    """Build a list whose size the caller already knows (trusted, unchecked)."""
    self = _tuple_new(FList, children)
    self.size = size
    self.rank = 1 + max(map(_rank, children)) if children else 1
    return self


Element = Atom | FList

FALSE = Atom(FALSE_NAME)
EMPTY = FList()


def is_atom(e: Element) -> bool:
    return e.__class__ is Atom


def is_false(e: Element) -> bool:
    return e.__class__ is Atom and e.name == FALSE_NAME


def size(e: Element) -> int:
    return e.size


def rank(e: Element) -> int:
    return e.rank


def components(e: Element) -> tuple[Element, ...]:
    """Children of a list, in order; atoms have none."""
    return e.children


class Alphabet:
    """A finite set of atom names; always contains ``false``."""

    def __init__(self, names: Iterable[str] = ()):
        ordered: list[str] = []
        for name in names:
            if not ATOM_RE.fullmatch(name):
                raise ValueError(f"invalid atom name {name!r}")
            if name not in ordered:
                ordered.append(name)
        if FALSE_NAME not in ordered:
            ordered.append(FALSE_NAME)
        self.names = tuple(ordered)
        self._atoms = {n: Atom(n) for n in self.names}

    def __contains__(self, name) -> bool:
        return name in self._atoms

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and set(self.names) == set(other.names)

    def __repr__(self):
        return f"Alphabet({', '.join(self.names)})"

    def atom(self, name: str) -> Atom:
        try:
            return self._atoms[name]
        except KeyError:
            raise KeyError(f"unknown atom {name!r}") from None

    @property
    def user_names(self) -> tuple[str, ...]:
        """Declared atoms other than the reserved ``false``."""
        return tuple(n for n in self.names if n != FALSE_NAME)


class _ElementParser:
    def __init__(self, text: str, alphabet: Alphabet | None):
        self.text = text
        self.pos = 0
        self.alphabet = alphabet

    def error(self, msg: str) -> ElementSyntaxError:
        return ElementSyntaxError(msg, self.text, self.pos)

    def skip_ws(self):
        text = self.text
        while self.pos < len(text) and text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Element:
        e = self.element()
        if self.peek():
            raise self.error("trailing input")
        return e

    def element(self) -> Element:
        ch = self.peek()
        if ch == "<":
            self.pos += 1
            children: list[Element] = []
            if self.peek() == ">":
                self.pos += 1
                return FList(children)
            while True:
                children.append(self.element())
                ch = self.peek()
                if ch == ",":
                    self.pos += 1
                elif ch == ">":
                    self.pos += 1
                    return FList(children)
                else:
                    raise self.error("expected ',' or '>'")
        m = ATOM_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected atom or '<'" if ch else "unexpected end of input")
        name = m.group()
        if self.alphabet is not None and name not in self.alphabet:
            raise self.error(f"unknown atom {name!r}")
        self.pos = m.end()
        return Atom(name)


def parse_element(text: str, alphabet: Alphabet | None = None) -> Element:
    """Parse ``<a,<b>>``-style text.  With an alphabet, unknown atoms are errors."""
    return _ElementParser(text, alphabet).parse()


def render_element(e: Element) -> str:
    if e.__class__ is Atom:
        return e.name
    return "<" + ",".join(render_element(c) for c in e.children) + ">"


def order_key(e: Element, atom_order: dict[str, int] | None = None):
    """Canonical order within one size: atoms first (alphabet order), then
    lists compared child by child on (size, order_key)."""
    if e.__class__ is Atom:
        idx = atom_order.get(e.name, len(atom_order)) if atom_order else 0
        return (0, idx, e.name)
    return (1, tuple((c.size, order_key(c, atom_order)) for c in e.children))


def sort_key(e: Element, atom_order: dict[str, int] | None = None):
    """Total order used for enumeration and reports: size, then ``order_key``."""
    return (e.size, order_key(e, atom_order))


def flat_list(atoms: Sequence[str], n: int) -> FList:
    """A list of ``n`` atoms cycling through ``atoms``."""
    return FList(Atom(atoms[i % len(atoms)]) for i in range(n))
