"""Checked recursion over hereditarily finite lists."""
from __future__ import annotations

from .hwm import EMPTY, FALSE, Alphabet, Atom, FList, parse_element, render_element
from .system import GNFSystem, load_system, parse_system, shipped

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "FALSE",
    "Alphabet",
    "Atom",
    "FList",
    "GNFSystem",
    "load_system",
    "parse_element",
    "parse_system",
    "render_element",
    "shipped",
]
