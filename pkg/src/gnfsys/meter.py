"""Abstract step accounting.

Every charge is a positive integer; the total is the sum of the event log.
The kinds mirror the cost components of the polynomial-time argument:
initial lookup, gamma emission, replacement (strip + substitute), base
operations, memo traffic and recursive-call dispatch.
"""
from __future__ import annotations

COST_MODEL_VERSION = "gnf-cost/1"

GUARD_PRIMITIVE = 1
RULE_SCANNED = 1
DISPATCH = 1

KINDS = ("initial", "gamma", "replace", "base", "memo", "dispatch")


def initial_lookup_cost(w_size: int) -> int:
    return 1 + w_size


def memo_cost(w_size: int) -> int:
    return 1 + w_size


class Meter:
    __slots__ = ("steps", "by_kind")

    def __init__(self):
        self.steps = 0
        self.by_kind = dict.fromkeys(KINDS, 0)

    def charge(self, kind: str, amount: int) -> None:
        if amount < 1:
            raise ValueError(f"non-positive charge {amount} for {kind}")
        self.steps += amount
        self.by_kind[kind] += amount

    def __repr__(self):
        return f"Meter(steps={self.steps})"


class NullMeter(Meter):
    """Accepts charges and discards them."""

    def charge(self, kind: str, amount: int) -> None:
        pass
