"""Bound arithmetic, audits and exponent fitting.

All bounds are exact Python integers.  ``audit`` evaluates each input in its
own session so the reported steps do not depend on input order.
"""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .errors import EvaluationError, RuntimeViolation
from .hwm import EMPTY, Atom, Element, FList, parse_element, render_element
from .meter import COST_MODEL_VERSION


def _check_constants(C: int, p: int) -> None:
    if C < 1 or p < 1:
        raise ValueError(f"C and p must be positive integers, got C={C}, p={p}")


def bound_value_size(C: int, p: int, w: Element | int) -> int:
    """C * |w|^p."""
    _check_constants(C, p)
    n = w if isinstance(w, int) else w.size
    return C * n ** p


def bound_time(C: int, p: int, w: Element | None = None, *, size: int | None = None, rank: int | None = None) -> int:
    """36 * C^(p+1) * (rank + 1) * size^(p^2 + 1)."""
    _check_constants(C, p)
    if w is not None:
        size, rank = w.size, w.rank
    if size is None or rank is None:
        raise ValueError("need an element or both size and rank")
    return 36 * C ** (p + 1) * (rank + 1) * size ** (p * p + 1)


@dataclass(frozen=True)
class Measurement:
    symbol: int
    input_size: int
    input_rank: int
    output_size: int
    steps: int
    C: int
    p: int

    @property
    def bound_size(self) -> int:
        return bound_value_size(self.C, self.p, self.input_size)

    @property
    def bound_time(self) -> int:
        return bound_time(self.C, self.p, size=self.input_size, rank=self.input_rank)

    @property
    def size_ok(self) -> bool:
        return self.output_size <= self.bound_size

    @property
    def time_ok(self) -> bool:
        return self.steps <= self.bound_time

    def render(self) -> str:
        return (
            f"steps={self.steps} bound_time={self.bound_time} "
            f"size={self.input_size} rank={self.input_rank} "
            f"output_size={self.output_size} bound_size={self.bound_size}"
        )


@dataclass
class AuditEntry:
    w: str
    size: int
    rank: int
    steps: int | None
    output_size: int | None
    bound_size: int
    bound_time: int
    ok: bool
    result: str | None = None
    error: str | None = None


@dataclass
class Violation:
    w: str
    bound: str  # "size", "time" or "runtime"
    detail: str


@dataclass
class Fit:
    exponent: float
    residual: float
    points: int


@dataclass
class AuditReport:
    system: str
    symbol: int
    inputs: list[AuditEntry] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    fitted_exponent: Fit | None = None
    cost_model_version: str = COST_MODEL_VERSION

    @property
    def max_time_ratio(self) -> float:
        ratios = [e.steps / e.bound_time for e in self.inputs if e.steps is not None]
        return max(ratios, default=0.0)

    @property
    def max_size_ratio(self) -> float:
        ratios = [e.output_size / e.bound_size for e in self.inputs if e.output_size is not None]
        return max(ratios, default=0.0)

    def summary(self) -> dict:
        return {
            "inputs": len(self.inputs),
            "violations": len(self.violations),
            "max_time_ratio": round(self.max_time_ratio, 9),
            "max_size_ratio": round(self.max_size_ratio, 9),
        }

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "symbol": f"f{self.symbol}",
            "cost_model_version": self.cost_model_version,
            "inputs": [asdict(e) for e in self.inputs],
            "violations": [asdict(v) for v in self.violations],
            "fitted_exponent": None if self.fitted_exponent is None else asdict(self.fitted_exponent),
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> AuditReport:
        fit = d.get("fitted_exponent")
        return cls(
            system=d["system"],
            symbol=int(d["symbol"].lstrip("f")),
            inputs=[AuditEntry(**e) for e in d["inputs"]],
            violations=[Violation(**v) for v in d["violations"]],
            fitted_exponent=None if fit is None else Fit(**fit),
            cost_model_version=d["cost_model_version"],
        )

    @classmethod
    def from_json(cls, text: str) -> AuditReport:
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["w", "size", "rank", "steps", "output_size", "bound_size", "bound_time", "ok"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for e in self.inputs:
            writer.writerow(["" if getattr(e, c) is None else getattr(e, c) for c in cols])
        return buf.getvalue()

    def render_text(self) -> str:
        s = self.summary()
        lines = [
            f"system {self.system} f{self.symbol} ({self.cost_model_version})",
            f"inputs: {s['inputs']}",
            f"violations: {s['violations']}",
        ]
        lines += [f"  {v.bound}: {v.w}: {v.detail}" for v in self.violations]
        lines.append(f"max steps/bound_time: {s['max_time_ratio']}")
        lines.append(f"max output/bound_size: {s['max_size_ratio']}")
        if self.fitted_exponent is not None:
            f = self.fitted_exponent
            lines.append(f"fitted exponent: {f.exponent:.4f} (residual {f.residual:.4g}, {f.points} points)")
        return "\n".join(lines) + "\n"


def audit(sys, inputs: Iterable[Element], *, symbol: int = 1, force: bool = False, fit: bool = False) -> AuditReport:
    """Evaluate each input in a fresh session and compare against both bounds.

    Raises ``NotAccepted`` for a system that fails static checking unless
    ``force`` is set.
    """
    from .engine import _require_accepted, evaluate  # engine depends on Measurement

    _require_accepted(sys, force)
    fam = sys.family(symbol)
    report = AuditReport(sys.name, symbol)
    measurements = []
    for w in inputs:
        text = render_element(w)
        bsize = bound_value_size(fam.C, fam.p, w)
        btime = bound_time(fam.C, fam.p, w)
        try:
            out = evaluate(sys, symbol, w, force=force)
        except EvaluationError as exc:
            kind = "runtime" if isinstance(exc, RuntimeViolation) else "error"
            report.inputs.append(AuditEntry(text, w.size, w.rank, None, None, bsize, btime, False, error=str(exc)))
            report.violations.append(Violation(text, kind, str(exc)))
            continue
        m = out.measurement
        measurements.append(m)
        ok = m.size_ok and m.time_ok
        report.inputs.append(AuditEntry(
            text, w.size, w.rank, m.steps, m.output_size, bsize, btime, ok, result=render_element(out.result)
        ))
        if not m.size_ok:
            report.violations.append(Violation(text, "size", f"output size {m.output_size} > {bsize}"))
        if not m.time_ok:
            report.violations.append(Violation(text, "time", f"steps {m.steps} > {btime}"))
    if fit:
        try:
            report.fitted_exponent = fit_exponent(measurements)
        except ValueError:
            report.fitted_exponent = None
    return report


def fit_exponent(measurements: Sequence[Measurement]) -> Fit:
    """Least-squares slope of log(steps) against log(size)."""
    import numpy as np

    if len(measurements) < 3:
        raise ValueError("need at least 3 measurements to fit an exponent")
    sizes = np.array([m.input_size for m in measurements], dtype=float)
    steps = np.array([m.steps for m in measurements], dtype=float)
    if np.all(sizes == sizes[0]):
        raise ValueError("degenerate fit: all input sizes are equal")
    x, y = np.log(sizes), np.log(steps)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(res[0]) if len(res) else 0.0
    return Fit(float(coef[0]), residual, len(measurements))


# ---------------------------------------------------------------- input families

def flat_lists(atoms: Sequence[str], sizes: Iterable[int]) -> list[Element]:
    """Lists of atoms, one per requested size (size n has n-1 atoms)."""
    out = []
    for n in sizes:
        if n < 1:
            raise ValueError("sizes must be positive")
        out.append(FList(Atom(atoms[i % len(atoms)]) for i in range(n - 1)))
    return out


def chain(depth: int, leaf: Element = EMPTY) -> Element:
    """``depth`` nested singleton lists around ``leaf``."""
    e = leaf
    for _ in range(depth):
        e = FList((e,))
    return e


def balanced(atoms: Sequence[str], size: int) -> Element:
    """A roughly balanced binary-branching tree with exactly ``size`` nodes."""
    if size < 1:
        raise ValueError("size must be positive")
    if size == 1:
        return Atom(atoms[0])
    rest = size - 1
    if rest == 1:
        return FList((Atom(atoms[-1]),))
    left = rest // 2
    return FList((balanced(atoms, left), balanced(atoms[1:] + atoms[:1], rest - left)))


def random_element(rng: random.Random, atoms: Sequence[str], size: int) -> Element:
    """Uniform-ish random element with exactly ``size`` nodes."""
    if size == 1:
        return rng.choice([Atom(a) for a in atoms] + [EMPTY])
    rest = size - 1
    children = []
    while rest > 0:
        part = rng.randint(1, rest)
        children.append(random_element(rng, atoms, part))
        rest -= part
    return FList(children)


def generated_inputs(atoms: Sequence[str], max_size: int, *, per_size: int = 4, seed: int = 0) -> list[Element]:
    """Deterministic structured + random inputs for every size 1..max_size."""
    rng = random.Random(seed)
    seen: dict[Element, None] = {}
    for n in range(1, max_size + 1):
        for e in flat_lists(atoms, [n]) + [chain(n - 1), balanced(list(atoms), n)]:
            seen.setdefault(e)
        for _ in range(per_size):
            seen.setdefault(random_element(rng, atoms, n))
    return list(seen)


def parse_inputs(text: str, alphabet=None) -> list[Element]:
    """One element per non-blank line; ``#`` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_element(line, alphabet))
    return out
