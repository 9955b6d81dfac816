"""GNF systems: signature, initial functions, gamma rule programs and the
per-family constants (C, p).

Loading enforces the structural invariants and the domination contract:
(C, p) must bound the declared base-op costs, the initial lookup, the
gamma program and the replacement cost of every template in the family.
The five side conditions themselves live in ``checks``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

from . import meter as cm
from .baseops import VARIADIC, BaseOpDecl, CostPoly, declare, parse_cost, parse_size_bound
from .errors import InternalDefect, RuntimeViolation, StrippingError, SystemLoadError, TermSyntaxError
from .hwm import FALSE, FALSE_NAME, Alphabet, Atom, Element, FList, parse_element, render_element
from .meter import Meter
from .terms import (
    LIST_OP,
    App,
    CallMap,
    Lit,
    XVar,
    Const,
    Signature,
    Term,
    VariadicList,
    YVar,
    c1_violations,
    c2_violations,
    expand,
    expand_calls,
    has_variadic,
    max_x_index,
    parse_term,
    rec_index,
    render_term,
    strip_recursive,
    subterms,
    term_size,
)

# ---------------------------------------------------------------- guards

GUARD_KINDS = ("is_atom", "is_list", "arity=", "arity>=", "head_is")


@dataclass(frozen=True)
class Primitive:
    kind: str
    arg: int | str | None = None

    def test(self, w: Element) -> bool:
        kind = self.kind
        if kind == "is_atom":
            return w.__class__ is Atom
        if kind == "is_list":
            return w.__class__ is FList
        if w.__class__ is not FList:
            return False
        if kind == "arity=":
            return len(w.children) == self.arg
        if kind == "arity>=":
            return len(w.children) >= self.arg
        # head_is
        return bool(w.children) and w.children[0].__class__ is Atom and w.children[0].name == self.arg

    def render(self) -> str:
        if self.kind == "arity=":
            return f"arity = {self.arg}"
        if self.kind == "arity>=":
            return f"arity >= {self.arg}"
        if self.kind == "head_is":
            return f"head_is {self.arg}"
        return self.kind


_PRIM_RE = re.compile(r"^(?:(is_atom|is_list)|arity\s*(>=|=)\s*(\d+)|head_is\s+([a-z][a-z0-9_]*))$")


def parse_guard(text: str) -> tuple[Primitive, ...]:
    prims = []
    for part in text.split("&"):
        part = part.strip()
        m = _PRIM_RE.match(part)
        if not m:
            raise ValueError(f"bad guard primitive {part!r}")
        if m.group(1):
            prims.append(Primitive(m.group(1)))
        elif m.group(2):
            prims.append(Primitive("arity" + m.group(2), int(m.group(3))))
        else:
            prims.append(Primitive("head_is", m.group(4)))
    return tuple(prims)


@dataclass(frozen=True)
class GammaRule:
    guard: tuple[Primitive, ...]
    template: Term

    @cached_property
    def variadic(self) -> bool:
        return has_variadic(self.template)

    @cached_property
    def max_x(self) -> int:
        return max_x_index(self.template)

    @cached_property
    def exact_arity(self) -> int | None:
        for prim in self.guard:
            if prim.kind == "arity=":
                return prim.arg
            if prim.kind == "is_atom":
                return 0
        return None

    @property
    def min_arity(self) -> int:
        lo = 0
        for prim in self.guard:
            if prim.kind in ("arity=", "arity>="):
                lo = max(lo, prim.arg)
            elif prim.kind == "head_is":
                lo = max(lo, 1)
        return lo

    def xbar_length(self, k: int) -> int:
        """Length of the variable tuple the template is instantiated with on a
        k-component input (compared against k by the arity guard)."""
        if self.variadic:
            return k
        exact = self.exact_arity
        return exact if exact is not None else self.max_x

    def check_arities(self) -> list[int]:
        """Arities at which the template is instantiated for static checking.

        Variadic templates are affine in the arity once it exceeds every
        concrete index, so two arities past that point suffice to
        extrapolate; callers use the last two entries for slope checks.
        """
        exact = self.exact_arity
        if exact is not None:
            return [exact]
        if not self.variadic:
            return [max(max_x_index(self.template), self.min_arity)]
        lo = self.min_arity
        hi = max(lo, max_x_index(self.template)) + 2
        return list(range(lo, hi + 1))

    @property
    def unbounded(self) -> bool:
        return self.variadic and self.exact_arity is None

    def render(self) -> str:
        return " & ".join(p.render() for p in self.guard) + " => " + render_term(self.template)


@dataclass
class InitialFn:
    table: dict[Element, Element] = field(default_factory=dict)
    atoms_identity: bool = False

    def lookup(self, w: Element) -> Element | None:
        v = self.table.get(w)
        if v is not None:
            return v
        if self.atoms_identity and w.__class__ is Atom and w.name != FALSE_NAME:
            return w
        return None


@dataclass(frozen=True)
class Instance:
    """A gamma template instantiated at one arity, stripped, with cached facts."""

    rule_index: int
    arity: int
    emitted: Term
    emitted_size: int
    stripped: Term
    stripped_size: int
    calls: CallMap
    y_indices: tuple[int, ...]


@dataclass
class Family:
    index: int
    C: int
    p: int
    initial: InitialFn
    rules: list[GammaRule]
    _instances: dict = field(default_factory=dict, repr=False, compare=False)
    compiled: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def symbol(self) -> str:
        return f"f{self.index}"

    def bound(self, n: int) -> int:
        """C * max(1, n)^p, the per-component budget used by runtime C4 checks."""
        return self.C * max(1, n) ** self.p

    def instance(self, r: int, k: int) -> Instance:
        key = (r, k)
        inst = self._instances.get(key)
        if inst is None:
            inst = self._instances[key] = make_instance(self, r, k)
        return inst


def make_instance(fam: Family, r: int, k: int) -> Instance:
    rule = fam.rules[r]
    emitted = expand(rule.template, k)
    problem = instance_problem(emitted)
    if problem:
        raise InternalDefect(f"f{fam.index} rule#{r + 1} at arity {k}: emitted {render_term(emitted)} fails {problem}")
    stripped, calls = strip_recursive(emitted)
    return Instance(
        rule_index=r,
        arity=k,
        emitted=emitted,
        emitted_size=term_size(emitted),
        stripped=stripped,
        stripped_size=term_size(stripped),
        calls=calls,
        y_indices=tuple(sorted({s.index for _, s in subterms(stripped) if s.__class__ is YVar})),
    )


def instance_problem(emitted: Term) -> str | None:
    """C1-C3 on a concrete emitted term; ``None`` if it passes."""
    if c1_violations(emitted):
        return "C1"
    if c2_violations(emitted):
        return "C2"
    try:
        stripped, _ = strip_recursive(emitted)
    except StrippingError as exc:
        return exc.condition
    xs = {s.index for _, s in subterms(stripped) if s.__class__ is XVar}
    ys = {s.index for _, s in subterms(stripped) if s.__class__ is YVar}
    if xs & ys:
        return "C3"
    return None


@dataclass
class GNFSystem:
    alphabet: Alphabet
    base_ops: dict[str, BaseOpDecl]
    families: list[Family]
    meta: dict[str, str] = field(default_factory=dict)
    name: str = "<system>"
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def family(self, i: int) -> Family:
        if not 1 <= i <= len(self.families):
            raise KeyError(f"no recursive symbol f{i}")
        return self.families[i - 1]

    @property
    def n(self) -> int:
        return len(self.families)

    def signature(self) -> Signature:
        return Signature(
            base_arity={name: op.arity for name, op in self.base_ops.items()},
            n_recursive=self.n,
            alphabet=self.alphabet,
        )


# ---------------------------------------------------------------- runtime hooks

def initial_lookup(sys: GNFSystem, i: int, w: Element, meter: Meter | None = None) -> Element | None:
    """f_i(w) if the initial function is defined there, else ``None``.

    Charges 1 + |w| and checks it against the family budget C * |w|^p.
    """
    fam = sys.family(i)
    cost = cm.initial_lookup_cost(w.size)
    if meter is not None:
        meter.charge("initial", cost)
    if cost > fam.bound(w.size):
        raise RuntimeViolation("C4", i, f"initial lookup on {render_element(w)}", cost, fam.bound(w.size),
                               "initial lookup exceeds C*|w|^p")
    return fam.initial.lookup(w)


def select_rule(fam: Family, w: Element) -> tuple[int | None, int]:
    """First rule whose guard accepts w, and the gamma cost excluding the emitted term."""
    cost = 0
    for r, rule in enumerate(fam.rules):
        cost += cm.RULE_SCANNED
        ok = True
        for prim in rule.guard:
            cost += cm.GUARD_PRIMITIVE
            if not prim.test(w):
                ok = False
                break
        if ok:
            return r, cost
    return None, cost


def apply_gamma(sys: GNFSystem, i: int, w: Element, meter: Meter | None = None) -> Term | Atom:
    """gamma_i(w): the first matching rule's template at w's arity, or ``FALSE``."""
    result, _ = gamma_step(sys, i, w, meter)
    return FALSE if result is None else result.emitted


def gamma_step(sys: GNFSystem, i: int, w: Element, meter: Meter | None = None) -> tuple[Instance | None, int]:
    """Shared gamma dispatch: returns the instance (or ``None``) and the charge."""
    fam = sys.family(i)
    r, cost = select_rule(fam, w)
    inst = None
    if r is not None:
        inst = fam.instance(r, len(w.children))
        cost += inst.emitted_size
    if meter is not None and cost:  # no rules scanned, nothing to charge
        meter.charge("gamma", cost)
    budget = fam.bound(w.size)
    if cost > budget:
        raise RuntimeViolation("C4", i, f"gamma on {render_element(w)}", cost, budget, "gamma cost exceeds C*|w|^p")
    return inst, cost


# ---------------------------------------------------------------- domination

def _affine_dominated(alpha: int, beta: int, C: int, p: int, n_min: int) -> bool:
    """Sufficient test of ``alpha + beta*n <= C*n^p`` for all n >= n_min >= 1."""
    if alpha + beta * n_min > C * n_min ** p:
        return False
    return beta <= C * p * n_min ** (p - 1)


def _affine_in_k(fn, lo: int = 0) -> tuple[int, int]:
    a0, a1 = fn(lo), fn(lo + 1)
    return a0 - (a1 - a0) * lo, a1 - a0


def _replacement_shape(rule: GammaRule, k: int) -> tuple[int, int]:
    """(A, m) with replacement cost <= A + m*T at arity k.

    Stripped size plus ground size is ``2*nonvar + nvars + sum(occ*|v|)``.
    """
    stripped, _ = strip_recursive(expand(rule.template, k))
    nonvar = 0
    counts: dict = {}
    for _, s in subterms(stripped):
        if s.__class__ is XVar or s.__class__ is YVar:
            counts[s] = counts.get(s, 0) + 1
        else:
            nonvar += term_size(s) if s.__class__ is Lit else 1
    nvars = sum(counts.values())
    return 2 * nonvar + nvars, max(counts.values(), default=0)


def _replacement_dominated(rule: GammaRule, C: int, p: int) -> bool:
    # T >= |x-bar| >= k, so arity k only needs T >= max(1, k)
    arities = rule.check_arities()
    for k in arities:
        A, m = _replacement_shape(rule, k)
        if not _affine_dominated(A, m, C, p, max(1, k)):
            return False
    if rule.unbounded:
        K = arities[-1]
        (A0, m0), (A1, m1) = _replacement_shape(rule, K - 1), _replacement_shape(rule, K)
        slope = A1 - A0
        if m1 != m0 or slope < 0:
            return False
        # beyond K: A(k) = A1 + slope*(k-K) <= (A1 - slope*K) + slope*T
        return _affine_dominated(A1 - slope * K, slope + m1, C, p, K)
    return True


def domination_problems(sys: GNFSystem, fam: Family) -> list[str]:
    """Reasons (C, p) fails the load-time domination contract for ``fam``."""
    C, p = fam.C, fam.p
    out = []
    used = {s.symbol for rule in fam.rules for _, s in subterms(rule.template) if s.__class__ is App}
    if any(rule.variadic for rule in fam.rules):
        used.add(LIST_OP)
    for name in sorted(used):
        op = sys.base_ops.get(name)
        if op is not None and not op.cost.dominated_by(C, p):
            out.append(f"base op {name} cost {op.cost.render()} exceeds C*n^p with C={C}, p={p}")
    if not CostPoly.linear(1, 1).dominated_by(C, p):
        out.append(f"initial lookup cost 1+|w| exceeds C*|w|^p with C={C}, p={p}")
    no_match = sum(len(rule.guard) for rule in fam.rules) + len(fam.rules)
    if no_match > C:
        out.append(f"gamma cost {no_match} of a full rule scan exceeds C with C={C}")
    # gamma: every rule scanned up to and including the firing one, then the emitted term
    prims_before = 0
    for r, rule in enumerate(fam.rules):
        scanned = prims_before + len(rule.guard) + (r + 1)
        prims_before += len(rule.guard)
        k_lo = rule.min_arity if rule.exact_arity is None else rule.exact_arity
        if rule.unbounded:
            a, b = _affine_in_k(lambda k: term_size(expand(rule.template, k)), k_lo)
        else:
            a, b = term_size(expand(rule.template, k_lo)), 0
        # k components force |w| >= k + 1, so a + b*k <= (a - b) + b*|w|
        if not _affine_dominated(scanned + a - b, b, C, p, k_lo + 1):
            out.append(f"gamma cost of rule#{r + 1} ({rule.render()}) exceeds C*|w|^p with C={C}, p={p}")
        try:
            if not _replacement_dominated(rule, C, p):
                out.append(f"replacement cost of rule#{r + 1} ({rule.render()}) exceeds C*T^p with C={C}, p={p}")
        except StrippingError:
            pass  # reported by the C1/C2 checks
    return out


# ---------------------------------------------------------------- parsing

RESERVED_ATOM_RE = re.compile(r"^(?:[xy][1-9][0-9]*|f[1-9][0-9]*|listof|asc|desc|identity|atoms)$")
_FUNC_RE = re.compile(r"^function\s+(f[1-9][0-9]*)\s*:$")
_KV_RE = re.compile(r"^(C|p)\s*=\s*(-?\d+)$")


def _indent(line: str) -> int:
    return len(line) - len(line.lstrip(" \t"))


def parse_system(text: str, name: str = "<system>", *, enforce_domination: bool = True) -> GNFSystem:
    """Parse and validate a ``.gnf`` system definition."""
    lines = []
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            lines.append((no, _indent(body), body.strip()))

    atoms: list[str] | None = None
    op_lines: list[tuple[int, str]] = []
    meta: dict[str, str] = {}
    funcs: dict[str, dict] = {}
    section = None
    cur: dict | None = None
    sub = None
    func_indent = 0
    for no, ind, line in lines:
        if ind == 0:
            sub = None
            cur = None
            if line.startswith("atoms:"):
                if atoms is not None:
                    raise SystemLoadError("duplicate atoms section", no)
                section = "atoms"
                atoms = [a.strip() for a in line[len("atoms:"):].split(",") if a.strip()]
            elif line == "baseops:":
                section = "baseops"
            elif line == "meta:":
                section = "meta"
            else:
                m = _FUNC_RE.match(line)
                if not m:
                    raise SystemLoadError(f"unknown section {line!r}", no)
                sym = m.group(1)
                if sym in funcs:
                    raise SystemLoadError(f"duplicate symbol {sym}", no)
                section = "function"
                cur = funcs[sym] = {"line": no, "C": None, "p": None, "initial": [], "rules": []}
            continue
        if section == "atoms":
            atoms.extend(a.strip() for a in line.split(",") if a.strip())
        elif section == "baseops":
            op_lines.append((no, line))
        elif section == "meta":
            key, _, value = line.partition(":")
            meta[key.strip()] = value.strip()
        elif section == "function":
            if sub is None or ind <= func_indent:
                func_indent = ind
                m = _KV_RE.match(line)
                if m:
                    if cur[m.group(1)] is not None:
                        raise SystemLoadError(f"duplicate {m.group(1)}", no)
                    cur[m.group(1)] = (int(m.group(2)), no)
                    sub = "kv"
                elif line in ("initial:", "rules:"):
                    sub = line[:-1]
                else:
                    raise SystemLoadError(f"unknown section {line!r}", no)
            elif sub in ("initial", "rules"):
                cur[sub].append((no, line))
            else:
                raise SystemLoadError(f"unexpected indented line {line!r}", no)
        else:
            raise SystemLoadError(f"line outside any section: {line!r}", no)

    if atoms is None:
        raise SystemLoadError("missing atoms section")
    if len(set(atoms)) != len(atoms):
        raise SystemLoadError("duplicate atom in atoms section")
    for a in atoms:
        if a == FALSE_NAME:
            continue
        if RESERVED_ATOM_RE.match(a):
            raise SystemLoadError(f"atom name {a!r} is reserved")
    try:
        alphabet = Alphabet(atoms)
    except ValueError as exc:
        raise SystemLoadError(str(exc)) from None

    base_ops: dict[str, BaseOpDecl] = {}
    for no, line in op_lines:
        parts = line.split()
        opname, fields = parts[0], {}
        for part in parts[1:]:
            key, eq, value = part.partition("=")
            if not eq or key not in ("arity", "cost", "size"):
                raise SystemLoadError(f"bad base op field {part!r}", no)
            fields[key] = value
        if opname in base_ops:
            raise SystemLoadError(f"duplicate symbol {opname}", no)
        if rec_index(opname) is not None or opname == "listof":
            raise SystemLoadError(f"base op name {opname!r} is reserved", no)
        missing = {"arity", "cost", "size"} - set(fields)
        if missing:
            raise SystemLoadError(f"base op {opname} missing {', '.join(sorted(missing))}", no)
        try:
            arity = VARIADIC if fields["arity"] == "*" else int(fields["arity"])
            base_ops[opname] = declare(opname, arity, parse_cost(fields["cost"]), parse_size_bound(fields["size"]))
        except ValueError as exc:
            raise SystemLoadError(str(exc), no) from None

    n = len(funcs)
    if n == 0:
        raise SystemLoadError("no recursive symbols declared")
    expected = {f"f{i}" for i in range(1, n + 1)}
    if set(funcs) != expected:
        raise SystemLoadError(f"recursive symbols must be f1..f{n}, got {', '.join(sorted(funcs))}")

    sig = Signature({k: v.arity for k, v in base_ops.items()}, n, alphabet)
    families = []
    for i in range(1, n + 1):
        spec = funcs[f"f{i}"]
        families.append(_build_family(i, spec, sig, alphabet))

    system = GNFSystem(alphabet, base_ops, families, meta, name)
    if enforce_domination:
        for fam in families:
            problems = domination_problems(system, fam)
            if problems:
                raise SystemLoadError(f"f{fam.index}: (C,p) fails to dominate: " + "; ".join(problems), spec_line(funcs, fam))
    return system


def spec_line(funcs: dict, fam: Family) -> int:
    return funcs[fam.symbol]["line"]


def _build_family(i: int, spec: dict, sig: Signature, alphabet: Alphabet) -> Family:
    values = {}
    for key in ("C", "p"):
        if spec[key] is None:
            raise SystemLoadError(f"f{i}: missing {key}", spec["line"])
        v, no = spec[key]
        if v < 1:
            raise SystemLoadError(f"f{i}: {key} must be a positive integer", no)
        values[key] = v

    initial = InitialFn()
    for no, line in spec["initial"]:
        lhs, arrow, rhs = line.partition("->")
        if not arrow:
            raise SystemLoadError(f"initial entry needs '->': {line!r}", no)
        lhs, rhs = lhs.strip(), rhs.strip()
        if lhs == "atoms":
            if rhs != "identity":
                raise SystemLoadError(f"unsupported atom rule {rhs!r}", no)
            initial.atoms_identity = True
            continue
        try:
            w = parse_element(lhs, alphabet)
            v = parse_element(rhs, alphabet)
        except ValueError as exc:
            raise SystemLoadError(str(exc), no) from None
        if v == FALSE:
            raise SystemLoadError("initial values may not be false; omit the entry instead", no)
        if w in initial.table:
            raise SystemLoadError(f"duplicate initial entry for {lhs}", no)
        initial.table[w] = v

    rules = []
    for no, line in spec["rules"]:
        guard_text, arrow, tmpl_text = line.partition("=>")
        if not arrow:
            raise SystemLoadError(f"rule needs '=>': {line!r}", no)
        try:
            guard = parse_guard(guard_text)
            template = parse_term(tmpl_text.strip(), sig)
        except (ValueError, TermSyntaxError) as exc:
            raise SystemLoadError(str(exc), no) from None
        for prim in guard:
            if prim.kind == "head_is" and prim.arg not in alphabet:
                raise SystemLoadError(f"unknown atom {prim.arg!r} in guard", no)
        for _, s in subterms(template):
            if s.__class__ is YVar:
                raise SystemLoadError("y-variables may not appear in user templates", no)
            if s.__class__ is Const and s.name == FALSE_NAME:
                raise SystemLoadError("templates may not produce false; let gamma return false instead", no)
        rule = GammaRule(guard, template)
        limit = rule.exact_arity if rule.exact_arity is not None else rule.min_arity
        if max_x_index(template) > limit:
            raise SystemLoadError(
                f"template uses x{max_x_index(template)} but the guard only guarantees arity {limit}", no
            )
        rules.append(rule)
    return Family(i, values["C"], values["p"], initial, rules)


def load_system(path: str | Path, *, enforce_domination: bool = True) -> GNFSystem:
    path = Path(path)
    return parse_system(path.read_text(encoding="utf-8"), name=path.name, enforce_domination=enforce_domination)


def render_system(sys: GNFSystem) -> str:
    """Canonical text form; ``parse_system(render_system(s))`` reproduces ``s``."""
    out = []
    if sys.meta:
        out.append("meta:")
        out += [f"  {k}: {v}" for k, v in sys.meta.items()]
    out.append("atoms: " + ", ".join(sys.alphabet.user_names))
    out.append("baseops:")
    out += ["  " + op.render() for op in sys.base_ops.values()]
    for fam in sys.families:
        out.append(f"function {fam.symbol}:")
        out.append(f"  C = {fam.C}")
        out.append(f"  p = {fam.p}")
        out.append("  initial:")
        if fam.initial.atoms_identity:
            out.append("    atoms -> identity")
        out += [f"    {render_element(w)} -> {render_element(v)}" for w, v in fam.initial.table.items()]
        out.append("  rules:")
        out += ["    " + rule.render() for rule in fam.rules]
    return "\n".join(out) + "\n"


SYSTEMS_DIR = Path(__file__).parent / "systems"


def shipped(name: str) -> Path:
    """Path of a fixture system shipped with the package (``.gnf`` optional)."""
    if not name.endswith(".gnf"):
        name += ".gnf"
    return SYSTEMS_DIR / name
