"""Static checking of the five GNF side conditions.

C1-C3 are syntactic.  C4 composes declared base-op costs through the
stripped template into a polynomial in T = |x̄| + |ȳ| (with the arity k
bounded by T) and compares it against C * T^p.  C5 composes declared size
bounds into linear forms over the template variables and compares them
against the sum of the bound-variable sizes, instance by instance, with an
affine extrapolation in the arity for variadic templates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .baseops import CostPoly, SizeBound
from .errors import StrippingError
from .system import GammaRule, GNFSystem
from .terms import (
    App,
    Const,
    Lit,
    Term,
    VariadicList,
    XVar,
    YVar,
    c1_violations,
    c2_violations,
    expand,
    render_term,
    strip_recursive,
    subterms,
)

CONDITIONS = ("C1", "C2", "C3", "C4", "C5")
MAX_FORMS = 256


@dataclass
class Finding:
    symbol: int
    rule: int  # 1-based
    template: str
    message: str
    path: tuple[int, ...] = ()
    arity: int | None = None

    def to_dict(self) -> dict:
        return {
            "symbol": f"f{self.symbol}",
            "rule": self.rule,
            "template": self.template,
            "path": list(self.path),
            "arity": self.arity,
            "message": self.message,
        }

    def render(self) -> str:
        where = f"f{self.symbol} rule#{self.rule} {self.template}"
        if self.path:
            where += " at " + ".".join(map(str, self.path))
        if self.arity is not None:
            where += f" (arity {self.arity})"
        return f"{where}: {self.message}"


@dataclass
class Verdict:
    condition: str
    findings: list[Finding] = field(default_factory=list)
    skipped: list[Finding] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.findings:
            return "fail"
        if self.skipped:
            return "skipped"
        return "pass"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "status": self.status,
            "failures": [f.to_dict() for f in self.findings],
            "skipped": [f.to_dict() for f in self.skipped],
        }


@dataclass
class CheckReport:
    system: str
    verdicts: dict[str, Verdict]

    @property
    def accepted(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    @property
    def failed(self) -> list[str]:
        return [c for c, v in self.verdicts.items() if v.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "accepted": self.accepted,
            "verdicts": [self.verdicts[c].to_dict() for c in CONDITIONS if c in self.verdicts],
        }

    def render_text(self) -> str:
        lines = [f"system {self.system}"]
        for c in CONDITIONS:
            v = self.verdicts.get(c)
            if v is None:
                continue
            lines.append(f"{c} {v.status}")
            for f in v.findings:
                lines.append(f"  {f.render()}")
            for f in v.skipped:
                lines.append(f"  skipped {f.render()}")
        lines.append(f"accepted: {'yes' if self.accepted else 'no'}")
        return "\n".join(lines) + "\n"


def _rules(sys: GNFSystem):
    for fam in sys.families:
        for r, rule in enumerate(fam.rules, 1):
            yield fam, r, rule


def _finding(fam, r, rule, message, path=(), arity=None) -> Finding:
    return Finding(fam.index, r, render_term(rule.template), message, tuple(path), arity)


def _strippable(rule: GammaRule) -> str | None:
    """Which of C1/C2 blocks stripping, if any."""
    if c1_violations(rule.template):
        return "C1"
    for k in rule.check_arities():
        if c2_violations(expand(rule.template, k)):
            return "C2"
    return None


# ---------------------------------------------------------------- C1-C3

def check_c1(sys: GNFSystem) -> Verdict:
    """Recursive symbols occur only as ``f_j(x_i)``."""
    v = Verdict("C1")
    for fam, r, rule in _rules(sys):
        for path, app in c1_violations(rule.template):
            v.findings.append(_finding(fam, r, rule, f"{render_term(app)}: recursive applications must be only of the form f_j(x_i)", path))
    return v


def check_c2(sys: GNFSystem) -> Verdict:
    """No x_i occurs under two different recursive symbols in one term."""
    v = Verdict("C2")
    for fam, r, rule in _rules(sys):
        for k in rule.check_arities():
            clashes = c2_violations(expand(rule.template, k))
            if clashes:
                i, js = clashes[0]
                names = " and ".join(f"f{j}" for j in js)
                v.findings.append(_finding(fam, r, rule, f"x{i} appears under {names}", arity=k))
                break
    return v


def check_c3(sys: GNFSystem) -> Verdict:
    """No index i has both x_i and y_i free in the stripped term."""
    v = Verdict("C3")
    for fam, r, rule in _rules(sys):
        blocked = _strippable(rule)
        if blocked:
            v.skipped.append(_finding(fam, r, rule, f"not strippable ({blocked} fails)"))
            continue
        for k in rule.check_arities():
            stripped, _ = strip_recursive(expand(rule.template, k))
            xs = {s.index for _, s in subterms(stripped) if s.__class__ is XVar}
            ys = {s.index for _, s in subterms(stripped) if s.__class__ is YVar}
            both = sorted(xs & ys)
            if both:
                i = both[0]
                v.findings.append(_finding(
                    fam, r, rule, f"x{i} and y{i} both free in stripped term {render_term(stripped)}", arity=k
                ))
                break
    return v


# ---------------------------------------------------------------- C4

# Linear size forms: (const, {var: coef}).  A list of forms denotes their max.
Form = tuple[CostPoly, dict]
ZERO = CostPoly((0,))
ONE = CostPoly((1,))
T = CostPoly((0, 1))


def _poly_max(a: CostPoly, b: CostPoly) -> CostPoly:
    m = max(len(a.coeffs), len(b.coeffs))
    ca = a.coeffs + (0,) * (m - len(a.coeffs))
    cb = b.coeffs + (0,) * (m - len(b.coeffs))
    return CostPoly(tuple(max(x, y) for x, y in zip(ca, cb)))


def _add_forms(a: Form, b: Form) -> Form:
    coefs = dict(a[1])
    for var, c in b[1].items():
        coefs[var] = coefs[var] + c if var in coefs else c
    return (a[0] + b[0], coefs)


def _collapse(forms: list[Form]) -> list[Form]:
    if len(forms) <= MAX_FORMS:
        return forms
    const = ZERO
    coefs: dict = {}
    for c, cs in forms:
        const = _poly_max(const, c)
        for var, e in cs.items():
            coefs[var] = _poly_max(coefs.get(var, ZERO), e)
    return [(const, coefs)]


def _sym_forms(t: Term, sys: GNFSystem) -> list[Form]:
    """Size forms with coefficients as polynomials in T (arity k replaced by T)."""
    cls = t.__class__
    if cls is XVar or cls is YVar:
        return [(ZERO, {t: ONE})]
    if cls is Const:
        return [(ONE, {})]
    if cls is Lit:
        return [(CostPoly.constant(t.value.size), {})]
    if cls is VariadicList:
        return _apply_bound(sys.base_ops["list"].size_bound, [_aggregate(_sym_forms(t.body, sys))])
    if cls is App:
        return _apply_bound(sys.base_ops[t.symbol].size_bound, [_sym_forms(a, sys) for a in t.args])
    raise TypeError(t)


def _aggregate(body: list[Form]) -> list[Form]:
    """Sum over i = 1..k of the body forms, with k <= T."""
    const = ZERO
    coefs: dict = {}
    for c, cs in body:
        const = const + c * T
        for var, e in cs.items():
            if var.index is None:
                fam_var = var.__class__(None)
                coefs[fam_var] = coefs.get(fam_var, ZERO) + e
            else:
                coefs[var] = coefs.get(var, ZERO) + e * T
    return [(const, coefs)]


def _apply_bound(bound, arg_forms: list[list[Form]]) -> list[Form]:
    if bound.kind == "constant":
        return [(CostPoly.constant(bound.c), {})]
    if bound.kind == "selective":
        out = [f for forms in arg_forms for f in forms]
        return _collapse(out) if out else [(ZERO, {})]
    out = [(CostPoly.constant(bound.c), {})]
    for forms in arg_forms:
        out = _collapse([_add_forms(a, b) for a, b in itertools.product(out, forms)])
    return out


def _reduce(forms: list[Form]) -> CostPoly:
    """Upper bound in T of ``max(forms)``, using sum(e_v |v|) <= max_v e_v * T."""
    best = ZERO
    for const, coefs in forms:
        fam = {XVar: coefs.get(XVar(None), ZERO), YVar: coefs.get(YVar(None), ZERO)}
        eff = ZERO
        for var, e in coefs.items():
            if var.index is not None:
                e = e + fam[var.__class__]
            eff = _poly_max(eff, e)
        best = _poly_max(best, const + eff * T)
    return best


def template_cost_poly(stripped: Term, sys: GNFSystem) -> CostPoly:
    """Polynomial Q with ground-evaluation cost <= Q(max(1, T))."""
    cls = stripped.__class__
    if cls is App:
        own = sys.base_ops[stripped.symbol].cost
        args = [_sym_forms(a, sys) for a in stripped.args]
        total = _reduce(_apply_bound(_ADDITIVE0, args)) if args else ZERO
        cost = own.compose(total)
        for a in stripped.args:
            cost = cost + template_cost_poly(a, sys)
        return cost
    if cls is VariadicList:
        own = sys.base_ops["list"].cost
        total = _reduce(_aggregate(_sym_forms(stripped.body, sys)))
        return own.compose(total) + template_cost_poly(stripped.body, sys) * T
    return ZERO


_ADDITIVE0 = SizeBound("additive", 0)


def check_c4_static(sys: GNFSystem) -> Verdict:
    """Template evaluation cost is dominated by C * (|x̄| + |ȳ|)^p."""
    v = Verdict("C4")
    for fam, r, rule in _rules(sys):
        blocked = _strippable(rule)
        if blocked:
            v.skipped.append(_finding(fam, r, rule, f"not strippable ({blocked} fails)"))
            continue
        stripped, _ = strip_recursive(rule.template)
        q = template_cost_poly(stripped, sys)
        if not q.dominated_by(fam.C, fam.p):
            v.findings.append(_finding(
                fam, r, rule,
                f"composed cost {q.render().replace('n', 'T')} is not <= {fam.C}*T^{fam.p}",
            ))
    return v


# ---------------------------------------------------------------- C5

def _int_forms(t: Term, sys: GNFSystem) -> list[tuple[int, dict]]:
    cls = t.__class__
    if cls is XVar or cls is YVar:
        return [(0, {t: 1})]
    if cls is Const:
        return [(1, {})]
    if cls is Lit:
        return [(t.value.size, {})]
    if cls is App:
        bound = sys.base_ops[t.symbol].size_bound
        args = [_int_forms(a, sys) for a in t.args]
        if bound.kind == "constant":
            return [(bound.c, {})]
        if bound.kind == "selective":
            out = [f for forms in args for f in forms]
            return _int_collapse(out) if out else [(0, {})]
        out = [(bound.c, {})]
        for forms in args:
            nxt = []
            for (c1, e1), (c2, e2) in itertools.product(out, forms):
                e = dict(e1)
                for var, k in e2.items():
                    e[var] = e.get(var, 0) + k
                nxt.append((c1 + c2, e))
            out = _int_collapse(nxt)
        return out
    raise TypeError(t)


def _int_collapse(forms):
    if len(forms) <= MAX_FORMS:
        return forms
    const = max(c for c, _ in forms)
    coefs: dict = {}
    for _, cs in forms:
        for var, e in cs.items():
            coefs[var] = max(coefs.get(var, 0), e)
    return [(const, coefs)]


@dataclass
class C5Instance:
    arity: int
    applicable: bool
    ok: bool = True
    margin: int = 0
    max_coef: int = 0
    message: str = ""


def c5_instance(rule: GammaRule, k: int, sys: GNFSystem) -> C5Instance:
    """C5 on the stripped template at arity k.

    Needs ``const + sum(e_v |v|) <= sum(|x_1..x_k|) + sum(|y| for y in V_y)``
    for all sizes >= 1: every e_v <= 1 and const <= number of variables
    with e_v = 0 weighted by their slack ``1 - e_v``.
    """
    stripped, _ = strip_recursive(expand(rule.template, k))
    ys = {s for _, s in subterms(stripped) if s.__class__ is YVar}
    if not ys:
        return C5Instance(k, applicable=False)
    rhs = [XVar(n) for n in range(1, k + 1)] + sorted(ys, key=lambda y: y.index)
    margin = None
    max_coef = 0
    for const, coefs in _int_forms(stripped, sys):
        for var, e in sorted(coefs.items(), key=lambda kv: str(kv[0])):
            max_coef = max(max_coef, e)
            if e > 1:
                return C5Instance(k, True, False, message=(
                    f"{var} counted {e} times along an additive path in {render_term(stripped)}: "
                    f"|value| can reach {e}*|{var}|, so sizes do not exceed |w̄|+|l̄| fails"
                ))
        slack = sum(1 - coefs.get(v, 0) for v in rhs)
        m = slack - const
        margin = m if margin is None else min(margin, m)
        if m < 0:
            return C5Instance(k, True, False, margin=m, max_coef=max_coef, message=(
                f"constant {const} exceeds slack {slack} in {render_term(stripped)} "
                "(all variables of size 1), so sizes do not exceed |w̄|+|l̄| fails"
            ))
    return C5Instance(k, True, True, margin=margin, max_coef=max_coef)


def check_c5_static(sys: GNFSystem) -> Verdict:
    """Templates that use recursive results do not grow beyond |w̄| + |l̄|."""
    v = Verdict("C5")
    for fam, r, rule in _rules(sys):
        blocked = _strippable(rule)
        if blocked:
            v.skipped.append(_finding(fam, r, rule, f"not strippable ({blocked} fails)"))
            continue
        arities = rule.check_arities()
        results = [c5_instance(rule, k, sys) for k in arities]
        bad = next((res for res in results if not res.ok), None)
        if bad is None and rule.unbounded:
            prev, last = results[-2], results[-1]
            if last.applicable and (not prev.applicable or last.margin < prev.margin or last.max_coef > prev.max_coef):
                bad = C5Instance(last.arity, True, False, message="size margin shrinks as the arity grows")
        if bad is not None:
            v.findings.append(_finding(fam, r, rule, bad.message, arity=bad.arity))
    return v


CHECKS: dict[str, Callable[[GNFSystem], Verdict]] = {
    "C1": check_c1,
    "C2": check_c2,
    "C3": check_c3,
    "C4": check_c4_static,
    "C5": check_c5_static,
}


def check_system(sys: GNFSystem) -> CheckReport:
    return CheckReport(sys.name, {c: fn(sys) for c, fn in CHECKS.items()})
