"""Coordinate submanifolds, vanishing ideals and first-order jets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .expr import Chart, Expr, ExprError, PoleError
from .geom import Multivector, schouten
from .verdict import Check, Verdict


class JetError(ValueError):
    pass


@dataclass(frozen=True)
class Submanifold:
    """Common zero set of the ``normal`` coordinates of ``chart``."""

    chart: Chart
    normal: tuple

    def __post_init__(self):
        normal = tuple(sorted(set(self.normal)))
        if any(not 0 <= i < self.chart.dim for i in normal):
            raise JetError("normal index outside the chart")
        object.__setattr__(self, "normal", normal)

    @classmethod
    def from_names(cls, chart: Chart, names: Iterable[str]) -> "Submanifold":
        return cls(chart, tuple(chart.index(n) for n in names))

    @property
    def base(self) -> tuple:
        return tuple(i for i in range(self.chart.dim) if i not in self.normal)

    @property
    def base_chart(self) -> Chart:
        return Chart(tuple(self.chart.names[i] for i in self.base))

    def normal_degree(self, monom: Sequence[int]) -> int:
        return sum(monom[i] for i in self.normal)

    def on_S(self, e: Expr) -> Expr:
        """Set the normal coordinates to zero (stays on the ambient chart)."""
        return e.subs_zero(self.normal)

    def restrict(self, e: Expr) -> Expr:
        """Restriction to S written in the base chart."""
        n = len(self.base)
        subs = []
        pos = {i: k for k, i in enumerate(self.base)}
        for i in range(self.chart.dim):
            subs.append(Expr.zero(n) if i in self.normal else Expr.var(pos[i], n))
        return e.compose(subs, n)

    def lift(self, e: Expr) -> Expr:
        """Base-chart expression as a function on the ambient chart."""
        return e.remap(list(self.base), self.chart.dim)

    def to_json(self) -> dict:
        return {"normal_vars": [self.chart.names[i] for i in self.normal]}


def _rational_parts(e: Expr, S: Submanifold):
    if not e.is_rational:
        raise JetError("non-polynomial coefficient: use the numeric route")
    if not e.den.is_ground and S.on_S(Expr.from_poly(e.den)).is_zero:
        raise JetError("denominator vanishes identically on the submanifold")
    return e.numer


def ideal_membership(e: Expr, S: Submanifold, power: int) -> bool:
    """Whether ``e`` lies in the ``power``-th power of the vanishing ideal of S.

    Rational inputs are accepted when their denominator does not vanish
    identically on S (it is then a unit near a generic point of S)."""
    if not e.is_rational:
        raise JetError("ideal membership needs a polynomial or rational expression")
    p = _rational_parts(e, S)
    return all(S.normal_degree(m) >= power for m in p.monoms())


def _touches_normal(idx: tuple, S: Submanifold) -> bool:
    return any(i in S.normal for i in idx)


def is_tangent(theta: Multivector, S: Submanifold) -> bool:
    return all(ideal_membership(c, S, 1) for idx, c in theta.terms.items() if _touches_normal(idx, S))


@dataclass(frozen=True)
class JetClass:
    submanifold: Submanifold
    rep: Multivector

    @property
    def degree(self) -> int:
        return self.rep.degree

    def __eq__(self, other):
        return isinstance(other, JetClass) and self.submanifold == other.submanifold and self.rep == other.rep

    def __hash__(self):
        return hash(self.rep)


def _truncate_coeff(c: Expr, S: Submanifold) -> Expr:
    if c.is_polynomial:
        p = c.poly
        R = p.ring
        kept = R.from_dict({m: v for m, v in p.items() if S.normal_degree(m) <= 1}) if p else R.zero
        return Expr.from_poly(kept)
    _rational_parts(c, S)
    out = S.on_S(c)
    for k in S.normal:
        out = out + Expr.var(k, c.nvars) * S.on_S(c.diff(k))
    return out


def jet_truncate(theta: Multivector, S: Submanifold) -> JetClass:
    if theta.chart != S.chart:
        raise JetError("chart mismatch")
    for c in theta.terms.values():
        if not c.is_rational:
            raise JetError("jet truncation needs polynomial or rational coefficients")
    if not is_tangent(theta, S):
        raise JetError("multivector is not tangent to the submanifold")
    rep = theta.map_coeffs(lambda c: _truncate_coeff(c, S))
    return JetClass(S, rep)


def jet_bracket(A: JetClass, B: JetClass) -> JetClass:
    return jet_truncate(schouten(A.rep, B.rep), A.submanifold)


def _numeric_second_order(coeffs, S: Submanifold, rng, samples: int, tol: float):
    """Necessary condition for I_S^2 membership: value and first normal
    derivatives vanish at sampled points of S."""
    bad = []
    worst = 0.0
    n = S.chart.dim
    for idx, c in coeffs:
        tests = [c] + [c.diff(k) for k in S.normal]
        for _ in range(samples):
            pt = [0.0] * n
            for i in S.base:
                pt[i] = float(rng.uniform(-2.0, 2.0))
            try:
                vals = [abs(float(t.evaluate(pt))) for t in tests]
            except PoleError:
                continue
            w = max(vals)
            worst = max(worst, w)
            if w > tol:
                bad.append(f"{idx}: {S.chart.fmt(c)}")
                break
    return bad, worst


def check_second_order(pi: Multivector, S: Submanifold, seed: int = 0, samples: int = 32,
                       tol: float = 1e-9) -> Verdict:
    """PASS iff [pi, pi] lies in I_S^2 times 3-vectors."""
    if pi.chart != S.chart:
        raise JetError("chart mismatch")
    exact_terms = {idx: c for idx, c in pi.terms.items() if c.is_rational}
    if len(exact_terms) == len(pi.terms) and not is_tangent(pi, S):
        raise JetError("bivector is not tangent to the submanifold")
    sq = schouten(pi, pi)
    names = S.chart.names
    offending = []
    numeric = []
    for idx, c in sq.terms.items():
        label = "^".join(f"d{names[i]}" for i in idx)
        if c.is_rational:
            if not ideal_membership(c, S, 2):
                offending.append(f"{label}: {S.chart.fmt(c)}")
        else:
            numeric.append((label, c))
    checks = []
    residual = [{"indices": list(k), "coeff": S.chart.fmt(v)} for k, v in sq.terms.items()]
    if numeric:
        bad, worst = _numeric_second_order(numeric, S, np.random.default_rng(seed), samples, tol)
        checks.append(Check("second_order", not offending and not bad, "numeric", offending + bad,
                            {"max_residual": worst, "samples": samples}))
    else:
        checks.append(Check("second_order", not offending, "exact", offending))
    return Verdict(checks, {"schouten_square": residual})
