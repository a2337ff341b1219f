"""Anchored brackets on a trivial bundle over the base of S.

Sections are lists of ``rank`` expressions on the base chart; the bracket of
arbitrary sections is the Leibniz extension of the frame data.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from .expr import Chart, Expr
from .geom import DiffForm, Multivector, cotangent_bracket, schouten
from .jets import JetClass, JetError, Submanifold, check_second_order
from .verdict import Check, Verdict, residual_check


class AlgebroidError(ValueError):
    pass


Section = list


def _zero(chart: Chart) -> Expr:
    return Expr.zero(chart.dim)


@dataclass
class AlgebroidData:
    chart: Chart
    rank: int
    anchor: list  # anchor[a][i]: component i of rho(e_a)
    structure: list  # structure[a][b][c] = C^c_{ab}
    im: list | None = None  # im[a][i]: component i of mu(e_a)
    labels: tuple = ()

    def __post_init__(self):
        r, n = self.rank, self.chart.dim
        if len(self.anchor) != r or any(len(row) != n for row in self.anchor):
            raise AlgebroidError("anchor must be a rank x dim matrix")
        if len(self.structure) != r or any(len(row) != r or any(len(c) != r for c in row) for row in self.structure):
            raise AlgebroidError("structure functions must be rank x rank x rank")
        if self.im is not None and (len(self.im) != r or any(len(row) != n for row in self.im)):
            raise AlgebroidError("IM matrix must be rank x dim")
        for a in range(r):
            for b in range(r):
                for c in range(r):
                    if self.structure[a][b][c] != -self.structure[b][a][c]:
                        raise AlgebroidError("structure functions are not antisymmetric")
        if not self.labels:
            self.labels = tuple(f"e{a + 1}" for a in range(r))

    # sections --------------------------------------------------------------
    def frame(self, a: int) -> Section:
        z = _zero(self.chart)
        one = Expr.one(self.chart.dim)
        return [one if b == a else z for b in range(self.rank)]

    def rho(self, s: Section) -> Multivector:
        comps = [_zero(self.chart)] * self.chart.dim
        for a, f in enumerate(s):
            if f.is_zero:
                continue
            comps = [c + f * r for c, r in zip(comps, self.anchor[a])]
        return Multivector.vector(self.chart, comps)

    def mu(self, s: Section) -> DiffForm:
        if self.im is None:
            raise AlgebroidError("no IM form attached")
        comps = [_zero(self.chart)] * self.chart.dim
        for a, f in enumerate(s):
            if f.is_zero:
                continue
            comps = [c + f * m for c, m in zip(comps, self.im[a])]
        return DiffForm.one_form(self.chart, comps)

    def bracket(self, s: Section, t: Section) -> Section:
        out = [_zero(self.chart)] * self.rank
        for a, f in enumerate(s):
            if f.is_zero:
                continue
            for b, g in enumerate(t):
                if g.is_zero:
                    continue
                fg = f * g
                for c in range(self.rank):
                    C = self.structure[a][b][c]
                    if not C.is_zero:
                        out[c] = out[c] + fg * C
        rs, rt = self.rho(s), self.rho(t)
        return [o + rs.apply(g) - rt.apply(f) for o, f, g in zip(out, s, t)]

    def section_str(self, s: Section) -> str:
        parts = [f"({self.chart.fmt(f)})*{lab}" for f, lab in zip(s, self.labels) if not f.is_zero]
        return " + ".join(parts) if parts else "0"

    def bracket_table(self) -> dict:
        out = {}
        for a in range(self.rank):
            for b in range(a + 1, self.rank):
                s = [self.structure[a][b][c] for c in range(self.rank)]
                if any(not x.is_zero for x in s):
                    out[f"[{self.labels[a]},{self.labels[b]}]"] = self.section_str(s)
        return out

    def to_json(self) -> dict:
        fmt = self.chart.fmt
        out = {
            "base_vars": list(self.chart.names),
            "rank": self.rank,
            "labels": list(self.labels),
            "anchor": [[fmt(x) for x in row] for row in self.anchor],
            "structure": {
                f"c_{a + 1},{b + 1}^{c + 1}": fmt(self.structure[a][b][c])
                for a in range(self.rank) for b in range(a + 1, self.rank) for c in range(self.rank)
                if not self.structure[a][b][c].is_zero
            },
        }
        if self.im is not None:
            out["im"] = [[fmt(x) for x in row] for row in self.im]
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "AlgebroidData":
        chart = Chart(tuple(doc.get("base_vars", [])))
        r = int(doc["rank"])
        z = _zero(chart)
        anchor = [[chart.parse(x) for x in row] for row in doc.get("anchor", [[0] * chart.dim] * r)]
        C = structure_from_json(chart, r, doc.get("structure", {}))
        im = [[chart.parse(x) for x in row] for row in doc["im"]] if "im" in doc else None
        labels = tuple(doc.get("labels", ()))
        return cls(chart, r, anchor, C, im, labels)

    def __eq__(self, other):
        if not isinstance(other, AlgebroidData):
            return NotImplemented
        return (self.chart == other.chart and self.rank == other.rank and self.anchor == other.anchor
                and self.structure == other.structure and self.im == other.im)


_KEY = re.compile(r"c_(\d+),?(\d+)\^(\d+)\Z")


def structure_from_json(chart: Chart, r: int, table: dict) -> list:
    z = _zero(chart)
    C = [[[z] * r for _ in range(r)] for _ in range(r)]
    for key, val in table.items():
        m = _KEY.match(key.replace(" ", ""))
        if not m:
            raise AlgebroidError(f"bad structure key {key!r}; expected c_a,b^c")
        a, b, c = (int(g) - 1 for g in m.groups())
        if r >= 10 and "," not in key:
            raise AlgebroidError("use c_a,b^c keys when the rank exceeds 9")
        if not (0 <= a < r and 0 <= b < r and 0 <= c < r) or a == b:
            raise AlgebroidError(f"structure key {key!r} out of range")
        e = chart.parse(val)
        C[a][b][c] = C[a][b][c] + e
        C[b][a][c] = C[b][a][c] - e
    return C


def constant_structure(chart: Chart, r: int, entries: dict) -> list:
    """Structure table from ``{(a, b, c): value}`` with 1-based indices, a<b."""
    return structure_from_json(chart, r, {f"c_{a},{b}^{c}": v for (a, b, c), v in entries.items()})


# ---------------------------------------------------------------- from jets


def jet_to_algebroid(jet: JetClass, S: Submanifold | None = None) -> AlgebroidData:
    S = S or jet.submanifold
    pi = jet.rep
    if pi.degree != 2:
        raise AlgebroidError("jet_to_algebroid needs a bivector jet")
    if not check_second_order(pi, S).passed:
        raise AlgebroidError("jet is not Poisson to second order")
    order = list(S.base) + list(S.normal)
    chart = S.chart
    base = S.base_chart
    dxs = [DiffForm.dx(chart, i) for i in order]
    r = len(order)
    anchor = []
    for a in range(r):
        comps = pi.contract(dxs[a]).components()
        anchor.append([S.restrict(comps[i]) for i in S.base])
    zb = _zero(base)
    C = [[[zb] * r for _ in range(r)] for _ in range(r)]
    for a in range(r):
        for b in range(a + 1, r):
            comps = cotangent_bracket(dxs[a], dxs[b], pi).components()
            for c in range(r):
                v = S.restrict(comps[order[c]])
                C[a][b][c] = v
                C[b][a][c] = -v
    one = Expr.one(base.dim)
    im = []
    for a in range(r):
        row = [zb] * base.dim
        if a < base.dim:
            row[a] = one
        im.append(row)
    labels = tuple(f"d{chart.names[i]}" for i in order)
    return AlgebroidData(base, r, anchor, C, im, labels)


# ---------------------------------------------------------------- probes


def random_poly(chart: Chart, rng: np.random.Generator, degree: int = 2, terms: int = 3) -> Expr:
    out = Expr.zero(chart.dim)
    for _ in range(terms):
        c = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
        t = Expr.const(c, chart.dim)
        for _ in range(int(rng.integers(0, degree + 1))):
            if chart.dim:
                t = t * Expr.var(int(rng.integers(0, chart.dim)), chart.dim)
        out = out + t
    return out if not out.is_zero else Expr.one(chart.dim)


def _scaled(s: Section, f: Expr) -> Section:
    return [x * f for x in s]


def _sub(s: Section, t: Section) -> Section:
    return [x - y for x, y in zip(s, t)]


def _jacobiator(A: AlgebroidData, x: Section, y: Section, z: Section) -> Section:
    br = A.bracket
    t1 = br(x, br(y, z))
    t2 = br(y, br(z, x))
    t3 = br(z, br(x, y))
    return [a + b + c for a, b, c in zip(t1, t2, t3)]


def check_jacobi(A: AlgebroidData, seed: int = 0, probes: int = 4) -> Verdict:
    r = A.rank
    comp = []
    for a in range(r):
        for b in range(a + 1, r):
            lhs = A.rho(A.bracket(A.frame(a), A.frame(b)))
            rhs = schouten(A.rho(A.frame(a)), A.rho(A.frame(b)))
            diff = lhs - rhs
            for (i,), c in diff.terms.items():
                comp.append((f"rho[{A.labels[a]},{A.labels[b]}] d{A.chart.names[i]}", c))
    jac = []
    for a in range(r):
        for b in range(a + 1, r):
            for c in range(b + 1, r):
                J = _jacobiator(A, A.frame(a), A.frame(b), A.frame(c))
                for d, v in enumerate(J):
                    jac.append((f"Jac({A.labels[a]},{A.labels[b]},{A.labels[c]}) {A.labels[d]}", v))
    rng = np.random.default_rng(seed)
    probe = []
    for _ in range(probes if r else 0):
        a, b, c = (int(rng.integers(0, r)) for _ in range(3))
        f = random_poly(A.chart, rng)
        J = _jacobiator(A, _scaled(A.frame(a), f), A.frame(b), A.frame(c))
        for d, v in enumerate(J):
            probe.append((f"Jac(f*{A.labels[a]},{A.labels[b]},{A.labels[c]}) {A.labels[d]}", v))
    return Verdict([
        residual_check("anchor_compatibility", A.chart, comp),
        residual_check("frame_jacobi", A.chart, jac),
        residual_check("leibniz_probes", A.chart, probe),
    ])


def _im_residual(A: AlgebroidData, s: Section, t: Section) -> DiffForm:
    lhs = A.mu(A.bracket(s, t))
    rhs = A.mu(t).lie(A.rho(s)) - A.mu(s).d().interior(A.rho(t))
    return lhs - rhs


def check_closed_im(A: AlgebroidData, seed: int = 0, probes: int = 4) -> Verdict:
    if A.im is None:
        raise AlgebroidError("check_closed_im needs an IM form")
    r = A.rank
    sym, brk, probe = [], [], []
    for a in range(r):
        for b in range(a, r):
            ea, eb = A.frame(a), A.frame(b)
            v = A.mu(ea).interior(A.rho(eb)).function_value() + A.mu(eb).interior(A.rho(ea)).function_value()
            sym.append((f"i_rho({A.labels[b]})mu({A.labels[a]}) + i_rho({A.labels[a]})mu({A.labels[b]})", v))
    for a in range(r):
        for b in range(r):
            if a == b:
                continue
            res = _im_residual(A, A.frame(a), A.frame(b))
            for (i,), v in res.terms.items():
                brk.append((f"mu[{A.labels[a]},{A.labels[b]}] d{A.chart.names[i]}", v))
    rng = np.random.default_rng(seed)
    for _ in range(probes if r else 0):
        a, b = int(rng.integers(0, r)), int(rng.integers(0, r))
        f = random_poly(A.chart, rng)
        res = _im_residual(A, _scaled(A.frame(a), f), A.frame(b))
        for (i,), v in res.terms.items():
            probe.append((f"mu[f*{A.labels[a]},{A.labels[b]}] d{A.chart.names[i]}", v))
    return Verdict([
        residual_check("im_symmetric", A.chart, sym),
        residual_check("im_bracket", A.chart, brk),
        residual_check("im_leibniz_probes", A.chart, probe),
    ])


# ---------------------------------------------------------------- frame changes


def change_frame(A: AlgebroidData, P: Sequence[Sequence]) -> AlgebroidData:
    """New frame ``e'_a = sum_b P[a][b] e_b`` for a constant invertible ``P``."""
    r, n = A.rank, A.chart.dim
    M = sympy.Matrix(r, r, lambda i, j: sympy.Rational(P[i][j]))
    if M.det() == 0:
        raise AlgebroidError("frame change is not invertible")
    Q = M.inv()
    q = [[Fraction(int(Q[i, j].p), int(Q[i, j].q)) for j in range(r)] for i in range(r)]
    p = [[Fraction(P[i][j]) for j in range(r)] for i in range(r)]

    def combo(rows, a):
        out = [_zero(A.chart)] * len(rows[0])
        for b in range(r):
            if p[a][b]:
                out = [o + x * p[a][b] for o, x in zip(out, rows[b])]
        return out

    anchor = [combo(A.anchor, a) for a in range(r)]
    im = [combo(A.im, a) for a in range(r)] if A.im is not None else None
    z = _zero(A.chart)
    C = [[[z] * r for _ in range(r)] for _ in range(r)]
    for a in range(r):
        for b in range(r):
            # [e'_a, e'_b] in the old frame, then expressed in the new one
            old = [z] * r
            for d in range(r):
                for e in range(r):
                    w = p[a][d] * p[b][e]
                    if w:
                        old = [o + A.structure[d][e][f] * w for f, o in enumerate(old)]
            for c in range(r):
                acc = z
                for f in range(r):
                    if q[f][c]:
                        acc = acc + old[f] * q[f][c]
                C[a][b][c] = acc
    return AlgebroidData(A.chart, r, anchor, C, im)


# ---------------------------------------------------------------- Cartan splittings


@dataclass
class Connection:
    """``nabla_{d/dx_i} e_a = gamma[i][a][b] e_b``."""

    chart: Chart
    rank: int
    gamma: list

    def __post_init__(self):
        if len(self.gamma) != self.chart.dim or any(
                len(g) != self.rank or any(len(row) != self.rank for row in g) for g in self.gamma):
            raise AlgebroidError("connection coefficients must be dim x rank x rank")

    @classmethod
    def trivial(cls, chart: Chart, rank: int) -> "Connection":
        z = _zero(chart)
        return cls(chart, rank, [[[z] * rank for _ in range(rank)] for _ in range(chart.dim)])

    def covariant(self, X: Multivector, s: Section) -> Section:
        out = [_zero(self.chart)] * self.rank
        for (i,), xi in X.terms.items():
            for c in range(self.rank):
                acc = s[c].diff(i)
                for a in range(self.rank):
                    g = self.gamma[i][a][c]
                    if not g.is_zero and not s[a].is_zero:
                        acc = acc + s[a] * g
                out[c] = out[c] + xi * acc
        return out


@dataclass
class Splitting:
    """Bundle map ``l`` onto the sub-frame indexed by ``kernel``;
    ``matrix[k][a]`` is the ``k``-th component of ``l(e_a)``."""

    kernel: tuple
    matrix: list

    def __post_init__(self):
        self.kernel = tuple(self.kernel)
        for k, row in enumerate(self.matrix):
            for j, a in enumerate(self.kernel):
                if row[a] != (1 if j == k else 0):
                    raise AlgebroidError("splitting must restrict to the identity on the kernel frame")

    def apply(self, s: Section) -> list:
        return [sum((m * f for m, f in zip(row, s)), Expr.zero(s[0].nvars)) for row in self.matrix]

    def as_section(self, v: list, rank: int, chart: Chart) -> Section:
        out = [_zero(chart)] * rank
        for k, a in enumerate(self.kernel):
            out[a] = v[k]
        return out


def basic_curvature(A: AlgebroidData, nabla: Connection, a: int, b: int, i: int) -> Section:
    """``R^bas(e_a, e_b)(d/dx_i)``."""
    ch = A.chart
    X = Multivector.vector(ch, [Expr.one(ch.dim) if k == i else _zero(ch) for k in range(ch.dim)])
    ea, eb = A.frame(a), A.frame(b)
    nab = nabla.covariant

    def bar(alpha, Y):
        return A.rho(nab(Y, alpha)) + schouten(A.rho(alpha), Y)

    br = A.bracket
    t1 = nab(X, br(ea, eb))
    t2 = br(nab(X, ea), eb)
    t3 = br(ea, nab(X, eb))
    t4 = nab(bar(eb, X), ea)
    t5 = nab(bar(ea, X), eb)
    return [p - q - r - s + t for p, q, r, s, t in zip(t1, t2, t3, t4, t5)]


def check_cartan_splitting(A: AlgebroidData, nabla: Connection, l: Splitting) -> Verdict:
    if nabla.rank != A.rank or nabla.chart != A.chart:
        raise AlgebroidError("connection does not match the algebroid")
    if any(len(row) != A.rank for row in l.matrix) or any(not 0 <= k < A.rank for k in l.kernel):
        raise AlgebroidError("splitting does not match the algebroid")
    r = A.rank
    par, curv = [], []
    for a in range(r):
        ea = A.frame(a)
        for b in range(r):
            eb = A.frame(b)
            lhs = A.bracket(ea, l.as_section(l.apply(eb), r, A.chart))
            inner = [x + y for x, y in zip(nabla.covariant(A.rho(eb), ea), A.bracket(ea, eb))]
            rhs = l.as_section(l.apply(inner), r, A.chart)
            for c, v in enumerate(_sub(lhs, rhs)):
                par.append((f"(nabla_bar_{A.labels[a]} l)({A.labels[b]}) {A.labels[c]}", v))
    for a in range(r):
        for b in range(a + 1, r):
            for i in range(A.chart.dim):
                R = l.apply(basic_curvature(A, nabla, a, b, i))
                for k, v in enumerate(R):
                    curv.append((f"l R({A.labels[a]},{A.labels[b]})(d/d{A.chart.names[i]}) [{k}]", v))
    return Verdict([
        residual_check("splitting_parallel", A.chart, par),
        residual_check("basic_curvature", A.chart, curv),
    ])
