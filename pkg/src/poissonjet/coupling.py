"""Coupling data over a Poisson base and the codimension-one triples.

Index conventions on a base chart with coordinates x^i and a kernel frame e_a:

* ``C[a][b][c] = C^c_{ab}`` with ``[e_a, e_b] = C^c_{ab} e_c``;
* ``gamma[i][a][b] = Gamma^b_{ia}`` with ``nabla_{d/dx^i} e_a = Gamma^b_{ia} e_b``;
* ``U[i][a][j] = U^{ia}_j`` with ``U(dx^i, d/dx^j) = U^{ia}_j e_a``;
* ``pi^{ij}`` is the coefficient matrix of pi_S, so ``pi_S^sharp(dx^i) = pi^{ij} d/dx^j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebroid import AlgebroidData
from .expr import Chart, Expr
from .geom import DiffForm, Multivector, cotangent_bracket, pair, schouten, sharp
from .verdict import Check, Verdict, residual_check


class InvariantError(ValueError):
    pass


def _z(chart: Chart) -> Expr:
    return Expr.zero(chart.dim)


def _zeros3(chart: Chart, a: int, b: int, c: int) -> list:
    z = _z(chart)
    return [[[z] * c for _ in range(b)] for _ in range(a)]


def is_poisson(pi: Multivector) -> bool:
    return schouten(pi, pi).is_zero


@dataclass
class CouplingData:
    chart: Chart
    pi_S: Multivector
    rank: int
    C: list
    gamma: list
    U: list
    fiber_names: tuple = ()

    def __post_init__(self):
        n, m = self.chart.dim, self.rank
        if self.pi_S.chart != self.chart or (self.pi_S.degree != 2 and not self.pi_S.is_zero):
            raise InvariantError("pi_S must be a bivector on the base chart")
        if len(self.C) != m or any(len(r) != m or any(len(c) != m for c in r) for r in self.C):
            raise InvariantError("structure functions must be rank x rank x rank")
        if len(self.gamma) != n or any(len(g) != m or any(len(r) != m for r in g) for g in self.gamma):
            raise InvariantError("connection coefficients must be dim x rank x rank")
        if len(self.U) != n or any(len(u) != m or any(len(r) != n for r in u) for u in self.U):
            raise InvariantError("coupling tensor must be dim x rank x dim")
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    if self.C[a][b][c] != -self.C[b][a][c]:
                        raise InvariantError("structure functions are not antisymmetric")
        for a in range(m):
            for b in range(a + 1, m):
                for c in range(b + 1, m):
                    for e in range(m):
                        s = _z(self.chart)
                        for d in range(m):
                            s = (s + self.C[a][b][d] * self.C[d][c][e] + self.C[b][c][d] * self.C[d][a][e]
                                 + self.C[c][a][d] * self.C[d][b][e])
                        if not s.is_zero:
                            raise InvariantError("fiber bracket violates the Jacobi identity")
        if not is_poisson(self.pi_S):
            raise InvariantError("pi_S is not Poisson")
        if not self.fiber_names:
            self.fiber_names = default_fiber_names(self.chart, m)

    @property
    def P(self) -> list:
        return self.pi_S.matrix()

    @classmethod
    def zero_data(cls, chart: Chart, pi_S: Multivector, rank: int, fiber_names: Sequence[str] = ()) -> "CouplingData":
        n = chart.dim
        return cls(chart, pi_S, rank, _zeros3(chart, rank, rank, rank), _zeros3(chart, n, rank, rank),
                   _zeros3(chart, n, rank, n), tuple(fiber_names))

    def to_json(self) -> dict:
        fmt, names = self.chart.fmt, self.chart.names
        n, m = self.chart.dim, self.rank
        return {
            "base_vars": list(names),
            "pi_S": self.pi_S.to_json(),
            "kernel": {
                "rank": m,
                "fiber_vars": list(self.fiber_names),
                "structure": {f"c_{a + 1},{b + 1}^{c + 1}": fmt(self.C[a][b][c])
                              for a in range(m) for b in range(a + 1, m) for c in range(m)
                              if not self.C[a][b][c].is_zero},
            },
            "gamma": [{"var": names[i], "a": a + 1, "b": b + 1, "coeff": fmt(self.gamma[i][a][b])}
                      for i in range(n) for a in range(m) for b in range(m) if not self.gamma[i][a][b].is_zero],
            "U": [{"dvar": names[i], "a": a + 1, "var": names[j], "coeff": fmt(self.U[i][a][j])}
                  for i in range(n) for a in range(m) for j in range(n) if not self.U[i][a][j].is_zero],
        }


def default_fiber_names(chart: Chart, m: int) -> tuple:
    if m == 1 and "t" not in chart.names:
        return ("t",)
    out = []
    k = 1
    while len(out) < m:
        name = f"z{k}"
        if name not in chart.names:
            out.append(name)
        k += 1
    return tuple(out)


# ---------------------------------------------------------------- structure equations


def s1_residuals(c: CouplingData):
    n, m = c.chart.dim, c.rank
    C, G = c.C, c.gamma
    for i in range(n):
        for a in range(m):
            for b in range(a + 1, m):
                for k in range(m):
                    lhs = _z(c.chart)
                    for d in range(m):
                        lhs = lhs + C[a][d][k] * G[i][b][d] + C[d][b][k] * G[i][a][d] - C[a][b][d] * G[i][d][k]
                    yield f"S1 i={c.chart.names[i]} a={a + 1} b={b + 1} c={k + 1}", lhs - C[a][b][k].diff(i)


def s2_residuals(c: CouplingData):
    n, m = c.chart.dim, c.rank
    P, G, U, C = c.P, c.gamma, c.U, c.C
    for i in range(n):
        for j in range(n):
            for a in range(m):
                for b in range(m):
                    lhs = _z(c.chart)
                    for k in range(n):
                        if P[i][k].is_zero:
                            continue
                        curv = G[j][a][b].diff(k) - G[k][a][b].diff(j)
                        for d in range(m):
                            curv = curv + G[j][a][d] * G[k][d][b] - G[k][a][d] * G[j][d][b]
                        lhs = lhs + P[i][k] * curv
                    rhs = _z(c.chart)
                    for d in range(m):
                        rhs = rhs + U[i][d][j] * C[d][a][b]
                    yield (f"S2 i={c.chart.names[i]} j={c.chart.names[j]} a={a + 1} b={b + 1}", lhs - rhs)


def _cov_U(c: CouplingData, l: int, i: int, k: int, a: int) -> Expr:
    """Component a of (nabla_{d/dx^l} U)(dx^i, d/dx^k) as used in (S3)."""
    out = c.U[i][a][k].diff(l)
    for d in range(c.rank):
        g = c.gamma[l][d][a]
        if not g.is_zero:
            out = out + g * c.U[i][d][k]
    return out


def s3_residuals(c: CouplingData):
    """(S3) evaluated on alpha = dx^i, beta = dx^j, X = d/dx^k."""
    n, m = c.chart.dim, c.rank
    P, U, G = c.P, c.U, c.gamma
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                for a in range(m):
                    r = _z(c.chart)
                    for l in range(n):
                        if not P[i][l].is_zero:
                            r = r + P[i][l] * _cov_U(c, l, j, k, a)
                        if not P[j][l].is_zero:
                            r = r - P[j][l] * _cov_U(c, l, i, k, a)
                    # nabla_X U(alpha, pi^sharp beta)
                    w = [_z(c.chart)] * m
                    for d in range(m):
                        for l in range(n):
                            if not P[j][l].is_zero:
                                w[d] = w[d] + U[i][d][l] * P[j][l]
                    r = r + w[a].diff(k)
                    for d in range(m):
                        if not G[k][d][a].is_zero:
                            r = r + G[k][d][a] * w[d]
                    for l in range(n):
                        r = r - P[j][l].diff(k) * U[i][a][l] + P[i][l].diff(k) * U[j][a][l]
                        r = r - P[i][j].diff(l) * U[l][a][k]
                    yield (f"S3 i={c.chart.names[i]} j={c.chart.names[j]} k={c.chart.names[k]} a={a + 1}", r)


def skew_residuals(c: CouplingData):
    n, m = c.chart.dim, c.rank
    P, U = c.P, c.U
    for i in range(n):
        for j in range(i, n):
            for a in range(m):
                r = _z(c.chart)
                for k in range(n):
                    r = r + U[i][a][k] * P[j][k] + U[j][a][k] * P[i][k]
                yield f"skew i={c.chart.names[i]} j={c.chart.names[j]} a={a + 1}", r


def check_coupling(c: CouplingData, seed: int = 0, samples: int = 32, tol: float = 1e-9) -> Verdict:
    rng = np.random.default_rng(seed)
    return Verdict([
        residual_check("S1", c.chart, s1_residuals(c), rng, samples, tol),
        residual_check("S2", c.chart, s2_residuals(c), rng, samples, tol),
        residual_check("S3", c.chart, s3_residuals(c), rng, samples, tol),
        residual_check("skew", c.chart, skew_residuals(c), rng, samples, tol),
    ])


# ---------------------------------------------------------------- induced algebroid


def coupling_algebroid(c: CouplingData) -> AlgebroidData:
    """The partially split jet of ``c`` on T*S + kernel, frame dx^i then e_a."""
    n, m = c.chart.dim, c.rank
    r = n + m
    P, U, G, C = c.P, c.U, c.gamma, c.C
    z = _z(c.chart)
    one = Expr.one(c.chart.dim)
    anchor = [list(P[i]) for i in range(n)] + [[z] * n for _ in range(m)]
    S = [[[z] * r for _ in range(r)] for _ in range(r)]

    def put(a, b, comps):
        for k, v in enumerate(comps):
            S[a][b][k] = v
            S[b][a][k] = -v

    for i in range(n):
        for j in range(i + 1, n):
            comps = [P[i][j].diff(l) for l in range(n)]
            for a in range(m):
                acc = z
                for k in range(n):
                    acc = acc + U[i][a][k] * P[j][k]
                comps.append(acc)
            put(i, j, comps)
        for a in range(m):
            comps = [z] * n
            for e in range(m):
                acc = z
                for k in range(n):
                    acc = acc + P[i][k] * G[k][a][e]
                comps.append(acc)
            put(i, n + a, comps)
    for a in range(m):
        for b in range(a + 1, m):
            put(n + a, n + b, [z] * n + [C[a][b][e] for e in range(m)])
    im = [[one if j == i else z for j in range(n)] for i in range(n)] + [[z] * n for _ in range(m)]
    labels = tuple(f"d{x}" for x in c.chart.names) + tuple(f"d{f}" for f in c.fiber_names)
    return AlgebroidData(c.chart, r, anchor, S, im, labels)


# ---------------------------------------------------------------- codimension one


@dataclass
class Codim1Triple:
    chart: Chart
    pi_S: Multivector
    V: Multivector
    lambda0: Multivector
    theta: DiffForm
    Z: Multivector
    U: list  # U[i][j]: U(dx^i) = U[i][j] dx^j
    rank: int = 1

    def __post_init__(self):
        n = self.chart.dim
        if self.rank != 1:
            raise InvariantError("codimension-one triples have a rank-one kernel")
        if len(self.U) != n or any(len(r) != n for r in self.U):
            raise InvariantError("U must be a dim x dim matrix")
        for obj in (self.pi_S, self.V, self.lambda0, self.theta, self.Z):
            if obj.chart != self.chart:
                raise InvariantError("all triple data must live on the base chart")

    def U_of(self, alpha: DiffForm) -> DiffForm:
        n = self.chart.dim
        comps = [_z(self.chart)] * n
        for (i,), a in alpha.terms.items():
            comps = [c + a * u for c, u in zip(comps, self.U[i])]
        return DiffForm.one_form(self.chart, comps)

    def to_json(self) -> dict:
        names = self.chart.names
        n = self.chart.dim
        return {
            "base_vars": list(names),
            "pi_S": self.pi_S.to_json(),
            "V": self.V.to_json(),
            "lambda0": self.lambda0.to_json(),
            "theta": self.theta.to_json(),
            "Z": self.Z.to_json(),
            "U": [{"dvar": names[i], "var": names[j], "coeff": self.chart.fmt(self.U[i][j])}
                  for i in range(n) for j in range(n) if not self.U[i][j].is_zero],
        }


def check_codim1_triple(t: Codim1Triple, seed: int = 0, samples: int = 32, tol: float = 1e-9) -> Verdict:
    ch = t.chart
    n = ch.dim
    names = ch.names
    pi = t.pi_S
    rng = np.random.default_rng(seed)
    dxs = [DiffForm.dx(ch, i) for i in range(n)]

    v_res = sharp(pi, t.theta) - t.V
    vres = [(f"V d/d{names[i]}", c) for (i,), c in v_res.terms.items()]

    dZ = schouten(pi, t.Z)
    lam = []
    for i in range(n):
        for j in range(n):
            lhs = t.U_of(dxs[i]).interior(sharp(pi, dxs[j])).function_value()
            rhs = pair(t.lambda0, dxs[i], dxs[j]) + pair(dZ, dxs[i], dxs[j])
            lam.append((f"lambda d{names[i]},d{names[j]}", lhs - rhs))

    dtheta = t.theta.d()
    s2 = []
    for i in range(n):
        res = dtheta.interior(sharp(pi, dxs[i]))
        s2.extend((f"S2'' i_(pi#d{names[i]}) dtheta d{names[k]}", c) for (k,), c in res.terms.items())

    s3 = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = dxs[i], dxs[j]
            Ua, Ub = t.U_of(a), t.U_of(b)
            lhs = t.U_of(cotangent_bracket(a, b, pi))
            rhs = (Ub.lie(sharp(pi, a)) - Ua.d().interior(sharp(pi, b))
                   + t.theta.scale(pair(pi, Ua, b)) + Ub.scale(pair(pi, t.theta, a))
                   - Ua.scale(pair(pi, t.theta, b)))
            res = lhs - rhs
            s3.extend((f"S3'' d{names[i]},d{names[j]} d{names[k]}", c) for (k,), c in res.terms.items())

    return Verdict([
        residual_check("V", ch, vres, rng, samples, tol),
        residual_check("lambda0_Z", ch, lam, rng, samples, tol),
        residual_check("S2''", ch, s2, rng, samples, tol),
        residual_check("S3''", ch, s3, rng, samples, tol),
    ])


def couplingdata_from_codim1(t: Codim1Triple, fiber_name: str | None = None, verify: bool = True) -> CouplingData:
    """Rank-one coupling data of a verified triple; the connection
    coefficient is ``Gamma_i = -theta_i`` (see the developer notes)."""
    if verify:
        v = check_codim1_triple(t)
        if not v.passed:
            raise InvariantError(f"triple fails verification: {', '.join(v.failed())}")
    n = t.chart.dim
    theta = t.theta.components()
    gamma = [[[-theta[i]]] for i in range(n)]
    U = [[list(t.U[i])] for i in range(n)]
    C = [[[_z(t.chart)]]]
    fib = (fiber_name,) if fiber_name else ()
    return CouplingData(t.chart, t.pi_S, 1, C, gamma, U, fib)
