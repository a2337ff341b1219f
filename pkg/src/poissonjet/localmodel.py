"""Local-model Poisson structures built from coupling data.

On the total chart (x^i, z_a) the coefficient matrix of pi_0 is

    [[gamma,        gamma G          ],
     [G^T gamma,    G^T gamma G + K  ]]

where ``N = Id + <z, U>`` (``N_ij = delta_ij + U^{ia}_j z_a``), ``gamma =
N^{-1} pi_S`` (so ``gamma^sharp = pi_S^sharp N^{-1}``), ``G_ja = Gamma^c_{ja}
z_c`` and ``K_ab = C^c_{ab} z_c`` is the linear Lie-Poisson block.  The
inverse is taken as adjugate over determinant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebroid import jet_to_algebroid
from .coupling import Codim1Triple, CouplingData, coupling_algebroid, default_fiber_names
from .expr import Chart, Expr
from .geom import DiffForm, Multivector, schouten
from .jets import JetError, Submanifold, is_tangent, jet_truncate
from .verdict import Check, Verdict


class ModelError(ValueError):
    pass


def det(M: Sequence[Sequence[Expr]]) -> Expr:
    """Fraction-free Bareiss elimination over polynomial entries."""
    n = len(M)
    if n == 0:
        raise ModelError("empty matrix")
    nv = M[0][0].nvars
    A = [list(row) for row in M]
    sign = 1
    prev = Expr.one(nv)
    for k in range(n - 1):
        if A[k][k].is_zero:
            for r in range(k + 1, n):
                if not A[r][k].is_zero:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return Expr.zero(nv)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return A[n - 1][n - 1] if sign > 0 else -A[n - 1][n - 1]


def adjugate(M: Sequence[Sequence[Expr]]) -> list:
    n = len(M)
    nv = M[0][0].nvars
    if n == 1:
        return [[Expr.one(nv)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            cof = det(minor)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


def _matmul(A, B, nv):
    n, k, m = len(A), len(B), len(B[0]) if B else 0
    z = Expr.zero(nv)
    out = [[z] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = z
            for l in range(k):
                if not A[i][l].is_zero and not B[l][j].is_zero:
                    acc = acc + A[i][l] * B[l][j]
            out[i][j] = acc
    return out


@dataclass
class PoissonModel:
    chart: Chart
    pi0: Multivector
    domain_certificate: Expr
    base_dim: int
    rank: int

    @property
    def zero_section(self) -> Submanifold:
        return Submanifold(self.chart, tuple(range(self.base_dim, self.base_dim + self.rank)))

    @property
    def fiber_indices(self) -> tuple:
        return tuple(range(self.base_dim, self.base_dim + self.rank))

    def to_json(self) -> dict:
        return {
            "vars": list(self.chart.names),
            "fiber_vars": [self.chart.names[i] for i in self.fiber_indices],
            "bivector": self.pi0.to_json(),
            "domain_certificate": self.chart.fmt(self.domain_certificate),
        }


def total_chart(c: CouplingData) -> Chart:
    names = tuple(c.chart.names) + tuple(c.fiber_names)
    n = c.chart.dim
    return Chart(names, tuple(range(n, n + c.rank)))


def _lift_all(rows, mapping, nv):
    return [[e.remap(mapping, nv) for e in row] for row in rows]


def _gamma_matrix(P, U_rows, n, m, nv, fiber):
    """N = Id + <z,U> and gamma = adj(N) P / det(N) on the total chart."""
    one = Expr.one(nv)
    N = [[one if i == j else Expr.zero(nv) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            for a in range(m):
                u = U_rows[i][a][j]
                if not u.is_zero:
                    N[i][j] = N[i][j] + u * Expr.var(fiber[a], nv)
    D = det(N)
    if D.is_zero:
        raise ModelError("Id + <z,U> is singular everywhere")
    gamma = _matmul(adjugate(N), P, nv)
    gamma = [[g / D for g in row] for row in gamma]
    for i in range(n):
        for j in range(n):
            if gamma[i][j] != -gamma[j][i]:
                raise ModelError("gamma is not skew: the coupling tensor violates the skew condition")
    return gamma, D


def build_local_model(c: CouplingData) -> PoissonModel:
    ch = total_chart(c)
    n, m, nv = c.chart.dim, c.rank, ch.dim
    fiber = list(range(n, n + m))
    base_map = list(range(n))
    P = _lift_all(c.P, base_map, nv)
    U = [[[e.remap(base_map, nv) for e in row] for row in block] for block in c.U]
    gamma, D = _gamma_matrix(P, U, n, m, nv, fiber)
    z = Expr.zero(nv)
    G = [[z] * m for _ in range(n)]
    for j in range(n):
        for a in range(m):
            acc = z
            for cc in range(m):
                g = c.gamma[j][a][cc]
                if not g.is_zero:
                    acc = acc + g.remap(base_map, nv) * Expr.var(fiber[cc], nv)
            G[j][a] = acc
    K = [[z] * m for _ in range(m)]
    for a in range(m):
        for b in range(m):
            acc = z
            for cc in range(m):
                k = c.C[a][b][cc]
                if not k.is_zero:
                    acc = acc + k.remap(base_map, nv) * Expr.var(fiber[cc], nv)
            K[a][b] = acc
    gG = _matmul(gamma, G, nv)
    Gt = [[G[j][a] for j in range(n)] for a in range(m)]
    Gtg = _matmul(Gt, gamma, nv)
    GtgG = _matmul(Gt, gG, nv)
    full = [[z] * nv for _ in range(nv)]
    for i in range(n):
        for j in range(n):
            full[i][j] = gamma[i][j]
        for a in range(m):
            full[i][n + a] = gG[i][a]
            full[n + a][i] = Gtg[a][i]
    for a in range(m):
        for b in range(m):
            full[n + a][n + b] = GtgG[a][b] + K[a][b]
    pi0 = Multivector.from_matrix(ch, full)
    return PoissonModel(ch, pi0, D, n, m)


def build_codim1(t: Codim1Triple, fiber_name: str | None = None) -> PoissonModel:
    """``pi_0 = gamma_t + gamma_t^sharp(theta) ^ t d/dt`` with
    ``gamma_t^sharp = pi_S^sharp (Id + tU)^{-1}``."""
    base = t.chart
    fname = fiber_name or default_fiber_names(base, 1)[0]
    n = base.dim
    ch = Chart(tuple(base.names) + (fname,), (n,))
    nv = ch.dim
    base_map = list(range(n))
    P = _lift_all(t.pi_S.matrix(), base_map, nv)
    U = [[[e.remap(base_map, nv) for e in t.U[i]]] for i in range(n)]
    gamma, D = _gamma_matrix(P, U, n, 1, nv, [n])
    z = Expr.zero(nv)
    full = [[z] * nv for _ in range(nv)]
    for i in range(n):
        for j in range(n):
            full[i][j] = gamma[i][j]
    gt = Multivector.from_matrix(ch, full)
    theta = t.theta.embed(ch, base_map)
    tvar = Expr.var(n, nv)
    Et = Multivector(ch, 1, {(n,): tvar})
    pi0 = gt + gt.contract(theta).wedge(Et) if not theta.is_zero else gt
    return PoissonModel(ch, pi0, D, n, 1)


def _jacobi_check(m: PoissonModel) -> Check:
    sq = schouten(m.pi0, m.pi0)
    bad = [f"{list(I)}: {m.chart.fmt(Expr.from_poly(c.numer))}" for I, c in sq.terms.items()]
    return Check("jacobi", not bad, "exact", bad)


def _jet_check(m: PoissonModel, c: CouplingData) -> Check:
    S = m.zero_section
    try:
        got = jet_to_algebroid(jet_truncate(m.pi0, S), S)
    except (JetError, ValueError) as exc:
        return Check("jet_recovery", False, "exact", [str(exc)])
    want = coupling_algebroid(c)
    bad = []
    r = want.rank
    fmt = want.chart.fmt
    if got.chart != want.chart:
        return Check("jet_recovery", False, "exact", ["base charts differ"])
    for a in range(r):
        for i in range(want.chart.dim):
            if got.anchor[a][i] != want.anchor[a][i]:
                bad.append(f"anchor {want.labels[a]} d/d{want.chart.names[i]}: {fmt(got.anchor[a][i])} != {fmt(want.anchor[a][i])}")
            if got.im[a][i] != want.im[a][i]:
                bad.append(f"mu {want.labels[a]} d{want.chart.names[i]}: {fmt(got.im[a][i])} != {fmt(want.im[a][i])}")
    for a in range(r):
        for b in range(a + 1, r):
            for k in range(r):
                if got.structure[a][b][k] != want.structure[a][b][k]:
                    bad.append(f"[{want.labels[a]},{want.labels[b]}] {want.labels[k]}: "
                               f"{fmt(got.structure[a][b][k])} != {fmt(want.structure[a][b][k])}")
    return Check("jet_recovery", not bad, "exact", bad)


def _tangency_check(m: PoissonModel, c: CouplingData, leaves: Iterable[Sequence[str]]) -> Check:
    bad = []
    if not is_tangent(m.pi0, m.zero_section):
        bad.append("zero section")
    for leaf in leaves:
        P = Submanifold.from_names(c.chart, leaf)
        if not is_tangent(c.pi_S, P):
            raise ModelError(f"{list(leaf)} does not cut out a Poisson submanifold of the base")
        lifted = Submanifold(m.chart, P.normal)
        if not is_tangent(m.pi0, lifted):
            bad.append(f"preimage of {{{', '.join(n + '=0' for n in leaf)}}}")
    return Check("tangency", not bad, "exact", bad)


def verify_local_model(m: PoissonModel, c: CouplingData, leaves: Iterable[Sequence[str]] = ()) -> Verdict:
    if tuple(m.chart.names[:m.base_dim]) != tuple(c.chart.names) or m.rank != c.rank:
        raise ModelError("model and coupling data live on different charts")
    return Verdict([_jacobi_check(m), _jet_check(m, c), _tangency_check(m, c, list(leaves))],
                   {"domain_certificate": m.chart.fmt(m.domain_certificate)})
