import numpy as np
import pytest
import sympy as sp

from oracles import rand_poly, symbols, to_sympy
from poissonjet.coupling import (Codim1Triple, CouplingData, InvariantError, check_codim1_triple, check_coupling,
                                 couplingdata_from_codim1)
from poissonjet.expr import Chart, Expr
from poissonjet.geom import DiffForm, Multivector, schouten, sharp
from poissonjet.localmodel import build_local_model

XY = Chart(("x", "y"))
XYZ = Chart(("x", "y", "z"))


def bv(chart, terms):
    return Multivector.from_json(chart, 2, [{"indices": list(i), "coeff": c} for i, c in terms])


def rank1(chart, pi_S, gamma=None, U=None):
    """Abelian rank-one data; ``gamma[i]`` and ``U[i][j]`` are strings."""
    n = chart.dim
    z = Expr.zero(n)
    G = [[[chart.parse(gamma[i]) if gamma else z]] for i in range(n)]
    Um = [[[chart.parse(U[i][j]) if U else z for j in range(n)]] for i in range(n)]
    return CouplingData(chart, pi_S, 1, [[[z]]], G, Um)


def ginzburg_pi():
    return bv(XY, [((0, 1), "x^2 + y^2")])


def test_ginzburg_passes():
    c = rank1(XY, ginzburg_pi(), U=[["-1", "0"], ["0", "-1"]])
    v = check_coupling(c)
    assert v.passed and [ch.mode for ch in v.checks] == ["exact"] * 4


def test_non_skew_U_fails_skew():
    c = rank1(XY, ginzburg_pi(), U=[["-1", "0"], ["0", "0"]])
    v = check_coupling(c)
    assert "skew" in v.failed()


def test_constant_structure_any_base_passes():
    ch = Chart(("x", "y", "w"))
    pi = bv(ch, [((0, 1), "w"), ((1, 2), "x"), ((0, 2), "-y")])
    z = Expr.zero(3)
    so3 = [[[z] * 3 for _ in range(3)] for _ in range(3)]
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        so3[a][b][c] = Expr.one(3)
        so3[b][a][c] = -Expr.one(3)
    data = CouplingData(ch, pi, 3, so3, [[[z] * 3 for _ in range(3)] for _ in range(3)],
                        [[[z] * 3 for _ in range(3)] for _ in range(3)])
    assert check_coupling(data).passed


def test_invariants_enforced():
    with pytest.raises(InvariantError):
        rank1(XYZ, bv(XYZ, [((0, 1), "z"), ((0, 2), "x*z")]))
    z = Expr.zero(2)
    bad = [[[z, z, Expr.one(2)], [z, z, z], [z, z, z]], [[z] * 3] * 3, [[z] * 3] * 3]
    with pytest.raises(InvariantError):
        CouplingData(XY, ginzburg_pi(), 3, bad, [[[z] * 3] * 3] * 2, [[[z] * 2] * 3] * 2)


def test_transitive_instance():
    # U(a, X) = Omega(pi#a, X) with Omega = c dx^dy e1 on the symplectic plane
    for c in (1, 3, -2):
        pi = bv(XY, [((0, 1), "1")])
        omega = DiffForm(XY, 2, {(0, 1): Expr.const(c, 2)})
        U = [[XY.fmt(omega.interior(sharp(pi, DiffForm.dx(XY, i))).components()[j]) for j in range(2)]
             for i in range(2)]
        assert U == [[str(-c), "0"], ["0", str(-c)]]
        assert check_coupling(rank1(XY, pi, U=U)).passed


def _display_s3(c: CouplingData) -> list:
    """The coordinate (S3) display transcribed literally, with the halves."""
    xs = symbols(c.chart)
    n, m = len(xs), c.rank
    P = [[to_sympy(p, c.chart) for p in row] for row in c.P]
    G = [[[to_sympy(c.gamma[i][a][b], c.chart) for b in range(m)] for a in range(m)] for i in range(n)]
    U = [[[to_sympy(c.U[i][a][j], c.chart) for j in range(n)] for a in range(m)] for i in range(n)]
    half = sp.Rational(1, 2)

    def part(i, j, k, a):
        return sum(P[i][l] * (sp.diff(U[j][a][k], xs[l]) - half * sp.diff(U[j][a][l], xs[k])
                              + sum(G[l][d][a] * U[j][d][k] - U[j][d][l] * G[k][d][a] for d in range(m)))
                   + half * sp.diff(P[i][l], xs[k]) * U[j][a][l] for l in range(n))

    out = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for a in range(m):
                    r = part(i, j, k, a) - part(j, i, k, a) - sum(sp.diff(P[i][j], xs[l]) * U[l][a][k]
                                                                  for l in range(n))
                    out.append(sp.expand(r))
    return out


def test_s3_coordinate_display_disagrees_with_invariant_form():
    # witness: symplectic plane, Gamma_x = -1, U = c Id
    c = rank1(XY, bv(XY, [((0, 1), "1")]), gamma=["-1", "0"], U=[["2", "0"], ["0", "2"]])
    assert check_coupling(c).passed
    # the model built from it is Poisson, so the data is genuinely coupling data
    model = build_local_model(c)
    assert schouten(model.pi0, model.pi0).is_zero
    assert any(r != 0 for r in _display_s3(c))


def test_s3_display_agrees_when_connection_vanishes():
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = rand_poly(XY, rng, degree=2, terms=3)
        k = str(int(rng.integers(-3, 4)))
        c = rank1(XY, Multivector(XY, 2, {(0, 1): f}), U=[[k, "0"], ["0", k]])
        assert all(r == 0 for r in _display_s3(c))
        assert check_coupling(c).passed


def triple(chart, pi, theta, V=None, lam=None, Z=None, U=None):
    n = chart.dim
    zero_v = Multivector.zero(chart, 1)
    return Codim1Triple(chart, pi, V if V is not None else sharp(pi, theta),
                        lam if lam is not None else Multivector.zero(chart, 2), theta,
                        Z if Z is not None else zero_v,
                        U if U is not None else [[Expr.zero(n)] * n for _ in range(n)])


def test_ginzburg_triple():
    pi = ginzburg_pi()
    m1 = -Expr.one(2)
    t = triple(XY, pi, DiffForm.zero(XY, 1), lam=pi, U=[[m1, Expr.zero(2)], [Expr.zero(2), m1]])
    assert check_codim1_triple(t).passed
    c = couplingdata_from_codim1(t)
    assert c.U == rank1(XY, pi, U=[["-1", "0"], ["0", "-1"]]).U
    assert check_coupling(c).passed


def test_zero_triple():
    pi = bv(XYZ, [((0, 1), "z"), ((1, 2), "x"), ((0, 2), "-y")])
    t = triple(XYZ, pi, DiffForm.zero(XYZ, 1))
    assert check_codim1_triple(t).passed
    c = couplingdata_from_codim1(t)
    assert all(g.is_zero for row in c.gamma for r in row for g in r)
    assert all(u.is_zero for row in c.U for r in row for u in r)


def test_florian_candidate_fails_s2():
    pi = bv(XYZ, [((1, 2), "x"), ((0, 2), "-y")])
    theta = DiffForm.one_form(XYZ, ["-y", "x", "0"])
    V = Multivector.vector(XYZ, ["0", "0", "x^2 + y^2"])
    t = triple(XYZ, pi, theta, V=V)
    v = check_codim1_triple(t)
    assert v.failed() == ["S2''"]
    assert v.check("S2''").residuals == ["S2'' i_(pi#dz) dtheta dx: 2*x", "S2'' i_(pi#dz) dtheta dy: 2*y"]
    with pytest.raises(InvariantError):
        couplingdata_from_codim1(t)


def test_theta_dx_instance():
    pi = bv(XY, [((0, 1), "1")])
    t = triple(XY, pi, DiffForm.dx(XY, 0))
    assert check_codim1_triple(t).passed
    c = couplingdata_from_codim1(t)
    assert c.gamma[0][0][0] == -Expr.one(2) and c.gamma[1][0][0].is_zero
    assert check_coupling(c).passed


def test_wrong_V_fails():
    pi = bv(XY, [((0, 1), "1")])
    t = triple(XY, pi, DiffForm.dx(XY, 0), V=Multivector.zero(XY, 1))
    assert check_codim1_triple(t).failed() == ["V"]


def random_closed_triple(rng):
    """Abelian rank-one triple with exact theta, U = 0 on a three-dimensional base."""
    pi = Multivector(XYZ, 2, {(0, 1): rand_poly(XYZ, rng, degree=2, terms=2)})
    g = rand_poly(XYZ, rng, degree=2, terms=3)
    theta = DiffForm.function(XYZ, g).d()
    return triple(XYZ, pi, theta)


def test_round_trip_random_triples():
    rng = np.random.default_rng(8)
    for _ in range(20):
        t = random_closed_triple(rng)
        assert check_codim1_triple(t).passed
        assert check_coupling(couplingdata_from_codim1(t)).passed


def test_codim1_and_coupling_verdicts_agree():
    # U = c Id on a three-dimensional base: the model is Poisson, but (S3) also
    # constrains U in the direction transverse to the leaves
    rng = np.random.default_rng(12)
    seen = set()
    for _ in range(12):
        pi = Multivector(XYZ, 2, {(0, 1): rand_poly(XYZ, rng, degree=2, terms=2)})
        theta = DiffForm.function(XYZ, rand_poly(XYZ, rng, degree=2, terms=3)).d()
        c = Expr.const(int(rng.integers(1, 3)), 3)
        U = [[c if i == j else Expr.zero(3) for j in range(3)] for i in range(3)]
        t = triple(XYZ, pi, theta, lam=pi.scale(-c), U=U)
        a = check_codim1_triple(t).passed
        data = couplingdata_from_codim1(t, verify=False)
        assert check_coupling(data).passed == a
        model = build_local_model(data)
        assert schouten(model.pi0, model.pi0).is_zero
        seen.add(a)
    assert seen == {True, False}
