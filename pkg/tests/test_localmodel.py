import itertools

import numpy as np
import pytest
import sympy as sp

from oracles import local_model_matrix, rand_poly, symbols, to_sympy
from poissonjet.coupling import Codim1Triple, CouplingData, couplingdata_from_codim1
from poissonjet.expr import Chart, Expr
from poissonjet.geom import DiffForm, Multivector, sharp
from poissonjet.localmodel import (ModelError, PoissonModel, build_codim1, build_local_model, det,
                                  verify_local_model)

XY = Chart(("x", "y"))


def bv(chart, terms):
    return Multivector.from_json(chart, 2, [{"indices": list(i), "coeff": c} for i, c in terms])


def zeros(n, *shape):
    if not shape:
        return Expr.zero(n)
    return [zeros(n, *shape[1:]) for _ in range(shape[0])]


def so3_product():
    z = Expr.zero(2)
    C = zeros(2, 3, 3, 3)
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[a][b][c] = Expr.one(2)
        C[b][a][c] = -Expr.one(2)
    return CouplingData(XY, bv(XY, [((0, 1), "1")]), 3, C, zeros(2, 2, 3, 3), zeros(2, 2, 3, 2))


def rank1(pi, gamma, U):
    n = pi.chart.dim
    return CouplingData(pi.chart, pi, 1, zeros(n, 1, 1, 1), [[[g]] for g in gamma],
                        [[list(row)] for row in U])


def test_so3_product_model():
    m = build_local_model(so3_product())
    ch = m.chart
    assert ch.names == ("x", "y", "z1", "z2", "z3")
    want = bv(ch, [((0, 1), "1"), ((2, 3), "z3"), ((3, 4), "z1"), ((2, 4), "-z2")])
    assert m.pi0 == want
    assert m.domain_certificate == 1
    assert verify_local_model(m, so3_product()).passed


def test_deformation_model():
    m1 = -Expr.one(2)
    c = rank1(bv(XY, [((0, 1), "1")]), [Expr.zero(2)] * 2, [[m1, Expr.zero(2)], [Expr.zero(2), m1]])
    m = build_local_model(c)
    assert m.pi0 == bv(m.chart, [((0, 1), "1/(1 - t)")])
    assert m.domain_certificate == m.chart.parse("(1 - t)^2")
    assert verify_local_model(m, c).passed


def codim1_theta_dx():
    pi = bv(XY, [((0, 1), "1")])
    theta = DiffForm.dx(XY, 0)
    z = Expr.zero(2)
    return Codim1Triple(XY, pi, sharp(pi, theta), Multivector.zero(XY, 2), theta, Multivector.zero(XY, 1),
                        [[z, z], [z, z]])


def test_codim1_u0_model():
    t = codim1_theta_dx()
    c = couplingdata_from_codim1(t)
    m = build_local_model(c)
    # pi_S + pi_S#(dx) ^ t d/dt with pi_S#(dx) = d/dy
    assert m.pi0 == bv(m.chart, [((0, 1), "1"), ((1, 2), "t")])
    assert build_codim1(t).pi0 == m.pi0
    assert verify_local_model(m, c).passed


def test_ginzburg_codim1_model():
    pi = bv(XY, [((0, 1), "x^2 + y^2")])
    z, m1 = Expr.zero(2), -Expr.one(2)
    t = Codim1Triple(XY, pi, Multivector.zero(XY, 1), pi, DiffForm.zero(XY, 1), Multivector.zero(XY, 1),
                     [[m1, z], [z, m1]])
    m = build_codim1(t)
    assert m.pi0 == bv(m.chart, [((0, 1), "(x^2 + y^2)/(1 - t)")])
    c = couplingdata_from_codim1(t)
    assert build_local_model(c).pi0 == m.pi0
    assert verify_local_model(m, c).passed


def test_zero_triple_model():
    ch = Chart(("x", "y", "w"))
    pi = bv(ch, [((0, 1), "w"), ((1, 2), "x"), ((0, 2), "-y")])
    z = Expr.zero(3)
    t = Codim1Triple(ch, pi, Multivector.zero(ch, 1), Multivector.zero(ch, 2), DiffForm.zero(ch, 1),
                     Multivector.zero(ch, 1), [[z] * 3 for _ in range(3)])
    m = build_codim1(t)
    assert m.pi0 == pi.embed(m.chart, [0, 1, 2])


def test_perturbed_product_fails_only_jacobi():
    m = build_local_model(so3_product())
    bad = m.pi0 + bv(m.chart, [((0, 2), "z1^2")])
    v = verify_local_model(PoissonModel(m.chart, bad, m.domain_certificate, 2, 3), so3_product())
    assert v.failed() == ["jacobi"]


def test_leaf_tangency():
    ch = Chart(("x", "y", "w"))
    pi = bv(ch, [((0, 1), "w")])
    c = CouplingData(ch, pi, 1, zeros(3, 1, 1, 1), zeros(3, 3, 1, 1), zeros(3, 3, 1, 3))
    m = build_local_model(c)
    assert verify_local_model(m, c, [["w"]]).passed
    with pytest.raises(ModelError):
        verify_local_model(m, c, [["x"]])


def test_block_formula_against_sympy_oracle():
    rng = np.random.default_rng(9)
    lie = {(0, 1, 1): 1}  # [e1, e2] = e2
    for _ in range(6):
        f = rand_poly(XY, rng, degree=2, terms=2)
        pi = Multivector(XY, 2, {(0, 1): f if not f.is_zero else Expr.one(2)})
        m = 2
        C = zeros(2, m, m, m)
        for (a, b, c), v in lie.items():
            C[a][b][c] = Expr.const(v, 2)
            C[b][a][c] = Expr.const(-v, 2)
        # Gamma preserving the bracket is not needed by the block formula
        G = [[[rand_poly(XY, rng, degree=1, terms=1) for _ in range(m)] for _ in range(m)] for _ in range(2)]
        u = [rand_poly(XY, rng, degree=1, terms=1) for _ in range(m)]
        U = [[[u[a] if i == j else Expr.zero(2) for j in range(2)] for a in range(m)] for i in range(2)]
        data = CouplingData(XY, pi, m, C, G, U)
        model = build_local_model(data)
        xs = symbols(XY)
        zs = list(sp.symbols(data.fiber_names, real=True))
        sy = lambda e: to_sympy(e, XY)  # noqa: E731
        P = [[sy(e) for e in row] for row in data.P]
        want, D = local_model_matrix(P, [[[sy(e) for e in r] for r in b] for b in C],
                                     [[[sy(e) for e in r] for r in b] for b in G],
                                     [[[sy(e) for e in r] for r in b] for b in U], xs, zs)
        got = model.pi0.matrix()
        for i, j in itertools.product(range(4), repeat=2):
            assert sp.cancel(to_sympy(got[i][j], model.chart) - want[i, j]) == 0
        assert sp.expand(to_sympy(model.domain_certificate, model.chart) - D) == 0


def test_certificate_is_determinant_and_one_on_zero_section():
    m1 = -Expr.one(2)
    c = rank1(bv(XY, [((0, 1), "1")]), [Expr.zero(2)] * 2, [[m1, Expr.zero(2)], [Expr.zero(2), m1]])
    m = build_local_model(c)
    t = m.chart.parse("t")
    one = Expr.one(3)
    assert m.domain_certificate == det([[one - t, Expr.zero(3)], [Expr.zero(3), one - t]])
    assert m.domain_certificate.subs_zero(m.fiber_indices) == 1


def test_determinant_small_cases():
    ch = Chart(("a", "b"))
    p = ch.parse
    assert det([[p("a"), p("b")], [p("1"), p("a")]]) == p("a^2 - b")
    with pytest.raises(ModelError):
        det([])
