"""Acceptance suite: one summary line per criterion.

Exact criteria compare normalized expressions with zero tolerance; the
groupoid criterion uses the pinned numeric tolerance 1e-9.
"""
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np

from oracles import rand_graded, rand_poly
from poissonjet.algebroid import check_closed_im, check_jacobi, jet_to_algebroid
from poissonjet.coupling import (Codim1Triple, CouplingData, check_codim1_triple, check_coupling,
                                 couplingdata_from_codim1)
from poissonjet.documents import groupoid_doc
from poissonjet.expr import Chart, Expr
from poissonjet.geom import DiffForm, Multivector, cotangent_bracket, schouten, sharp
from poissonjet.groupoid import check_multiplicative, check_oversymplectic, compare_im
from poissonjet.homotopy import homotopy_operator, zero_section_projection
from poissonjet.jets import Submanifold, check_second_order, jet_truncate
from poissonjet.localmodel import build_codim1, build_local_model, verify_local_model

GROUPOID_TOL = 1e-9
XY = Chart(("x", "y"))
XYZ = Chart(("x", "y", "z"))


def bv(chart, terms):
    return Multivector.from_json(chart, 2, [{"indices": list(i), "coeff": c} for i, c in terms])


def zeros(n, *shape):
    return Expr.zero(n) if not shape else [zeros(n, *shape[1:]) for _ in range(shape[0])]


def sign(k):
    return -1 if k % 2 else 1


def test_criterion_1_nonholonomic_example(criterion):
    pi = bv(XYZ, [((0, 1), "z"), ((0, 2), "x*z")])
    S = Submanifold.from_names(XYZ, ["z"])
    square = schouten(pi, pi) == Multivector(XYZ, 3, {(0, 1, 2): XYZ.parse("2*z^2")})
    second = check_second_order(pi, S).passed
    A = jet_to_algebroid(jet_truncate(pi, S), S)
    brackets = A.bracket_table() == {"[dx,dy]": "(1)*dz", "[dx,dz]": "(x)*dz"}
    anchor = all(c.is_zero for row in A.anchor for c in row)
    one, z = Expr.one(2), Expr.zero(2)
    im = A.im == [[one, z], [z, one], [z, z]]
    ok = square and second and brackets and anchor and im and check_jacobi(A).passed and check_closed_im(A).passed
    assert criterion(1, "[pi,pi] = 2z^2 dx^dy^dz, second order, brackets and IM data", ok)


def _rank1(pi, gamma, U):
    n = pi.chart.dim
    return CouplingData(pi.chart, pi, 1, zeros(n, 1, 1, 1), [[[g]] for g in gamma], [[list(r)] for r in U])


def test_criterion_2_local_model_closed_forms(criterion):
    results = []
    # product jet with so(3)
    C = zeros(2, 3, 3, 3)
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[a][b][c], C[b][a][c] = Expr.one(2), -Expr.one(2)
    prod = CouplingData(XY, bv(XY, [((0, 1), "1")]), 3, C, zeros(2, 2, 3, 3), zeros(2, 2, 3, 2))
    m = build_local_model(prod)
    want = bv(m.chart, [((0, 1), "1"), ((2, 3), "z3"), ((3, 4), "z1"), ((2, 4), "-z2")])
    results.append(m.pi0 == want and verify_local_model(m, prod).passed)
    # deformation 1/(1-t) pi_S
    m1, z = -Expr.one(2), Expr.zero(2)
    dfm = _rank1(bv(XY, [((0, 1), "1")]), [z, z], [[m1, z], [z, m1]])
    m = build_local_model(dfm)
    results.append(m.pi0 == bv(m.chart, [((0, 1), "1/(1 - t)")]) and verify_local_model(m, dfm).passed)
    # codimension one, U = 0, theta = dx
    pi = bv(XY, [((0, 1), "1")])
    theta = DiffForm.dx(XY, 0)
    t = Codim1Triple(XY, pi, sharp(pi, theta), Multivector.zero(XY, 2), theta, Multivector.zero(XY, 1),
                     [[z, z], [z, z]])
    c = couplingdata_from_codim1(t)
    m = build_local_model(c)
    lifted = pi.embed(m.chart, [0, 1])
    want = lifted + lifted.contract(theta.embed(m.chart, [0, 1])).wedge(Multivector(m.chart, 1, {(2,): m.chart.parse("t")}))
    results.append(m.pi0 == want and verify_local_model(m, c).passed)
    assert criterion(2, "local-model closed forms (product, deformation, codim-1 U=0) and verification",
                     all(results), f"{sum(results)}/3")


def test_criterion_3_coupling_verdicts(criterion):
    gz = bv(XY, [((0, 1), "x^2 + y^2")])
    m1, z = -Expr.one(2), Expr.zero(2)
    ginzburg = check_coupling(_rank1(gz, [z, z], [[m1, z], [z, m1]])).passed
    z3 = Expr.zero(3)
    fl = bv(XYZ, [((1, 2), "x"), ((0, 2), "-y")])
    t = Codim1Triple(XYZ, fl, Multivector.vector(XYZ, ["0", "0", "x^2 + y^2"]), Multivector.zero(XYZ, 2),
                     DiffForm.one_form(XYZ, ["-y", "x", "0"]), Multivector.zero(XYZ, 1), [[z3] * 3 for _ in range(3)])
    v = check_codim1_triple(t)
    residual = v.check("S2''").residuals == ["S2'' i_(pi#dz) dtheta dx: 2*x", "S2'' i_(pi#dz) dtheta dy: 2*y"]
    florian = v.failed() == ["S2''"] and residual and v.check("S2''").mode == "exact"
    assert criterion(3, "Ginzburg coupling PASS, Florian candidate FAIL on S2'' with residual 2x dx + 2y dy",
                     ginzburg and florian)


def _bundle_charts():
    for nb in (0, 1, 2):
        for nf in (1, 2):
            yield Chart(("x", "y")[:nb] + ("s", "t")[:nf], tuple(range(nb, nb + nf)))


def test_criterion_4_homotopy_identity(criterion):
    charts = list(_bundle_charts())
    rng = np.random.default_rng(2024)
    good = 0
    for _ in range(100):
        ch = charts[int(rng.integers(0, len(charts)))]
        k = int(rng.integers(0, min(3, ch.dim) + 1))
        alpha = rand_graded(DiffForm, ch, k, rng, terms=3, poly_degree=4)
        lhs = homotopy_operator(alpha.d())
        if k:
            lhs = lhs + homotopy_operator(alpha).d()
        good += lhs == alpha - zero_section_projection(alpha)
    assert criterion(4, "dH + Hd = Id - P^* on 100 random polynomial forms", good == 100, f"{good}/100")


def test_criterion_5_schouten_and_cotangent_properties(criterion):
    rng = np.random.default_rng(2025)
    good = 0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        ch = Chart(("x", "y", "z", "w")[:n])
        A, B, C = (rand_graded(Multivector, ch, int(rng.integers(0, min(3, n) + 1)), rng) for _ in range(3))
        p, q = A.degree, B.degree
        anti = schouten(A, B) == schouten(B, A).scale(-sign((p - 1) * (q - 1)))
        leib = schouten(A, B.wedge(C)) == schouten(A, B).wedge(C) + B.wedge(schouten(A, C)).scale(sign((p - 1) * q))
        jac = schouten(A, schouten(B, C)) == (schouten(schouten(A, B), C)
                                             + schouten(B, schouten(A, C)).scale(sign((p - 1) * (q - 1))))
        good += anti and leib and jac
    cot = 0
    for _ in range(50):
        pi = rand_graded(Multivector, XYZ, 2, rng)
        a, b = (rand_graded(DiffForm, XYZ, 1, rng) for _ in range(2))
        f = rand_poly(XYZ, rng)
        cot += (cotangent_bracket(a, b.scale(f), pi)
                == cotangent_bracket(a, b, pi).scale(f) + b.scale(sharp(pi, a).apply(f)))
    assert criterion(5, "Schouten antisymmetry/Leibniz/Jacobi and cotangent Leibniz",
                     good == 100 and cot == 50, f"{good}/100 Schouten, {cot}/50 cotangent")


def _catalog_input(name):
    from importlib import resources
    return json.loads(resources.files("poissonjet").joinpath("data", "catalog", f"{name}.json").read_text())["input"]


def test_criterion_6_groupoid_suite(criterion):
    doc = _catalog_input("counterexample-groupoid")
    G, omega, expected = groupoid_doc(doc)
    over = check_oversymplectic(G, omega, samples=64, seed=0)
    closed = over.check("closed").passed and over.check("closed").mode == "exact"
    rank = over.check("rank")
    rank_ok = rank.passed and rank.detail["ranks"] == [4] and rank.detail["samples"] >= 50
    mult = check_multiplicative(G, omega, samples=128, seed=0, tol=GROUPOID_TOL).check("multiplicative")
    mult_ok = mult.passed and mult.detail["samples"] >= 100 and mult.detail["max_residual"] < GROUPOID_TOL
    im = compare_im(G, omega, *expected, tol=GROUPOID_TOL)
    doc["form"] = doc["form"] + [{"indices": ["u", "v"], "coeff": "1"}]
    G2, bad, _ = groupoid_doc(doc)
    perturbed_fails = not check_multiplicative(G2, bad, samples=128, seed=0, tol=GROUPOID_TOL).passed
    ok = closed and rank_ok and mult_ok and im.passed and perturbed_fails
    detail = f"mult residual {mult.detail['max_residual']:.1e}, IM deviation {im.detail['max_residual']:.1e}"
    assert criterion(6, "groupoid: closed, multiplicative, rank 4, induced IM data, perturbation fails", ok, detail)


def _random_triple(rng):
    """Verified rank-one triple: exact theta, U = c Id on a plane, U = 0 in three dimensions."""
    ch = XY if rng.integers(0, 2) else XYZ
    n = ch.dim
    pi = Multivector(ch, 2, {(0, 1): rand_poly(ch, rng, degree=2, terms=2)})
    theta = DiffForm.function(ch, rand_poly(ch, rng, degree=2, terms=3)).d()
    c = Expr.const(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3))) if n == 2 else 0, n)
    U = [[c if i == j else Expr.zero(n) for j in range(n)] for i in range(n)]
    return Codim1Triple(ch, pi, sharp(pi, theta), pi.scale(-c), theta, Multivector.zero(ch, 1), U)


def test_criterion_7_cross_oracle(criterion):
    rng = np.random.default_rng(2026)
    good = 0
    for _ in range(20):
        t = _random_triple(rng)
        assert check_codim1_triple(t).passed
        a = build_codim1(t, "t")
        b = build_local_model(couplingdata_from_codim1(t, "t"))
        good += a.pi0 == b.pi0 and a.domain_certificate == b.domain_certificate
    assert criterion(7, "build_codim1 equals the block formula on 20 random rank-one triples", good == 20,
                     f"{good}/20")


def test_criterion_8_deterministic_catalog_reports(criterion, tmp_path):
    out = tmp_path / "report.json"
    runs = []
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "poissonjet", "catalog", "run", "--seed", "0", "--json", str(out)],
                              capture_output=True, text=True)
        runs.append((proc.returncode, out.read_bytes()))
    ok = runs[0] == runs[1] and runs[0][0] == 0
    assert criterion(8, "catalog run with seed 0 gives byte-identical reports", ok,
                     f"{len(runs[0][1])} bytes")
