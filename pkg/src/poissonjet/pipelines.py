"""Document-level pipelines shared by the catalog and the command line."""
from __future__ import annotations

from .algebroid import (AlgebroidData, AlgebroidError, check_cartan_splitting, check_closed_im, check_jacobi,
                        jet_to_algebroid)
from .coupling import (InvariantError, check_codim1_triple, check_coupling, coupling_algebroid,
                       couplingdata_from_codim1)
from .documents import (DocumentError, algebroid_doc, bivector_doc, codim1_doc, coupling_doc, dump_graded,
                        groupoid_doc, homotopy_doc, is_codim1, jet_doc, multivector, require)
from .expr import ExprError, PoleError
from .geom import GeomError, exterior_derivative, schouten
from .groupoid import GroupoidError, check_axioms, check_multiplicative, check_oversymplectic, compare_im
from .homotopy import HomotopyError, homotopy_primitive, zero_section_projection
from .jets import JetError, check_second_order, jet_truncate
from .localmodel import ModelError, PoissonModel, build_codim1, build_local_model, total_chart, verify_local_model
from .verdict import Check, Verdict

INPUT_ERRORS = (DocumentError, ExprError, GeomError, JetError, AlgebroidError, InvariantError, ModelError,
                HomotopyError, GroupoidError, PoleError)

# kind -> default action used by the catalog
DEFAULT_ACTION = {
    "poisson": "check",
    "jet": "check",
    "algebroid": "check",
    "coupling": "check",
    "codim1": "check",
    "model": "verify",
    "homotopy": "primitive",
    "groupoid": "check",
}


def algebroid_summary(A: AlgebroidData) -> dict:
    out = {
        "labels": list(A.labels),
        "anchor": {A.labels[a]: str(A.rho(A.frame(a))) for a in range(A.rank)},
        "brackets": A.bracket_table(),
    }
    if A.im is not None:
        out["im"] = {A.labels[a]: str(A.mu(A.frame(a))) for a in range(A.rank)}
    return out


def _algebroid_checks(A: AlgebroidData, v: Verdict, seed: int, prefix: str = "") -> None:
    v.extend(check_jacobi(A, seed), prefix)
    if A.im is not None:
        v.extend(check_closed_im(A, seed), prefix)


def poisson_check(doc, seed, samples, tol) -> Verdict:
    pi = bivector_doc(doc)
    sq = schouten(pi, pi)
    bad = [f"{'^'.join('d' + pi.chart.names[i] for i in I)}: {pi.chart.fmt(c)}" for I, c in sq.terms.items()]
    return Verdict([Check("jacobi", not bad, "exact", bad)], {"schouten_square": dump_graded(sq)})


def jet_compute(doc, seed, samples, tol) -> Verdict:
    pi, S = jet_doc(doc)
    jet = jet_truncate(pi, S)
    data = {"jet": dump_graded(jet.rep), "normal_vars": [S.chart.names[i] for i in S.normal]}
    try:
        data["algebroid"] = algebroid_summary(jet_to_algebroid(jet, S))
    except AlgebroidError as exc:
        data["algebroid_error"] = str(exc)
    return Verdict([], data)


def jet_check(doc, seed, samples, tol) -> Verdict:
    pi, S = jet_doc(doc)
    v = check_second_order(pi, S, seed, samples, tol)
    data = {"schouten_square": v.data["schouten_square"]}
    if v.passed and all(c.is_rational for c in pi.terms.values()):
        A = jet_to_algebroid(jet_truncate(pi, S), S)
        data["algebroid"] = algebroid_summary(A)
        _algebroid_checks(A, v, seed, "algebroid.")
    return Verdict(v.checks, data)


def algebroid_from_jet(doc, seed, samples, tol) -> Verdict:
    pi, S = jet_doc(doc)
    A = jet_to_algebroid(jet_truncate(pi, S), S)
    return Verdict([], {"algebroid": A.to_json(), "summary": algebroid_summary(A)})


def algebroid_check(doc, seed, samples, tol) -> Verdict:
    if "bivector" in doc:
        pi, S = jet_doc(doc)
        A, cartan = jet_to_algebroid(jet_truncate(pi, S), S), None
    else:
        A, cartan = algebroid_doc(doc)
    v = Verdict([], {"summary": algebroid_summary(A)})
    _algebroid_checks(A, v, seed)
    if cartan is not None:
        v.extend(check_cartan_splitting(A, *cartan))
    return v


def coupling_check(doc, seed, samples, tol) -> Verdict:
    c = coupling_doc(doc)
    v = check_coupling(c, seed, samples, tol)
    return Verdict(v.checks, {"algebroid": algebroid_summary(coupling_algebroid(c))})


def codim1_check(doc, seed, samples, tol) -> Verdict:
    t = codim1_doc(doc)
    v = check_codim1_triple(t, seed, samples, tol)
    data = {}
    if v.passed and all(e.is_rational for row in t.U for e in row):
        c = couplingdata_from_codim1(t, doc.get("fiber_var"), verify=False)
        data["coupling"] = c.to_json()
        v.extend(check_coupling(c, seed, samples, tol), "coupling.")
    return Verdict(v.checks, data)


def _model_json(m: PoissonModel) -> dict:
    return {
        "vars": list(m.chart.names),
        "fiber_vars": [m.chart.names[i] for i in m.fiber_indices],
        "bivector": dump_graded(m.pi0),
        "domain_certificate": m.chart.fmt(m.domain_certificate),
    }


def _model_inputs(doc):
    """Coupling data, the built model and pre-checks for a model document."""
    if is_codim1(doc):
        t = codim1_doc(doc)
        pre = check_codim1_triple(t)
        if not pre.passed:
            return None, None, Verdict(pre.checks)
        c = couplingdata_from_codim1(t, doc.get("fiber_var"), verify=False)
        m = build_codim1(t, c.fiber_names[0])
        other = build_local_model(c)
        same = other.pi0 == m.pi0 and other.domain_certificate == m.domain_certificate
        bad = [] if same else [f"block formula gives {other.pi0}"]
        return c, m, Verdict([Check("cross_oracle", same, "exact", bad)])
    c = coupling_doc(doc)
    return c, build_local_model(c), Verdict([])


def model_build(doc, seed, samples, tol) -> Verdict:
    c, m, pre = _model_inputs(doc)
    if m is None:
        return pre
    return Verdict(pre.checks, {"model": _model_json(m)})


def model_verify(doc, seed, samples, tol) -> Verdict:
    c, m, pre = _model_inputs(doc)
    if m is None:
        return pre
    if "model" in doc:
        sup = doc["model"]
        ch = total_chart(c)
        if list(require(sup, "vars")) != list(ch.names):
            raise DocumentError(f"model vars must be {list(ch.names)}")
        m = PoissonModel(ch, multivector(ch, 2, require(sup, "bivector")), m.domain_certificate, c.chart.dim, c.rank)
    leaves = doc.get("leaves", [])
    if not isinstance(leaves, list) or not all(isinstance(l, list) for l in leaves):
        raise DocumentError("leaves must be a list of lists of base coordinate names")
    v = verify_local_model(m, c, leaves)
    return Verdict(pre.checks + v.checks, {"model": _model_json(m)})


def homotopy_primitive_run(doc, seed, samples, tol) -> Verdict:
    alpha = homotopy_doc(doc)
    beta = homotopy_primitive(alpha)
    d_ok = exterior_derivative(beta) == alpha
    z_ok = zero_section_projection(beta).is_zero
    checks = [
        Check("d_primitive", d_ok, "exact", [] if d_ok else [str(exterior_derivative(beta) - alpha)]),
        Check("primitive_vanishes_on_zero_section", z_ok, "exact", [] if z_ok else [str(zero_section_projection(beta))]),
    ]
    return Verdict(checks, {"primitive": dump_graded(beta), "pretty": str(beta)})


def groupoid_check(doc, seed, samples, tol) -> Verdict:
    G, omega, expected = groupoid_doc(doc)
    v = check_axioms(G, seed=seed)
    v.extend(check_oversymplectic(G, omega, samples=samples, seed=seed))
    v.extend(check_multiplicative(G, omega, samples=samples, seed=seed, tol=tol))
    if expected is not None:
        v.checks.append(compare_im(G, omega, *expected, seed=seed, tol=tol))
    return v


PIPELINES = {
    ("poisson", "check"): poisson_check,
    ("jet", "compute"): jet_compute,
    ("jet", "check"): jet_check,
    ("algebroid", "from-jet"): algebroid_from_jet,
    ("algebroid", "check"): algebroid_check,
    ("coupling", "check"): coupling_check,
    ("codim1", "check"): codim1_check,
    ("model", "build"): model_build,
    ("model", "verify"): model_verify,
    ("homotopy", "primitive"): homotopy_primitive_run,
    ("groupoid", "check"): groupoid_check,
}


def run(kind: str, action: str, doc, seed: int = 0, samples: int = 128, tol: float = 1e-9) -> Verdict:
    try:
        fn = PIPELINES[(kind, action)]
    except KeyError:
        raise DocumentError(f"unknown command {kind} {action}") from None
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    return fn(doc, seed, samples, tol)
