"""JSON model documents: loading and dumping of charts, multivectors, forms,
algebroids, coupling data, codimension-one triples and groupoid charts.

Graded objects are lists of ``{"indices": [...], "coeff": "<expr>"}`` where an
index is either a 0-based integer or a coordinate name.  Index tuples given by
name may be in any order; the sign of the sorting permutation is applied.
"""
from __future__ import annotations

from typing import Sequence

from .algebroid import AlgebroidData, AlgebroidError, Connection, Splitting, structure_from_json
from .coupling import Codim1Triple, CouplingData
from .expr import Chart, Expr
from .geom import DiffForm, GeomError, Multivector
from .groupoid import GroupoidChart
from .jets import Submanifold


class DocumentError(ValueError):
    pass


def require(doc: dict, key: str):
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if key not in doc:
        raise DocumentError(f"document is missing {key!r}")
    return doc[key]


def chart_of(doc: dict, key: str = "vars", fiber_key: str | None = None) -> Chart:
    names = require(doc, key)
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise DocumentError(f"{key!r} must be a list of names")
    fiber = ()
    if fiber_key and fiber_key in doc:
        try:
            fiber = tuple(names.index(n) for n in doc[fiber_key])
        except ValueError:
            raise DocumentError(f"{fiber_key!r} names a coordinate that is not in {key!r}") from None
    if len(set(names)) != len(names):
        raise DocumentError("coordinate names must be distinct")
    return Chart(tuple(names), fiber)


def _index(chart: Chart, i) -> int:
    if isinstance(i, bool):
        raise DocumentError("index must be an integer or a coordinate name")
    if isinstance(i, int):
        if not 0 <= i < chart.dim:
            raise DocumentError(f"index {i} outside the chart")
        return i
    if isinstance(i, str):
        try:
            return chart.index(i)
        except (KeyError, ValueError):
            raise DocumentError(f"unknown coordinate {i!r}") from None
    raise DocumentError("index must be an integer or a coordinate name")


def graded(cls, chart: Chart, degree: int, data) -> Multivector | DiffForm:
    if data is None:
        return cls.zero(chart, degree)
    if not isinstance(data, list):
        raise DocumentError("graded objects are lists of {indices, coeff} terms")
    items = []
    for term in data:
        idx = require(term, "indices")
        if not isinstance(idx, list) or len(idx) != degree:
            raise DocumentError(f"term {term} must have {degree} indices")
        ints = [_index(chart, i) for i in idx]
        if all(isinstance(i, int) for i in idx) and any(ints[k] >= ints[k + 1] for k in range(len(ints) - 1)):
            raise DocumentError(f"index tuple {idx} is not strictly increasing")
        if len(set(ints)) != len(ints):
            raise DocumentError(f"index tuple {idx} repeats a coordinate")
        items.append((tuple(ints), chart.parse(str(require(term, "coeff")))))
    try:
        return cls.from_unsorted(chart, degree, items)
    except GeomError as exc:
        raise DocumentError(str(exc)) from None


def multivector(chart: Chart, degree: int, data) -> Multivector:
    return graded(Multivector, chart, degree, data)


def form(chart: Chart, degree: int, data) -> DiffForm:
    return graded(DiffForm, chart, degree, data)


def dump_graded(obj) -> list:
    names = obj.chart.names
    return [{"indices": [names[i] for i in I], "coeff": obj.chart.fmt(c)} for I, c in obj.terms.items()]


# ---------------------------------------------------------------- poisson and jets


def bivector_doc(doc: dict) -> Multivector:
    chart = chart_of(doc)
    return multivector(chart, 2, require(doc, "bivector"))


def jet_doc(doc: dict) -> tuple:
    pi = bivector_doc(doc)
    normal = require(doc, "normal_vars")
    try:
        S = Submanifold.from_names(pi.chart, normal)
    except (KeyError, ValueError):
        raise DocumentError("normal_vars names a coordinate that is not in vars") from None
    return pi, S


def _label_index(A_labels: Sequence[str], rank: int, key) -> int:
    if isinstance(key, int) and not isinstance(key, bool):
        if not 1 <= key <= rank:
            raise DocumentError(f"frame index {key} outside 1..{rank}")
        return key - 1
    if isinstance(key, str) and key in A_labels:
        return list(A_labels).index(key)
    raise DocumentError(f"unknown frame element {key!r}")


def algebroid_doc(doc: dict) -> tuple:
    """Returns the algebroid and an optional (connection, splitting) pair."""
    try:
        A = AlgebroidData.from_json(doc)
    except (AlgebroidError, KeyError) as exc:
        raise DocumentError(f"bad algebroid document: {exc}") from None
    cartan = None
    if "splitting" in doc:
        ch, r = A.chart, A.rank
        z = Expr.zero(ch.dim)
        gamma = [[[z] * r for _ in range(r)] for _ in range(ch.dim)]
        for term in doc.get("connection", []):
            i = _index(ch, require(term, "var"))
            a = _label_index(A.labels, r, require(term, "a"))
            b = _label_index(A.labels, r, require(term, "b"))
            gamma[i][a][b] = ch.parse(str(require(term, "coeff")))
        sp = doc["splitting"]
        kernel = [_label_index(A.labels, r, k) for k in require(sp, "kernel")]
        matrix = [[ch.parse(str(x)) for x in row] for row in require(sp, "matrix")]
        if len(matrix) != len(kernel) or any(len(row) != r for row in matrix):
            raise DocumentError("splitting matrix must be len(kernel) x rank")
        try:
            cartan = (Connection(ch, r, gamma), Splitting(tuple(kernel), matrix))
        except AlgebroidError as exc:
            raise DocumentError(str(exc)) from None
    return A, cartan


# ---------------------------------------------------------------- coupling data


def _frame_int(term: dict, key: str, rank: int) -> int:
    v = term.get(key, 1)
    if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= rank:
        raise DocumentError(f"{key!r} must be an integer in 1..{rank}")
    return v - 1


def coupling_doc(doc: dict) -> CouplingData:
    chart = chart_of(doc, "base_vars")
    n = chart.dim
    pi_S = multivector(chart, 2, require(doc, "pi_S"))
    kernel = require(doc, "kernel")
    m = require(kernel, "rank")
    if not isinstance(m, int) or m < 1:
        raise DocumentError("kernel rank must be a positive integer")
    z = Expr.zero(n)
    try:
        C = structure_from_json(chart, m, kernel.get("structure", {}))
    except (AlgebroidError, KeyError) as exc:
        raise DocumentError(f"bad kernel structure: {exc}") from None
    gamma = [[[z] * m for _ in range(m)] for _ in range(n)]
    for term in doc.get("gamma", []):
        i = _index(chart, require(term, "var"))
        gamma[i][_frame_int(term, "a", m)][_frame_int(term, "b", m)] = chart.parse(str(require(term, "coeff")))
    U = [[[z] * n for _ in range(m)] for _ in range(n)]
    for term in doc.get("U", []):
        i = _index(chart, require(term, "dvar"))
        j = _index(chart, require(term, "var"))
        U[i][_frame_int(term, "a", m)][j] = chart.parse(str(require(term, "coeff")))
    fiber = tuple(kernel.get("fiber_vars", ()))
    if fiber and (len(fiber) != m or set(fiber) & set(chart.names)):
        raise DocumentError("fiber_vars must give rank new names")
    return CouplingData(chart, pi_S, m, C, gamma, U, fiber)


def is_codim1(doc: dict) -> bool:
    return isinstance(doc, dict) and "theta" in doc and "kernel" not in doc


def codim1_doc(doc: dict) -> Codim1Triple:
    chart = chart_of(doc, "base_vars")
    n = chart.dim
    z = Expr.zero(n)
    U = [[z] * n for _ in range(n)]
    for term in doc.get("U", []):
        i = _index(chart, require(term, "dvar"))
        j = _index(chart, require(term, "var"))
        U[i][j] = chart.parse(str(require(term, "coeff")))
    return Codim1Triple(
        chart,
        multivector(chart, 2, require(doc, "pi_S")),
        multivector(chart, 1, doc.get("V")),
        multivector(chart, 2, doc.get("lambda0")),
        form(chart, 1, doc.get("theta")),
        multivector(chart, 1, doc.get("Z")),
        U,
    )


# ---------------------------------------------------------------- homotopy and groupoids


def homotopy_doc(doc: dict) -> DiffForm:
    chart = chart_of(doc, "vars", "fiber_vars")
    degree = require(doc, "degree")
    if not isinstance(degree, int) or not 0 <= degree <= chart.dim:
        raise DocumentError("degree must be an integer between 0 and the chart dimension")
    return form(chart, degree, require(doc, "form"))


def groupoid_doc(doc: dict) -> tuple:
    """Returns (groupoid chart, 2-form, expected IM data or None)."""
    G = GroupoidChart.from_json(require(doc, "groupoid"))
    omega = form(G.arrow, 2, require(doc, "form"))
    expected = None
    if "im_expected" in doc:
        im = doc["im_expected"]
        b = G.base
        change = [[b.parse(str(x)) for x in row] for row in require(im, "frame_change")]
        mu = [[b.parse(str(x)) for x in row] for row in require(im, "mu")]
        r = len(change)
        if any(len(row) != r for row in change) or len(mu) != r or any(len(row) != b.dim for row in mu):
            raise DocumentError("im_expected: frame_change must be rank x rank and mu rank x dim(base)")
        try:
            C = structure_from_json(b, r, im.get("structure", {}))
        except (AlgebroidError, KeyError) as exc:
            raise DocumentError(f"bad im_expected structure: {exc}") from None
        expected = (change, mu, C)
    return G, omega, expected
