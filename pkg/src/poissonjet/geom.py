"""Multivector fields, differential forms and the Schouten calculus on a chart.

Both kinds of tensors are stored as sparse maps from strictly increasing
index tuples to expressions.  Conventions:

* ``i_alpha`` of a 1-form into a multivector contracts the first slot, so
  ``sharp(pi, alpha) = i_alpha pi``; for ``pi = dx^dy`` this gives ``dx -> dy``.
* ``i_X`` of a vector field into a form also contracts the first slot.
* The Schouten bracket is normalized so that ``[pi, pi](df, dg, dh)`` equals
  twice the Jacobiator of ``{f, g} = pi(df, dg)``.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .expr import Chart, Expr, ExprError


class GeomError(ValueError):
    pass


def merge_indices(a: tuple, b: tuple):
    """Sign and sorted union of two increasing index tuples, or ``(0, None)``
    when they share an index."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, None
    seq = list(a) + list(b)
    inversions = 0
    for i in range(len(a)):
        for j in range(len(b)):
            if a[i] > b[j]:
                inversions += 1
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def _add_term(terms: dict, idx: tuple, c: Expr):
    if c.is_zero:
        return
    if idx in terms:
        s = terms[idx] + c
        if s.is_zero:
            del terms[idx]
        else:
            terms[idx] = s
    else:
        terms[idx] = c


class _Graded:
    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Mapping[tuple, Expr] | None = None):
        self.chart = chart
        self.degree = degree
        clean: dict = {}
        if degree <= chart.dim:
            for idx, c in (terms or {}).items():
                idx = tuple(idx)
                if len(idx) != degree:
                    raise GeomError(f"index tuple {idx} does not have length {degree}")
                if any(idx[k] >= idx[k + 1] for k in range(len(idx) - 1)):
                    raise GeomError(f"index tuple {idx} is not strictly increasing")
                if any(not 0 <= i < chart.dim for i in idx):
                    raise GeomError(f"index tuple {idx} outside the chart")
                if not isinstance(c, Expr):
                    c = chart.parse(c)
                elif c.nvars != chart.dim:
                    raise GeomError("coefficient belongs to another chart")
                _add_term(clean, idx, c)
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def from_unsorted(cls, chart: Chart, degree: int, items: Iterable[tuple]):
        """Build from ``(indices, coeff)`` pairs with arbitrary index order,
        applying the sign of the sorting permutation."""
        terms: dict = {}
        for idx, c in items:
            idx = tuple(idx)
            if len(set(idx)) < len(idx):
                continue
            order = sorted(range(len(idx)), key=lambda k: idx[k])
            sign = _perm_sign(order)
            c = c if isinstance(c, Expr) else chart.parse(c)
            _add_term(terms, tuple(sorted(idx)), c if sign > 0 else -c)
        return cls(chart, degree, terms)

    def _same(self, other):
        if type(other) is not type(self):
            raise GeomError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.chart != self.chart:
            raise GeomError("chart mismatch")

    def _new(self, degree, terms):
        return type(self)(self.chart, degree, terms)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if self.chart != other.chart:
            return False
        if not self.terms and not other.terms:
            return True
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((type(self).__name__, self.degree, tuple((k, v.key) for k, v in self.terms.items())))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, idx: Sequence[int]) -> Expr:
        """Coefficient for an arbitrary (possibly unsorted) index tuple."""
        idx = tuple(idx)
        if len(set(idx)) < len(idx):
            return Expr.zero(self.chart.dim)
        order = sorted(range(len(idx)), key=lambda k: idx[k])
        c = self.terms.get(tuple(sorted(idx)), Expr.zero(self.chart.dim))
        return c if _perm_sign(order) > 0 else -c

    def __add__(self, other):
        self._same(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.degree != other.degree:
            raise GeomError("cannot add tensors of different degree")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            _add_term(terms, k, v)
        return self._new(self.degree, terms)

    def __neg__(self):
        return self._new(self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "_Graded":
        f = f if isinstance(f, Expr) else self.chart.const(f)
        return self._new(self.degree, {k: v * f for k, v in self.terms.items()})

    __rmul__ = scale

    def __mul__(self, f):
        return self.scale(f)

    def wedge(self, other):
        self._same(other)
        terms: dict = {}
        for I, a in self.terms.items():
            for J, b in other.terms.items():
                sign, K = merge_indices(I, J)
                if sign:
                    _add_term(terms, K, a * b if sign > 0 else -(a * b))
        return self._new(self.degree + other.degree, terms)

    def map_coeffs(self, fn):
        return self._new(self.degree, {k: fn(v) for k, v in self.terms.items()})

    def embed(self, chart: Chart, mapping: Sequence[int]):
        """Push coefficients and indices into ``chart`` along an injective
        index map (variable ``i`` becomes ``mapping[i]``)."""
        items = [(tuple(mapping[i] for i in I), c.remap(mapping, chart.dim)) for I, c in self.terms.items()]
        return type(self).from_unsorted(chart, self.degree, items)

    def diff(self, k: int):
        return self.map_coeffs(lambda c: c.diff(k))

    def to_json(self) -> list:
        return [{"indices": list(I), "coeff": self.chart.fmt(c)} for I, c in self.terms.items()]

    @classmethod
    def from_json(cls, chart: Chart, degree: int, data: list):
        terms: dict = {}
        for item in data:
            idx = tuple(item["indices"])
            if any(not isinstance(i, int) for i in idx):
                raise GeomError("indices must be integers")
            if any(idx[k] >= idx[k + 1] for k in range(len(idx) - 1)):
                raise GeomError(f"index tuple {list(idx)} is not strictly increasing")
            if idx in terms:
                raise GeomError(f"duplicate index tuple {list(idx)}")
            terms[idx] = chart.parse(item["coeff"])
        return cls(chart, degree, terms)

    def evaluate(self, point) -> dict:
        return {I: c.evaluate(point) for I, c in self.terms.items()}

    def pretty(self, symbol: str) -> str:
        if not self.terms:
            return "0"
        parts = []
        for I, c in self.terms.items():
            basis = "^".join(f"{symbol}{self.chart.names[i]}" for i in I)
            s = self.chart.fmt(c)
            parts.append(f"({s})*{basis}" if basis else s)
        return " + ".join(parts)


def _perm_sign(order: Sequence[int]) -> int:
    sign = 1
    seen = list(order)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def _first_slot(terms: Mapping[tuple, Expr], vec: Mapping[int, Expr], degree: int) -> dict:
    """Left contraction of ``vec`` (index -> coefficient) into the first slot."""
    out: dict = {}
    for I, a in terms.items():
        for k, i in enumerate(I):
            v = vec.get(i)
            if v is None or v.is_zero:
                continue
            c = a * v
            _add_term(out, I[:k] + I[k + 1:], c if k % 2 == 0 else -c)
    return out


class Multivector(_Graded):
    """Multivector field of a fixed degree on a chart."""

    __slots__ = ()

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "Multivector":
        return cls(chart, degree, {})

    @classmethod
    def scalar(cls, chart: Chart, f) -> "Multivector":
        return cls(chart, 0, {(): f if isinstance(f, Expr) else chart.parse(f)})

    @classmethod
    def vector(cls, chart: Chart, comps: Sequence) -> "Multivector":
        return cls(chart, 1, {(i,): c for i, c in enumerate(comps)})

    @classmethod
    def from_matrix(cls, chart: Chart, mat: Sequence[Sequence[Expr]]) -> "Multivector":
        """Bivector with ``pi^{ij} = mat[i][j]`` (upper triangle is used)."""
        n = chart.dim
        return cls(chart, 2, {(i, j): mat[i][j] for i in range(n) for j in range(i + 1, n)})

    def matrix(self) -> list:
        if self.degree != 2 and not self.is_zero:
            raise GeomError("matrix form needs a bivector")
        n = self.chart.dim
        z = Expr.zero(n)
        m = [[z] * n for _ in range(n)]
        for (i, j), c in self.terms.items():
            m[i][j] = c
            m[j][i] = -c
        return m

    def components(self) -> list:
        """Component list of a vector field."""
        if self.degree != 1 and not self.is_zero:
            raise GeomError("components need a vector field")
        z = Expr.zero(self.chart.dim)
        return [self.terms.get((i,), z) for i in range(self.chart.dim)]

    def apply(self, f: Expr) -> Expr:
        """Directional derivative X(f)."""
        out = Expr.zero(self.chart.dim)
        for (i,), c in self.terms.items():
            out = out + c * f.diff(i)
        return out

    def contract(self, alpha: "DiffForm") -> "Multivector":
        """``i_alpha`` of a 1-form, first slot."""
        if alpha.degree != 1 and not alpha.is_zero:
            raise GeomError("contraction needs a 1-form")
        if alpha.chart != self.chart:
            raise GeomError("chart mismatch")
        if self.degree == 0:
            return Multivector.zero(self.chart, 0)
        vec = {I[0]: c for I, c in alpha.terms.items()}
        return Multivector(self.chart, self.degree - 1, _first_slot(self.terms, vec, self.degree))

    def __str__(self):
        return self.pretty("d")


class DiffForm(_Graded):
    """Differential form of a fixed degree on a chart."""

    __slots__ = ()

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "DiffForm":
        return cls(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, f) -> "DiffForm":
        return cls(chart, 0, {(): f if isinstance(f, Expr) else chart.parse(f)})

    @classmethod
    def one_form(cls, chart: Chart, comps: Sequence) -> "DiffForm":
        return cls(chart, 1, {(i,): c for i, c in enumerate(comps)})

    @classmethod
    def dx(cls, chart: Chart, i: int) -> "DiffForm":
        return cls(chart, 1, {(i,): Expr.one(chart.dim)})

    def components(self) -> list:
        if self.degree != 1 and not self.is_zero:
            raise GeomError("components need a 1-form")
        z = Expr.zero(self.chart.dim)
        return [self.terms.get((i,), z) for i in range(self.chart.dim)]

    def function_value(self) -> Expr:
        if self.degree != 0 and not self.is_zero:
            raise GeomError("not a 0-form")
        return self.terms.get((), Expr.zero(self.chart.dim))

    def d(self) -> "DiffForm":
        return exterior_derivative(self)

    def interior(self, X: Multivector) -> "DiffForm":
        if X.degree != 1 and not X.is_zero:
            raise GeomError("interior product needs a vector field")
        if X.chart != self.chart:
            raise GeomError("chart mismatch")
        if self.degree == 0:
            return DiffForm.zero(self.chart, 0)
        vec = {I[0]: c for I, c in X.terms.items()}
        return DiffForm(self.chart, self.degree - 1, _first_slot(self.terms, vec, self.degree))

    def lie(self, X: Multivector) -> "DiffForm":
        return self.d().interior(X) + self.interior(X).d()

    def matrix(self) -> list:
        n = self.chart.dim
        z = Expr.zero(n)
        m = [[z] * n for _ in range(n)]
        for (i, j), c in self.terms.items():
            m[i][j] = c
            m[j][i] = -c
        return m

    def __str__(self):
        return self.pretty("d")


def exterior_derivative(alpha: DiffForm) -> DiffForm:
    terms: dict = {}
    for I, a in alpha.terms.items():
        for k in range(alpha.chart.dim):
            if k in I:
                continue
            da = a.diff(k)
            if da.is_zero:
                continue
            sign, K = merge_indices((k,), I)
            _add_term(terms, K, da if sign > 0 else -da)
    return DiffForm(alpha.chart, alpha.degree + 1, terms)


def _right_derivative(terms: Mapping[tuple, Expr], i: int, degree: int) -> dict:
    """Right derivative by the odd variable xi_i of a superfunction."""
    out: dict = {}
    for I, a in terms.items():
        if i in I:
            k = I.index(i)
            sign = -1 if (degree - 1 - k) % 2 else 1
            _add_term(out, I[:k] + I[k + 1:], a if sign > 0 else -a)
    return out


def _half(A: Multivector, B: Multivector) -> dict:
    terms: dict = {}
    for i in range(A.chart.dim):
        dA = _right_derivative(A.terms, i, A.degree)
        if not dA:
            continue
        dB = {J: b.diff(i) for J, b in B.terms.items()}
        for I, a in dA.items():
            for J, b in dB.items():
                if b.is_zero:
                    continue
                sign, K = merge_indices(I, J)
                if sign:
                    c = a * b
                    _add_term(terms, K, c if sign > 0 else -c)
    return terms


def schouten(A: Multivector, B: Multivector) -> Multivector:
    """Schouten-Nijenhuis bracket ``[A, B]`` of degree ``p + q - 1``."""
    if A.chart != B.chart:
        raise GeomError("chart mismatch")
    p, q = A.degree, B.degree
    if p + q == 0:
        return Multivector.zero(A.chart, 0)
    terms = _half(A, B)
    sign = -1 if ((p - 1) * (q - 1)) % 2 else 1
    for K, c in _half(B, A).items():
        _add_term(terms, K, -c if sign > 0 else c)
    return Multivector(A.chart, p + q - 1, terms)


def lie_bracket(X: Multivector, Y: Multivector) -> Multivector:
    return schouten(X, Y)


def sharp(pi: Multivector, alpha: DiffForm) -> Multivector:
    return pi.contract(alpha)


def pair(pi: Multivector, alpha: DiffForm, beta: DiffForm) -> Expr:
    """``pi(alpha, beta) = i_beta i_alpha pi``."""
    v = pi.contract(alpha).contract(beta)
    return v.terms.get((), Expr.zero(pi.chart.dim))


def form_on(omega: DiffForm, X: Multivector, Y: Multivector) -> Expr:
    """``omega(X, Y) = i_Y i_X omega``."""
    return omega.interior(X).interior(Y).function_value()


def cotangent_bracket(alpha: DiffForm, beta: DiffForm, pi: Multivector) -> DiffForm:
    """Bracket of 1-forms induced by a bivector (Jacobi is not assumed)."""
    if not (alpha.chart == beta.chart == pi.chart):
        raise GeomError("chart mismatch")
    a = sharp(pi, alpha)
    b = sharp(pi, beta)
    f = DiffForm.function(pi.chart, pair(pi, alpha, beta))
    return beta.lie(a) - alpha.lie(b) - f.d()


def lichnerowicz(pi: Multivector, A: Multivector) -> Multivector:
    """``d_pi A = [pi, A]``."""
    return schouten(pi, A)


class SmoothMap:
    """Map between charts given by one expression per target coordinate."""

    __slots__ = ("source", "target", "comps")

    def __init__(self, source: Chart, target: Chart, comps: Sequence):
        if len(comps) != target.dim:
            raise GeomError("need one component per target coordinate")
        self.source = source
        self.target = target
        self.comps = tuple(c if isinstance(c, Expr) else source.parse(c) for c in comps)
        for c in self.comps:
            if c.nvars != source.dim:
                raise GeomError("component expression lives on another chart")

    @classmethod
    def identity(cls, chart: Chart) -> "SmoothMap":
        return cls(chart, chart, [Expr.var(i, chart.dim) for i in range(chart.dim)])

    def pull_function(self, f: Expr) -> Expr:
        return f.compose(list(self.comps), self.source.dim)

    def then(self, other: "SmoothMap") -> "SmoothMap":
        """``other o self``."""
        if other.source != self.target:
            raise GeomError("maps are not composable")
        return SmoothMap(self.source, other.target, [self.pull_function(c) for c in other.comps])

    def differential(self) -> list:
        return [DiffForm(self.source, 1, {(i,): c.diff(i) for i in range(self.source.dim)}) for c in self.comps]

    def evaluate(self, point) -> list:
        return [c.evaluate(point) for c in self.comps]


def pullback(phi: SmoothMap, alpha: DiffForm) -> DiffForm:
    if alpha.chart != phi.target:
        raise GeomError("form does not live on the target chart")
    dfs = phi.differential()
    out = DiffForm.zero(phi.source, alpha.degree)
    for I, a in alpha.terms.items():
        piece = DiffForm.function(phi.source, phi.pull_function(a))
        for i in I:
            piece = piece.wedge(dfs[i])
        out = out + piece if not out.is_zero else piece
    return out if not out.is_zero else DiffForm.zero(phi.source, alpha.degree)

