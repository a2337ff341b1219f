"""Exact scalar expressions over the rationals.

An expression is kept in the normal form N/D where D is a monic polynomial
and N is a finite sum of polynomials times monomials in opaque atoms
(exp, sin, cos of a sub-expression, or a grouped non-rational divisor).
Every arithmetic operation returns a normalized value, so structural
equality is the same as equality of normal forms.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, ring

FUNCTIONS = ("exp", "sin", "cos")
GUARD_RADIUS = 1e-6
GUARD_TERMS = 6


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    pass


class PoleError(ZeroDivisionError):
    """Raised when a quotient is evaluated on the zero set of its denominator."""


@lru_cache(maxsize=None)
def poly_ring(n: int):
    return ring([f"x{i}" for i in range(n)], QQ, grlex)[0]


def _to_qq(c) -> object:
    if isinstance(c, Fraction):
        return QQ(c.numerator, c.denominator)
    if isinstance(c, int):
        return QQ(c)
    if isinstance(c, float):
        raise ExprError("floating-point coefficients are not accepted in exact expressions")
    return QQ.convert(c)


def _fmt_qq(c) -> str:
    n, d = int(c.numerator), int(c.denominator)
    return str(n) if d == 1 else f"{n}/{d}"


# ---------------------------------------------------------------- dual numbers


class Dual:
    """Forward-mode dual number a + b*eps with eps^2 = 0."""

    __slots__ = ("val", "der")

    def __init__(self, val: float, der: float = 0.0):
        self.val = float(val)
        self.der = float(der)

    def __repr__(self) -> str:
        return f"Dual({self.val!r}, {self.der!r})"

    @staticmethod
    def _lift(o) -> "Dual":
        return o if isinstance(o, Dual) else Dual(o, 0.0)

    def __add__(self, o):
        o = Dual._lift(o)
        return Dual(self.val + o.val, self.der + o.der)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __sub__(self, o):
        o = Dual._lift(o)
        return Dual(self.val - o.val, self.der - o.der)

    def __rsub__(self, o):
        return Dual._lift(o) - self

    def __mul__(self, o):
        o = Dual._lift(o)
        return Dual(self.val * o.val, self.der * o.val + self.val * o.der)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = Dual._lift(o)
        if o.val == 0.0:
            raise PoleError("division by zero in dual evaluation")
        q = self.val / o.val
        return Dual(q, (self.der - q * o.der) / o.val)

    def __rtruediv__(self, o):
        return Dual._lift(o) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers of dual numbers are supported")
        if k == 0:
            return Dual(1.0, 0.0)
        if k < 0:
            return Dual(1.0) / (self ** (-k))
        return Dual(self.val ** k, k * self.val ** (k - 1) * self.der)

    def __abs__(self):
        return abs(self.val)


def _fexp(v):
    if isinstance(v, Dual):
        e = math.exp(v.val)
        return Dual(e, e * v.der)
    return math.exp(v)


def _fsin(v):
    if isinstance(v, Dual):
        return Dual(math.sin(v.val), math.cos(v.val) * v.der)
    return math.sin(v)


def _fcos(v):
    if isinstance(v, Dual):
        return Dual(math.cos(v.val), -math.sin(v.val) * v.der)
    return math.cos(v)


_NUMERIC = {"exp": _fexp, "sin": _fsin, "cos": _fcos}


def _value(v) -> float:
    return v.val if isinstance(v, Dual) else v


# ---------------------------------------------------------------- atoms


@dataclass(frozen=True)
class Atom:
    """Opaque factor: ``exp``/``sin``/``cos`` of an argument, or ``grp`` (a
    non-rational divisor kept as a unit)."""

    kind: str
    arg: "Expr"
    key: str = field(compare=False, hash=False, default="")

    def __post_init__(self):
        object.__setattr__(self, "key", f"{self.kind}({self.arg.key})")

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Atom) and self.key == other.key

    def derivative_ratio(self, k: int) -> "Expr":
        """d(atom)/d(x_k) divided by the atom itself."""
        da = self.arg.diff(k)
        if da.is_zero:
            return da
        if self.kind == "exp":
            return da
        if self.kind == "sin":
            return da * Expr._atom(Atom("cos", self.arg)) * Expr._atom(self, -1)
        if self.kind == "cos":
            return -da * Expr._atom(Atom("sin", self.arg)) * Expr._atom(self, -1)
        return da * Expr._atom(self, -1)

    def evaluate(self, point):
        v = self.arg.evaluate(point)
        if self.kind == "grp":
            return v
        return _NUMERIC[self.kind](v)


AtomMono = tuple  # tuple[(Atom, int), ...] sorted by atom key


def _mono_mul(a: AtomMono, b: AtomMono) -> AtomMono:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for at, e in b:
        acc[at] = acc.get(at, 0) + e
    return tuple(sorted(((at, e) for at, e in acc.items() if e), key=lambda t: t[0].key))


def _mono_key(m: AtomMono) -> str:
    return "*".join(f"{at.key}^{e}" for at, e in m)


# ---------------------------------------------------------------- polynomial helpers


def _poly_subst(p: PolyElement, subs: Sequence[PolyElement], R) -> PolyElement:
    out = R.zero
    powers: dict = {}
    for monom, c in p.terms():
        t = R(c)
        for i, e in enumerate(monom):
            if e:
                key = (i, e)
                if key not in powers:
                    powers[key] = subs[i] ** e
                t = t * powers[key]
                if not t:
                    break
        out += t
    return out


def _poly_eval(p: PolyElement, point):
    total = 0.0
    for monom, c in p.terms():
        t = float(c)
        for i, e in enumerate(monom):
            if e:
                t = t * point[i] ** e
        total = total + t
    return total


def _poly_str(p: PolyElement, names: Sequence[str]) -> str:
    if not p:
        return "0"
    parts = []
    for monom, c in p.terms():  # grlex descending
        factors = []
        for i, e in enumerate(monom):
            if e == 1:
                factors.append(names[i])
            elif e:
                factors.append(f"{names[i]}^{e}")
        mono = "*".join(factors)
        neg = c < 0
        a = -c if neg else c
        if not mono:
            body = _fmt_qq(a)
        elif a == 1:
            body = mono
        else:
            body = f"{_fmt_qq(a)}*{mono}"
        parts.append(("-" if neg else "+", body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


# ---------------------------------------------------------------- expressions

Scalar = Union["Expr", int, Fraction]


class Expr:
    """Normalized exact expression in ``nvars`` variables."""

    __slots__ = ("nvars", "num", "den", "_key", "_guard", "_hash")

    def __init__(self, nvars: int, num: dict, den: PolyElement):
        # trusted constructor, callers pass normalized data
        self.nvars = nvars
        self.num = num
        self.den = den
        self._key = None
        self._guard = None
        self._hash = None

    # construction ----------------------------------------------------------
    @staticmethod
    def ring(n: int):
        return poly_ring(n)

    @classmethod
    def _build(cls, nvars: int, num: dict, den: PolyElement) -> "Expr":
        R = poly_ring(nvars)
        num = {m: p for m, p in num.items() if p}
        if not num:
            return cls(nvars, {}, R.one)
        if den.is_ground:
            c = den.LC
            if c != 1:
                num = {m: p.quo_ground(c) for m, p in num.items()}
            return cls(nvars, num, R.one)
        g = den
        for p in num.values():
            g = g.gcd(p)
            if g.is_ground:
                break
        if not g.is_ground:
            den = den.exquo(g)
            num = {m: p.exquo(g) for m, p in num.items()}
        c = den.LC
        if c != 1:
            den = den.quo_ground(c)
            num = {m: p.quo_ground(c) for m, p in num.items()}
        return cls(nvars, num, den)

    @classmethod
    def const(cls, c, nvars: int) -> "Expr":
        R = poly_ring(nvars)
        return cls._build(nvars, {(): R(_to_qq(c))}, R.one)

    @classmethod
    def zero(cls, nvars: int) -> "Expr":
        return cls(nvars, {}, poly_ring(nvars).one)

    @classmethod
    def one(cls, nvars: int) -> "Expr":
        return cls.const(1, nvars)

    @classmethod
    def var(cls, i: int, nvars: int) -> "Expr":
        if not 0 <= i < nvars:
            raise ExprError(f"variable index {i} outside chart of dimension {nvars}")
        R = poly_ring(nvars)
        return cls(nvars, {(): R.gens[i]}, R.one)

    @classmethod
    def from_poly(cls, p: PolyElement, den: PolyElement | None = None) -> "Expr":
        n = p.ring.ngens
        R = poly_ring(n)
        if den is None:
            return cls._build(n, {(): p}, R.one)
        if not den:
            raise ExprError("division by the zero polynomial")
        return cls._build(n, {(): p}, den)

    @classmethod
    def _atom(cls, atom: Atom, power: int = 1) -> "Expr":
        n = atom.arg.nvars
        R = poly_ring(n)
        return cls(n, {((atom, power),): R.one}, R.one)

    @classmethod
    def func(cls, name: str, arg: "Expr") -> "Expr":
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        if arg.is_zero:
            return cls.zero(arg.nvars) if name == "sin" else cls.one(arg.nvars)
        return cls._atom(Atom(name, arg))

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.nvars != self.nvars:
                raise ExprError(f"chart mismatch: {self.nvars} vs {other.nvars} variables")
            return other
        return Expr.const(other, self.nvars)

    # predicates ------------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_rational(self) -> bool:
        return all(not m for m in self.num)

    @property
    def is_polynomial(self) -> bool:
        return self.is_rational and self.den.is_ground

    @property
    def is_constant(self) -> bool:
        return self.is_polynomial and (not self.num or self.num[()].is_ground)

    @property
    def numer(self) -> PolyElement:
        """Polynomial numerator; only meaningful for rational expressions."""
        if not self.is_rational:
            raise ExprError("expression has transcendental factors")
        return self.num.get((), poly_ring(self.nvars).zero)

    @property
    def poly(self) -> PolyElement:
        if not self.is_polynomial:
            raise ExprError("expression is not a polynomial")
        return self.numer

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ExprError("expression is not constant")
        if not self.num:
            return Fraction(0)
        c = self.num[()].LC
        return Fraction(int(c.numerator), int(c.denominator))

    def free_vars(self) -> set:
        out = set()
        for m, p in self.num.items():
            for monom in p.monoms():
                out.update(i for i, e in enumerate(monom) if e)
            for at, _ in m:
                out |= at.arg.free_vars()
        for monom in self.den.monoms():
            out.update(i for i, e in enumerate(monom) if e)
        return out

    # identity --------------------------------------------------------------
    @property
    def key(self) -> str:
        if self._key is None:
            self._key = self.to_str([f"x{i}" for i in range(self.nvars)])
        return self._key

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_constant and self.constant_value() == other
        if not isinstance(other, Expr) or other.nvars != self.nvars:
            return NotImplemented if not isinstance(other, Expr) else False
        if self.den != other.den or len(self.num) != len(other.num):
            return False
        return all(other.num.get(m) == p for m, p in self.num.items())

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, self.key))
        return self._hash

    def __repr__(self) -> str:
        return f"Expr({self.key!r})"

    def __bool__(self) -> bool:
        return bool(self.num)

    # arithmetic ------------------------------------------------------------
    def __add__(self, other) -> "Expr":
        other = self._coerce(other)
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            num = dict(self.num)
            for m, p in other.num.items():
                num[m] = num[m] + p if m in num else p
            if self.den.is_ground:
                num = {m: p for m, p in num.items() if p}
                return Expr(self.nvars, num, self.den)
            return Expr._build(self.nvars, num, self.den)
        g = self.den.gcd(other.den)
        fa = other.den.exquo(g)
        fb = self.den.exquo(g)
        num = {m: p * fa for m, p in self.num.items()}
        for m, p in other.num.items():
            q = p * fb
            num[m] = num[m] + q if m in num else q
        return Expr._build(self.nvars, num, self.den * fa)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(self.nvars, {m: -p for m, p in self.num.items()}, self.den)

    def __sub__(self, other) -> "Expr":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Expr":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Expr":
        other = self._coerce(other)
        if not self.num or not other.num:
            return Expr.zero(self.nvars)
        num: dict = {}
        for ma, pa in self.num.items():
            for mb, pb in other.num.items():
                m = _mono_mul(ma, mb)
                q = pa * pb
                num[m] = num[m] + q if m in num else q
        den = self.den * other.den
        if den.is_ground:
            return Expr(self.nvars, {m: p for m, p in num.items() if p}, den)
        return Expr._build(self.nvars, num, den)

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if not self.num:
            raise ExprError("division by the zero polynomial")
        R = poly_ring(self.nvars)
        if len(self.num) == 1:
            (m, p), = self.num.items()
            inv_m = tuple((at, -e) for at, e in m)
            return Expr._build(self.nvars, {inv_m: self.den}, p)
        # non-rational sum in the denominator: keep it as an opaque unit
        body = Expr(self.nvars, self.num, R.one)
        return Expr._build(self.nvars, {((Atom("grp", body), -1),): self.den}, R.one)

    def __truediv__(self, other) -> "Expr":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "Expr":
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "Expr":
        if not isinstance(k, int):
            raise ExprError("only integer powers are supported")
        if k < 0:
            return self.inverse() ** (-k)
        out = Expr.one(self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus --------------------------------------------------------------
    def diff(self, k: int) -> "Expr":
        if not 0 <= k < self.nvars:
            raise ExprError(f"variable index {k} outside chart of dimension {self.nvars}")
        R = poly_ring(self.nvars)
        x = R.gens[k]
        plain = {m: p.diff(x) for m, p in self.num.items()}
        top = Expr._build(self.nvars, plain, R.one)
        for m, p in self.num.items():
            for at, e in m:
                ratio = at.derivative_ratio(k)
                if ratio.is_zero:
                    continue
                top = top + Expr(self.nvars, {m: p * e}, R.one) * ratio
        if self.den.is_ground:
            return top
        dd = self.den.diff(x)
        body = Expr(self.nvars, self.num, R.one)
        out = top / Expr.from_poly(self.den)
        if dd:
            out = out - body * Expr.from_poly(dd) / Expr.from_poly(self.den ** 2)
        return out

    def compose(self, subs: Sequence["Expr"], nvars: int | None = None) -> "Expr":
        """Substitute ``subs[i]`` for variable ``i``; the result lives in ``nvars`` variables."""
        if len(subs) != self.nvars:
            raise ExprError("substitution list length must equal the number of variables")
        if nvars is None:
            nvars = subs[0].nvars if subs else 0
        R = poly_ring(nvars)
        if all(s.is_polynomial and s.nvars == nvars for s in subs):
            polys = [s.numer for s in subs]
            den = _poly_subst(self.den, polys, R)
            if not den:
                raise PoleError("substitution lands on the zero set of a denominator")
            if self.is_rational:
                return Expr._build(nvars, {(): _poly_subst(self.numer, polys, R)}, den)
            out = Expr.zero(nvars)
            for m, p in self.num.items():
                term = Expr.from_poly(_poly_subst(p, polys, R))
                for at, e in m:
                    term = term * _compose_atom(at, subs, nvars) ** e
                out = out + term
            return out / Expr.from_poly(den)
        out = Expr.zero(nvars)
        for m, p in self.num.items():
            term = _expr_poly_subst(p, subs, nvars)
            for at, e in m:
                term = term * _compose_atom(at, subs, nvars) ** e
            out = out + term
        return out / _expr_poly_subst(self.den, subs, nvars)

    def remap(self, mapping: Sequence[int], nvars: int) -> "Expr":
        """Rename variable ``i`` to ``mapping[i]`` in a chart of ``nvars`` variables."""
        return self.compose([Expr.var(j, nvars) for j in mapping], nvars)

    def subs_zero(self, indices: Iterable[int]) -> "Expr":
        zero = set(indices)
        subs = [Expr.zero(self.nvars) if i in zero else Expr.var(i, self.nvars) for i in range(self.nvars)]
        return self.compose(subs, self.nvars)

    # numerics --------------------------------------------------------------
    def _guard_data(self):
        if self._guard is None:
            self._guard = False
            if len(self.den) == 1:
                (monom, _), = self.den.terms()
                if sum(monom) == 1:
                    k = monom.index(1)
                    body = Expr(self.nvars, self.num, poly_ring(self.nvars).one)
                    if body.subs_zero([k]).is_zero:
                        terms = []
                        d = body
                        fact = 1
                        for j in range(1, GUARD_TERMS + 1):
                            d = d.diff(k)
                            fact *= j
                            terms.append(d.subs_zero([k]) * Fraction(1, fact))
                        self._guard = (k, terms)
        return self._guard

    def evaluate(self, point: Sequence):
        """Evaluate at ``point`` (floats or :class:`Dual` values)."""
        if len(point) != self.nvars:
            raise ExprError("point dimension does not match the chart")
        if not self.den.is_ground:
            guard = self._guard_data()
            if guard:
                k, terms = guard
                xk = point[k]
                if abs(_value(xk)) < GUARD_RADIUS:
                    total = 0.0
                    for j, t in enumerate(terms):
                        total = total + t.evaluate(point) * xk ** j
                    return total
        top = 0.0
        for m, p in self.num.items():
            t = _poly_eval(p, point)
            for at, e in m:
                t = t * at.evaluate(point) ** e if e > 0 else t / at.evaluate(point) ** (-e)
            top = top + t
        if self.den.is_ground:
            return top
        d = _poly_eval(self.den, point)
        if _value(d) == 0.0:
            raise PoleError("denominator vanishes at the sample point")
        return top / d

    # printing --------------------------------------------------------------
    def to_str(self, names: Sequence[str]) -> str:
        if not self.num:
            return "0"
        pieces = []
        for m in sorted(self.num, key=_mono_key):
            p = self.num[m]
            ps = _poly_str(p, names)
            if not m:
                pieces.append(ps)
                continue
            atoms = "*".join(_atom_str(at, e, names) for at, e in m)
            if ps == "1":
                pieces.append(atoms)
            elif ps == "-1":
                pieces.append("-" + atoms)
            elif len(p) == 1:
                pieces.append(f"{ps}*{atoms}")
            else:
                pieces.append(f"({ps})*{atoms}")
        top = pieces[0]
        for piece in pieces[1:]:
            top += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
        if self.den.is_ground:
            return top
        return f"({top})/({_poly_str(self.den, names)})"


def _atom_str(at: Atom, e: int, names) -> str:
    inner = at.arg.to_str(names)
    s = f"({inner})" if at.kind == "grp" else f"{at.kind}({inner})"
    if e == 1:
        return s
    return f"{s}^{e}" if e > 0 else f"{s}^({e})"


def _compose_atom(at: Atom, subs, nvars: int) -> Expr:
    arg = at.arg.compose(subs, nvars)
    if at.kind == "grp":
        return arg
    return Expr.func(at.kind, arg)


def _expr_poly_subst(p: PolyElement, subs: Sequence[Expr], nvars: int) -> Expr:
    out = Expr.zero(nvars)
    for monom, c in p.terms():
        t = Expr.const(Fraction(int(c.numerator), int(c.denominator)), nvars)
        for i, e in enumerate(monom):
            if e:
                t = t * subs[i] ** e
        out = out + t
    return out


def normalize(e: Expr) -> Expr:
    """Return the canonical form of ``e``.  Values are kept normalized on
    construction, so this re-derives the form from the parts."""
    return Expr._build(e.nvars, dict(e.num), e.den)


def differentiate(e: Expr, var: int) -> Expr:
    return e.diff(var)


def eval_dual(e: Expr, point: Sequence[float], tangent: Sequence[float]) -> tuple[float, float]:
    """Value and directional derivative of ``e`` at ``point`` along ``tangent``."""
    out = e.evaluate([Dual(p, t) for p, t in zip(point, tangent)])
    if isinstance(out, Dual):
        return out.val, out.der
    return float(out), 0.0


# ---------------------------------------------------------------- charts and parsing

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names, optionally split into base and fiber indices."""

    names: tuple
    fiber: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "fiber", tuple(sorted(self.fiber)))
        if len(set(self.names)) != len(self.names):
            raise ExprError(f"duplicate coordinate names in {self.names}")
        for n in self.names:
            if not _IDENT.match(n) or n in FUNCTIONS:
                raise ExprError(f"invalid coordinate name {n!r}")
        if any(not 0 <= i < len(self.names) for i in self.fiber):
            raise ExprError("fiber indices out of range")

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def base(self) -> tuple:
        return tuple(i for i in range(self.dim) if i not in self.fiber)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ExprError(f"unknown coordinate {name!r}") from None

    def var(self, name: str) -> Expr:
        return Expr.var(self.index(name), self.dim)

    def const(self, c) -> Expr:
        return Expr.const(c, self.dim)

    def parse(self, text) -> Expr:
        if isinstance(text, Expr):
            if text.nvars != self.dim:
                raise ExprError("expression belongs to another chart")
            return text
        if isinstance(text, (int, Fraction)):
            return self.const(text)
        if not isinstance(text, str):
            raise ParseError(f"expected an expression string, got {type(text).__name__}")
        return _Parser(text, self).parse()

    def fmt(self, e: Expr) -> str:
        return e.to_str(self.names)

    def eval_dual(self, e: Expr, point: Mapping[str, float], tangent: Mapping[str, float]):
        p = [float(point[n]) for n in self.names]
        t = [float(tangent.get(n, 0.0)) for n in self.names]
        return eval_dual(e, p, t)


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


class _Parser:
    def __init__(self, text: str, chart: Chart):
        self.chart = chart
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                break
            pos = m.end()
            if m.group(1):
                self.toks.append(("int", int(m.group(1))))
            elif m.group(2):
                self.toks.append(("id", m.group(2)))
            else:
                ch = m.group(3)
                if ch not in "+-*/^()":
                    raise ParseError(f"unexpected character {ch!r} in {text!r}")
                self.toks.append(("op", ch))
        self.i = 0
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, op=None):
        tok = self.peek()
        if tok[0] is None:
            raise ParseError(f"unexpected end of input in {self.text!r}")
        if op is not None and tok != ("op", op):
            raise ParseError(f"expected {op!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> Expr:
        if not self.toks:
            raise ParseError("empty expression")
        e = self.sum()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input in {self.text!r}")
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero:
                    raise ExprError("division by the zero polynomial")
                e = e / rhs
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok == ("op", "-"):
            self.take()
            return -self.unary()
        if tok == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek() == ("op", "^"):
            self.take()
            k = self.exponent()
            if k < 0 and base.is_zero:
                raise ExprError("division by the zero polynomial")
            return base ** k
        return base

    def exponent(self) -> int:
        tok = self.peek()
        if tok == ("op", "("):
            self.take()
            k = self.exponent()
            self.take(")")
            return k
        sign = 1
        if tok == ("op", "-"):
            self.take()
            sign = -1
        kind, val = self.take()
        if kind != "int":
            raise ParseError(f"exponents must be integer literals in {self.text!r}")
        return sign * val

    def primary(self) -> Expr:
        kind, val = self.take()
        n = self.chart.dim
        if kind == "int":
            return Expr.const(val, n)
        if kind == "id":
            if val in FUNCTIONS:
                self.take("(")
                arg = self.sum()
                self.take(")")
                return Expr.func(val, arg)
            if self.peek() == ("op", "("):
                raise ParseError(f"unknown function {val!r}")
            if val not in self.chart.names:
                raise ParseError(f"unknown coordinate {val!r}")
            return Expr.var(self.chart.names.index(val), n)
        if val == "(":
            e = self.sum()
            self.take(")")
            return e
        raise ParseError(f"unexpected {val!r} in {self.text!r}")
