"""Fiberwise-scaling homotopy operator on polynomial forms of a vector-bundle chart.

For the Euler field ``Y = sum z_a d/dz_a`` and the scalings ``m_s(x, z) = (x, s z)``,

    H(alpha) = int_0^1 s^{-1} m_s^*(i_Y alpha) ds.

A monomial ``x^p z^q dx_I ^ dz_J`` in ``i_Y alpha`` scales as ``s^{|q| + |J|}``,
so the integral contributes ``1 / (|q| + |J|)`` termwise.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import Chart, Expr, poly_ring
from .geom import DiffForm, Multivector, exterior_derivative


class HomotopyError(ValueError):
    pass


def _fiber(chart: Chart) -> tuple:
    if not chart.fiber:
        raise HomotopyError("the chart needs at least one fiber coordinate")
    return chart.fiber


def euler_field(chart: Chart) -> Multivector:
    return Multivector(chart, 1, {(a,): Expr.var(a, chart.dim) for a in _fiber(chart)})


def zero_section_projection(alpha: DiffForm) -> DiffForm:
    """``(i o P)^* alpha``: drop fiber differentials, then set the fiber to zero."""
    fib = set(_fiber(alpha.chart))
    terms = {I: c.subs_zero(fib) for I, c in alpha.terms.items() if not fib & set(I)}
    return DiffForm(alpha.chart, alpha.degree, terms)


def homotopy_operator(alpha: DiffForm) -> DiffForm:
    chart = alpha.chart
    fib = set(_fiber(chart))
    if alpha.degree == 0:
        return DiffForm.zero(chart, 0)
    for c in alpha.terms.values():
        if not c.is_polynomial:
            raise HomotopyError("the homotopy operator is implemented for polynomial forms")
    contracted = alpha.interior(euler_field(chart))
    R = poly_ring(chart.dim)
    terms: dict = {}
    for I, c in contracted.terms.items():
        j = len(fib & set(I))
        scaled = {}
        for monom, coeff in c.poly.items():
            w = j + sum(monom[a] for a in fib)
            # w >= 1: every term of i_Y alpha carries a fiber coordinate
            scaled[monom] = coeff / w
        terms[I] = Expr.from_poly(R.from_dict(scaled))
    return DiffForm(chart, alpha.degree - 1, terms)


def homotopy_primitive(alpha: DiffForm) -> DiffForm:
    """Primitive of a closed polynomial form whose zero-section restriction vanishes."""
    if alpha.degree < 1:
        raise HomotopyError("need a form of degree at least one")
    for c in alpha.terms.values():
        if not c.is_polynomial:
            raise HomotopyError("form is not polynomial")
    if not exterior_derivative(alpha).is_zero:
        raise HomotopyError("form is not closed")
    if not zero_section_projection(alpha).is_zero:
        raise HomotopyError("form does not vanish on the zero section")
    return homotopy_operator(alpha)
