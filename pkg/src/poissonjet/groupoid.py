"""Numeric verification of explicit Lie-groupoid charts.

A chart document declares arrow and base coordinates, the structure maps as
expression lists, and a ``composable_parameterization``: ``source_fiber``
gives, for a base point ``b`` and free parameters ``f``, an arrow with source
``b``; ``unit_params`` are the parameters of the unit arrow.  Composable pairs
``(g, h)`` are then sampled as ``h`` free and ``g = source_fiber(t(h), f)``.

The Lie algebroid is ``A = ker ds`` along the units, and sections act through
right-invariant vector fields ``a^R(g) = d/df m(source_fiber(t(g), f), g)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Chart, Dual, Expr, PoleError
from .geom import DiffForm, Multivector, SmoothMap, exterior_derivative, schouten
from .verdict import Check, Verdict

AXIOM_TOL = 1e-10
RANK_RTOL = 1e-8
KERNEL_TOL = 1e-8
BATCH = 16


class GroupoidError(ValueError):
    pass


def _suffix(names, tag):
    return tuple(f"{n}_{tag}" for n in names)


@dataclass
class GroupoidChart:
    arrow: Chart
    base: Chart
    source: SmoothMap
    target: SmoothMap
    unit: SmoothMap
    inverse: SmoothMap
    mult: SmoothMap  # on the chart (arrow_1, arrow_2)
    param_chart: Chart  # (base, fiber params)
    source_fiber: SmoothMap
    unit_params: tuple  # expressions on the base chart
    box: tuple = (-1.5, 1.5)
    doc: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_json(cls, doc: dict) -> "GroupoidChart":
        try:
            arrow = Chart(tuple(doc["arrow_vars"]))
            base = Chart(tuple(doc["base_vars"]))
            pair_chart = Chart(_suffix(arrow.names, 1) + _suffix(arrow.names, 2))
            cp = doc["composable_parameterization"]
            params = tuple(cp["fiber_params"])
            param_chart = Chart(base.names + params)
            g = cls(
                arrow, base,
                SmoothMap(arrow, base, doc["source"]),
                SmoothMap(arrow, base, doc["target"]),
                SmoothMap(base, arrow, doc["unit"]),
                SmoothMap(arrow, arrow, doc["inverse"]),
                SmoothMap(pair_chart, arrow, doc["multiplication"]),
                param_chart,
                SmoothMap(param_chart, arrow, cp["source_fiber"]),
                tuple(base.parse(str(x)) for x in cp.get("unit_params", [0] * len(params))),
                tuple(float(x) for x in cp.get("box", (-1.5, 1.5))),
                doc,
            )
        except KeyError as exc:
            raise GroupoidError(f"groupoid document is missing {exc}") from None
        if len(g.unit_params) != len(params):
            raise GroupoidError("unit_params must match fiber_params")
        return g

    @property
    def n_arrow(self) -> int:
        return self.arrow.dim

    @property
    def n_base(self) -> int:
        return self.base.dim

    @property
    def n_params(self) -> int:
        return self.param_chart.dim - self.base.dim

    # numeric structure maps --------------------------------------------------
    def m(self, g, h):
        return self.mult.evaluate(list(g) + list(h))

    def s(self, g):
        return self.source.evaluate(list(g))

    def t(self, g):
        return self.target.evaluate(list(g))

    def u(self, b):
        return self.unit.evaluate(list(b))

    def inv(self, g):
        return self.inverse.evaluate(list(g))

    def fiber_arrow(self, b, f):
        return self.source_fiber.evaluate(list(b) + list(f))

    def sample_arrow(self, rng):
        b = rng.uniform(*self.box, size=self.n_base)
        f = rng.uniform(*self.box, size=self.n_params)
        return self.fiber_arrow(list(map(float, b)), list(map(float, f)))


def jvp(exprs: Sequence[Expr], point, tangent):
    vals = [e.evaluate([Dual(p, t) for p, t in zip(point, tangent)]) for e in exprs]
    return [v.val if isinstance(v, Dual) else float(v) for v in vals], \
           [v.der if isinstance(v, Dual) else 0.0 for v in vals]


def jacobian(exprs: Sequence[Expr], point) -> np.ndarray:
    n = len(point)
    J = np.zeros((len(exprs), n))
    for k in range(n):
        e = [0.0] * n
        e[k] = 1.0
        J[:, k] = jvp(exprs, point, e)[1]
    return J


def form_matrix(omega: DiffForm, point) -> np.ndarray:
    n = omega.chart.dim
    M = np.zeros((n, n))
    for (i, j), c in omega.terms.items():
        v = float(c.evaluate(list(point)))
        M[i, j] = v
        M[j, i] = -v
    return M


def _rngs(seed: int, count: int):
    """One generator per batch, derived from (seed, batch index)."""
    for b in range((count + BATCH - 1) // BATCH):
        yield min(BATCH, count - b * BATCH), np.random.default_rng([seed, b])


class _Composable:
    """Maps on the parameter space (h, f) of composable pairs."""

    def __init__(self, G: GroupoidChart):
        hn = _suffix(G.arrow.names, "h")
        fn = tuple(f"{p}_f" for p in G.param_chart.names[G.n_base:])
        self.chart = Chart(hn + fn)
        nq = self.chart.dim
        h = [Expr.var(i, nq) for i in range(G.n_arrow)]
        f = [Expr.var(G.n_arrow + i, nq) for i in range(G.n_params)]
        th = [c.compose(h, nq) for c in G.target.comps]
        g = [c.compose(th + f, nq) for c in G.source_fiber.comps]
        m = [c.compose(g + h, nq) for c in G.mult.comps]
        self.g, self.h, self.m = g, h, m


def check_multiplicative(G: GroupoidChart, omega: DiffForm, samples: int = 128, seed: int = 0,
                         tol: float = 1e-9) -> Verdict:
    if omega.chart != G.arrow or omega.degree != 2:
        raise GroupoidError("omega must be a 2-form on the arrow chart")
    Q = _Composable(G)
    worst = 0.0
    done = 0
    for count, rng in _rngs(seed, samples):
        got, budget = 0, 10 * count
        while got < count:
            if budget == 0:
                raise PoleError("sampling kept hitting poles")
            budget -= 1
            q = list(map(float, np.concatenate([rng.uniform(*G.box, size=G.n_arrow),
                                                rng.uniform(*G.box, size=G.n_params)])))
            a = list(map(float, rng.normal(size=len(q))))
            b = list(map(float, rng.normal(size=len(q))))
            try:
                vals = []
                for F in (Q.m, Q.g, Q.h):
                    p, va = jvp(F, q, a)
                    _, vb = jvp(F, q, b)
                    W = form_matrix(omega, p)
                    vals.append(float(np.asarray(va) @ W @ np.asarray(vb)))
            except PoleError:
                continue
            res = vals[0] - vals[1] - vals[2]
            scale = abs(vals[0]) + abs(vals[1]) + abs(vals[2])
            rel = abs(res) / scale if scale > 0 else abs(res)
            worst = max(worst, rel)
            got += 1
            done += 1
    ok = worst < tol
    detail = {"samples": done, "max_residual": worst, "seed": seed, "tol": tol}
    return Verdict([Check("multiplicative", ok, "numeric", [] if ok else [f"max relative residual {worst:.3e}"],
                          detail)])


def check_axioms(G: GroupoidChart, samples: int = 32, seed: int = 0, tol: float = AXIOM_TOL) -> Verdict:
    worst = {k: 0.0 for k in ("unit", "source_fiber", "identity", "inverse", "associativity")}

    def dev(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y)))) if x.size else 0.0

    for count, rng in _rngs(seed, samples):
        for _ in range(count):
            b = list(map(float, rng.uniform(*G.box, size=G.n_base)))
            f0 = [float(e.evaluate(b)) for e in G.unit_params]
            u = G.u(b)
            worst["unit"] = max(worst["unit"], dev(G.s(u), b), dev(G.t(u), b), dev(G.fiber_arrow(b, f0), u))
            f = list(map(float, rng.uniform(*G.box, size=G.n_params)))
            worst["source_fiber"] = max(worst["source_fiber"], dev(G.s(G.fiber_arrow(b, f)), b))
            g = G.sample_arrow(rng)
            worst["identity"] = max(worst["identity"], dev(G.m(g, G.u(G.s(g))), g), dev(G.m(G.u(G.t(g)), g), g))
            gi = G.inv(g)
            worst["inverse"] = max(worst["inverse"], dev(G.m(g, gi), G.u(G.t(g))), dev(G.m(gi, g), G.u(G.s(g))))
            g3 = G.sample_arrow(rng)
            g2 = G.fiber_arrow(G.t(g3), list(map(float, rng.uniform(*G.box, size=G.n_params))))
            g1 = G.fiber_arrow(G.t(g2), list(map(float, rng.uniform(*G.box, size=G.n_params))))
            worst["associativity"] = max(worst["associativity"],
                                         dev(G.m(G.m(g1, g2), g3), G.m(g1, G.m(g2, g3))))
    checks = []
    for k, w in worst.items():
        ok = w <= tol
        checks.append(Check(f"axiom_{k}", ok, "numeric", [] if ok else [f"max deviation {w:.3e}"],
                            {"samples": samples, "max_residual": w, "seed": seed, "tol": tol}))
    return Verdict(checks)


def _closed_check(omega: DiffForm, rng) -> Check:
    d = exterior_derivative(omega)
    if all(c.is_rational for c in omega.terms.values()):
        bad = [f"{list(I)}: {omega.chart.fmt(c)}" for I, c in d.terms.items()]
        return Check("closed", not bad, "exact", bad)
    worst = 0.0
    for _ in range(32):
        p = list(map(float, rng.uniform(-1.5, 1.5, size=omega.chart.dim)))
        for c in d.terms.values():
            worst = max(worst, abs(float(c.evaluate(p))))
    ok = worst < 1e-9
    return Check("closed", ok, "numeric", [] if ok else [f"max |d omega| {worst:.3e}"], {"max_residual": worst})


def check_oversymplectic(G: GroupoidChart, omega: DiffForm, samples: int = 64, seed: int = 0) -> Verdict:
    if omega.chart != G.arrow or omega.degree != 2:
        raise GroupoidError("omega must be a 2-form on the arrow chart")
    want = 2 * G.n_base
    worst_kernel = 0.0
    ranks = set()
    bad = []
    points = 0
    closed = None
    for count, rng in _rngs(seed, samples):
        if closed is None:
            closed = _closed_check(omega, rng)
        for k in range(count):
            b = list(map(float, rng.uniform(*G.box, size=G.n_base)))
            p = G.u(b) if k % 2 == 0 else G.sample_arrow(rng)
            W = form_matrix(omega, p)
            U, sv, Vt = np.linalg.svd(W)
            top = sv[0] if sv.size else 0.0
            rank = int(np.sum(sv > RANK_RTOL * top)) if top > 0 else 0
            ranks.add(rank)
            if rank != want:
                bad.append(f"rank {rank} at {np.round(p, 6).tolist()}")
            kernel = Vt[rank:]
            if kernel.size:
                Js = jacobian(G.source.comps, p)
                Jt = jacobian(G.target.comps, p)
                for v in kernel:
                    worst_kernel = max(worst_kernel, float(np.max(np.abs(Js @ v))), float(np.max(np.abs(Jt @ v))))
            points += 1
    detail = {"samples": points, "ranks": sorted(ranks), "expected_rank": want, "seed": seed}
    rank_check = Check("rank", not bad, "numeric", bad[:5], detail)
    kok = worst_kernel <= KERNEL_TOL
    kernel_check = Check("kernel_in_ker_ds_dt", kok, "numeric", [] if kok else [f"max |ds v|,|dt v| {worst_kernel:.3e}"],
                         {"samples": points, "max_residual": worst_kernel, "seed": seed})
    return Verdict([closed, rank_check, kernel_check])


# ---------------------------------------------------------------- induced algebroid data


def right_invariant_fields(G: GroupoidChart) -> list:
    """Symbolic right-invariant vector fields of the frame ``d/df_i`` at the unit."""
    n = G.n_arrow
    nq = n + G.n_params
    g = [Expr.var(i, nq) for i in range(n)]
    f = [Expr.var(n + i, nq) for i in range(G.n_params)]
    tg = [c.compose(g, nq) for c in G.target.comps]
    k = [c.compose(tg + f, nq) for c in G.source_fiber.comps]
    m = [c.compose(k + g, nq) for c in G.mult.comps]
    tg_n = list(G.target.comps)
    at_unit = [Expr.var(i, n) for i in range(n)] + [e.compose(tg_n, n) for e in G.unit_params]
    out = []
    for i in range(G.n_params):
        comps = [c.diff(n + i).compose(at_unit, n) for c in m]
        out.append(Multivector.vector(G.arrow, comps))
    return out


def induced_im_data(G: GroupoidChart, omega: DiffForm, base_points: Sequence[Sequence[float]]) -> list:
    """At each base point: ``mu[a][j] = omega(a_a, du(d/dx_j))`` and the bracket
    coefficients ``C[a][b][c]`` of the right-invariant frame, both numeric."""
    fields = right_invariant_fields(G)
    r = len(fields)
    brackets = {(a, b): schouten(fields[a], fields[b]) for a in range(r) for b in range(a + 1, r)}
    out = []
    for bp in base_points:
        bp = list(map(float, bp))
        p = G.u(bp)
        W = form_matrix(omega, p)
        frame = np.array([[float(c.evaluate(p)) for c in X.components()] for X in fields])
        Ju = jacobian(G.unit.comps, bp)
        mu = frame @ W @ Ju
        C = np.zeros((r, r, r))
        fit = 0.0
        for (a, b), br in brackets.items():
            v = np.array([float(c.evaluate(p)) for c in br.components()])
            coef, *_ = np.linalg.lstsq(frame.T, v, rcond=None)
            fit = max(fit, float(np.max(np.abs(frame.T @ coef - v))) if v.size else 0.0)
            C[a, b] = coef
            C[b, a] = -coef
        anchor = frame @ jacobian(G.target.comps, p).T
        out.append({"point": bp, "mu": mu, "structure": C, "anchor": anchor, "fit_residual": fit})
    return out


def compare_im(G: GroupoidChart, omega: DiffForm, change: Sequence[Sequence[Expr]], mu_exact, C_exact,
               samples: int = 16, seed: int = 0, tol: float = 1e-9) -> Check:
    """Compare induced data in the frame ``e_a = change[a][b] a_b`` (entries on
    the base chart) with exact data ``mu_exact[a][j]``, ``C_exact[a][b][c]``."""
    rng = np.random.default_rng([seed, 7])
    pts = [list(map(float, rng.uniform(*G.box, size=G.n_base))) for _ in range(samples)]
    worst = 0.0
    for rec in induced_im_data(G, omega, pts):
        bp = rec["point"]
        P = np.array([[float(e.evaluate(bp)) for e in row] for row in change])
        Pinv = np.linalg.inv(P)
        mu = P @ rec["mu"]
        C = np.einsum("ik,jl,klm,mn->ijn", P, P, rec["structure"], Pinv)
        mu_x = np.array([[float(e.evaluate(bp)) for e in row] for row in mu_exact])
        C_x = np.array([[[float(e.evaluate(bp)) for e in row] for row in plane] for plane in C_exact])
        worst = max(worst, float(np.max(np.abs(mu - mu_x))), float(np.max(np.abs(C - C_x))),
                    rec["fit_residual"])
    ok = worst <= tol
    return Check("induced_im", ok, "numeric", [] if ok else [f"max deviation {worst:.3e}"],
                 {"samples": samples, "max_residual": worst, "seed": seed, "tol": tol})
