"""Check records shared by every verification routine."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .expr import Chart, Expr, PoleError


@dataclass
class Check:
    name: str
    passed: bool
    mode: str = "exact"
    residuals: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> dict:
        out = {"name": self.name, "status": self.status, "mode": self.mode, "residuals": list(self.residuals)}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Verdict:
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def extend(self, other: "Verdict", prefix: str = "") -> "Verdict":
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.mode, c.residuals, c.detail))
        return self


def sample_points(rng: np.random.Generator, dim: int, count: int, lo: float = -2.0, hi: float = 2.0) -> list:
    return [list(map(float, rng.uniform(lo, hi, size=dim))) for _ in range(count)]


def numeric_zero(e: Expr, rng: np.random.Generator, samples: int = 32, tol: float = 1e-9) -> tuple[bool, float]:
    """Sample ``e`` at random points; poles are skipped and resampled."""
    worst = 0.0
    done = 0
    budget = 10 * samples
    while done < samples and budget > 0:
        budget -= 1
        pt = list(map(float, rng.uniform(-2.0, 2.0, size=e.nvars)))
        try:
            v = float(e.evaluate(pt))
        except PoleError:
            continue
        worst = max(worst, abs(v))
        done += 1
    if done < samples:
        raise PoleError("sampling kept hitting poles")
    return worst <= tol, worst


def residual_check(name: str, chart: Chart, residuals: Iterable[tuple[str, Expr]],
                   rng: np.random.Generator | None = None, samples: int = 32, tol: float = 1e-9) -> Check:
    """Exact zero test of named residuals; residuals with transcendental
    factors that do not cancel symbolically are decided by sampling."""
    bad = []
    numeric = False
    worst = 0.0
    for label, r in residuals:
        if r.is_zero:
            continue
        if r.is_rational:
            bad.append(f"{label}: {chart.fmt(r)}")
            continue
        numeric = True
        if rng is None:
            rng = np.random.default_rng(0)
        ok, w = numeric_zero(r, rng, samples, tol)
        worst = max(worst, w)
        if not ok:
            bad.append(f"{label}: {chart.fmt(r)} (max |value| {w:.3e})")
    detail = {"max_residual": worst, "samples": samples} if numeric else {}
    return Check(name, not bad, "numeric" if numeric else "exact", bad, detail)
