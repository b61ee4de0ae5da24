"""A-posteriori approximation bounds for greedy and threshold-greedy traces.

Each bound is the factor by which the returned cost may exceed the optimum.
All ``z`` and cost inputs are exact; the logarithm is taken last.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

from blds.model import BldsInstance, full_mask
from blds.solvers import SolveTrace


class NotApplicable(ValueError):
    """The bound's index range or side condition is empty for this trace."""


def _ln(x: Fraction) -> float:
    # Difference of logs keeps precision for ratios of large integers.
    return math.log(x.numerator) - math.log(x.denominator)


def bound_ratio_a(trace: SolveTrace, inst: BldsInstance) -> float:
    T = trace.T
    if T < 2:
        raise NotApplicable("needs at least two greedy picks")
    z = inst.coverage.value
    z0 = z(0)
    best = None
    for zeta in range(1, T):
        base = trace.prefix(zeta)
        zb = z(base)
        for i in range(inst.n):
            denom = z(base | (1 << i)) - zb
            if denom > 0:
                ratio = (z(1 << i) - z0) / denom
                if best is None or ratio > best:
                    best = ratio
    if best is None or best <= 0:
        raise NotApplicable("no pair with a positive marginal gain")
    return 1 + _ln(best)


def bound_ratio_b(trace: SolveTrace, inst: BldsInstance) -> float:
    T = trace.T
    if T < 1:
        raise NotApplicable("empty trace")
    z = inst.coverage.value
    first, last = trace.picks[0].source, trace.picks[-1].source
    num = inst.costs[last] * (z(1 << first) - z(0))
    den = inst.costs[first] * trace.picks[-1].gain
    if num <= 0 or den <= 0:
        raise NotApplicable("degenerate first or last gain")
    return 1 + _ln(num / den)


def bound_ratio_c(trace: SolveTrace, inst: BldsInstance) -> float:
    T = trace.T
    if T < 1:
        raise NotApplicable("empty trace")
    z = inst.coverage.value
    z_full = z(full_mask(inst.n))
    gap = z_full - z(trace.prefix(T - 1))
    if gap <= 0:
        raise NotApplicable("coverage already full before the last pick")
    return 1 + _ln((z_full - z(0)) / gap)


class HarmonicBound(NamedTuple):
    harmonic: float  # sum_{i=1}^{M} 1/i
    log_form: float  # 1 + ln M
    M: int


def harmonic(M: int) -> float:
    return math.fsum(1.0 / i for i in range(1, M + 1))


def bound_ratio_d(inst: BldsInstance) -> HarmonicBound:
    """Integer-objective bound with ``M`` the largest scaled singleton value.

    ``M = 0`` only happens when nothing needs covering; both forms are then 1.
    """
    cov = inst.coverage
    M = max((cov.scaled(1 << j) for j in range(inst.n)), default=0)
    if M == 0:
        return HarmonicBound(1.0, 1.0, 0)
    return HarmonicBound(harmonic(M), 1 + math.log(M), M)


def fast_bound_a(trace: SolveTrace, inst: BldsInstance, epsilon) -> float:
    eps = Fraction(epsilon)
    T = trace.T
    if T < 1:
        raise NotApplicable("empty trace")
    z = inst.coverage.value
    z_full = z(full_mask(inst.n))
    gap = z_full - z(trace.prefix(T - 1))
    if gap <= 0:
        raise NotApplicable("coverage already full before the last pick")
    return (1 + _ln(z_full / gap)) / float(1 - eps)


def fast_bound_b(inst: BldsInstance, epsilon) -> float:
    eps = Fraction(epsilon)
    cov = inst.coverage
    top = cov.scaled(full_mask(inst.n))
    base = 1.0 if top == 0 else 1 + math.log(top)
    return base / float(1 - eps)


def kmax(n: int, epsilon, h_max, h_min) -> int:
    """Ceiling on the number of threshold levels the fast greedy can run."""
    eps = float(Fraction(epsilon))
    ratio = Fraction(h_max) / Fraction(h_min)
    value = (math.log(n / eps) + _ln(ratio)) / -math.log1p(-eps)
    return max(1, math.ceil(value))


def closed_form_greedy(m: int, R: int) -> float:
    """``1 + 2 ln m + ln(m - R)`` for uniform prior and budgets ``R/m``."""
    return 1 + 2 * math.log(m) + math.log(m - R)


def closed_form_fast(m: int, R: int, epsilon) -> float:
    return closed_form_greedy(m, R) / float(1 - Fraction(epsilon))


@dataclass
class BoundsReport:
    bound_a: float | None = None
    bound_b: float | None = None
    bound_c: float | None = None
    bound_d: float | None = None
    bound_d_log: float | None = None
    fast_a: float | None = None
    fast_b: float | None = None
    m_value: int = 0
    scale: int = 1
    kmax: int | None = None
    cost_ratio: float | None = None

    def applicable(self) -> dict[str, bool]:
        names = ("bound_a", "bound_b", "bound_c", "bound_d", "fast_a", "fast_b")
        return {k: getattr(self, k) is not None for k in names}

    def to_dict(self) -> dict:
        out = asdict(self)
        out["applicable"] = self.applicable()
        return out


def _try(fn, *args):
    try:
        return fn(*args)
    except NotApplicable:
        return None


def greedy_bounds(inst: BldsInstance, trace: SolveTrace) -> BoundsReport:
    d = bound_ratio_d(inst)
    return BoundsReport(
        bound_a=_try(bound_ratio_a, trace, inst),
        bound_b=_try(bound_ratio_b, trace, inst),
        bound_c=_try(bound_ratio_c, trace, inst),
        bound_d=d.harmonic,
        bound_d_log=d.log_form,
        m_value=d.M,
        scale=inst.coverage.scale,
    )


def fast_bounds(inst: BldsInstance, trace: SolveTrace, epsilon) -> BoundsReport:
    h_max, h_min = max(inst.costs), min(inst.costs)
    return BoundsReport(
        fast_a=_try(fast_bound_a, trace, inst, epsilon),
        fast_b=fast_bound_b(inst, epsilon),
        m_value=inst.coverage.scaled(full_mask(inst.n)),
        scale=inst.coverage.scale,
        kmax=kmax(inst.n, epsilon, h_max, h_min),
        cost_ratio=float(h_max / h_min),
    )
