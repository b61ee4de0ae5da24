"""Greedy, threshold-greedy and brute-force solvers for the covering form.

Every solver asks :func:`counting_oracle` for ``z`` so the number of
evaluations ends up in the returned :class:`SolveTrace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from blds.model import BldsInstance, Source, bits, full_mask, validate_instance
from blds.objective import check_solvable

MAX_EXACT_SOURCES = 20


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Pick:
    t: int
    source: int
    gain: Fraction
    z_after: Fraction
    level: int | None = None  # threshold level, fast greedy only


@dataclass
class SolveTrace:
    picks: list[Pick] = field(default_factory=list)
    oracle_calls: int = 0
    z_full: Fraction = Fraction(0)
    levels: int = 0  # threshold levels entered, fast greedy only

    @property
    def T(self) -> int:
        return len(self.picks)

    def prefix(self, t: int) -> int:
        """Bitmask of the first ``t`` picks."""
        mask = 0
        for pick in self.picks[:t]:
            mask |= 1 << pick.source
        return mask


@dataclass(frozen=True)
class Solution:
    selected: int
    cost: Fraction
    achieved_z: Fraction
    feasible: bool

    @property
    def indices(self) -> list[int]:
        return bits(self.selected)


@dataclass(frozen=True)
class FastGreedyConfig:
    epsilon: Fraction = Fraction(1, 10)

    def __post_init__(self):
        eps = Fraction(self.epsilon)
        if not 0 < eps < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class SetCoverInstance:
    universe_size: int
    subsets: tuple[int, ...]

    def __post_init__(self):
        if not self.subsets:
            raise ValueError("set cover needs at least one subset")
        if any(s & ~full_mask(self.universe_size) for s in self.subsets):
            raise ValueError("subset mentions an element outside the universe")

    def covers(self, chosen: int) -> bool:
        union = 0
        for i in bits(chosen):
            union |= self.subsets[i]
        return union == full_mask(self.universe_size)


class CountingOracle:
    """Wraps an instance's ``z``; every call increments ``calls``."""

    def __init__(self, inst: BldsInstance):
        self.inst = inst
        self._coverage = inst.coverage
        self.calls = 0

    def __call__(self, selected: int) -> Fraction:
        self.calls += 1
        return self._coverage.value(selected)


def counting_oracle(inst: BldsInstance) -> CountingOracle:
    return CountingOracle(inst)


def _solution(inst: BldsInstance, selected: int, z_sel: Fraction, z_full: Fraction) -> Solution:
    return Solution(
        selected=selected,
        cost=inst.cost_of(selected),
        achieved_z=z_sel,
        feasible=z_sel == z_full,
    )


def greedy_solve(inst: BldsInstance) -> tuple[Solution, SolveTrace]:
    """Cost-normalized greedy: add the best gain-per-cost source until ``z`` is full.

    Ties go to the smallest source index.
    """
    check_solvable(inst)
    z = counting_oracle(inst)
    n = inst.n
    z_full = z(full_mask(n))
    trace = SolveTrace(z_full=z_full)
    selected = 0
    current = z(0)
    while current < z_full:
        best = None
        for i in range(n):
            if (selected >> i) & 1:
                continue
            value = z(selected | (1 << i))
            ratio = (value - current) / inst.costs[i]
            if best is None or ratio > best[0]:
                best = (ratio, i, value)
        ratio, j, value = best
        if ratio <= 0:  # pragma: no cover - impossible for a solvable instance
            raise RuntimeError("greedy stalled with uncovered requirement")
        selected |= 1 << j
        trace.picks.append(Pick(t=trace.T, source=j, gain=value - current, z_after=value))
        current = value
    trace.oracle_calls = z.calls
    return _solution(inst, selected, current, z_full), trace


def fast_greedy_solve(
    inst: BldsInstance, cfg: FastGreedyConfig | None = None
) -> tuple[Solution, SolveTrace]:
    """Threshold greedy with geometrically decreasing thresholds.

    Sweeps sources in index order at each threshold ``d (1 - eps)^k`` and keeps
    any source whose gain per cost clears it, stopping once the threshold falls
    below ``eps * h_min / (n * h_max) * d`` or ``z`` is full.  Already selected
    sources are skipped: their gain is 0 and can never clear a positive
    threshold.
    """
    cfg = cfg or FastGreedyConfig()
    eps = cfg.epsilon
    check_solvable(inst)
    oracle = counting_oracle(inst)
    n = inst.n
    seen: dict[int, Fraction] = {}

    def z(mask: int) -> Fraction:
        # Values already computed for the same set are reused, not re-queried.
        if mask not in seen:
            seen[mask] = oracle(mask)
        return seen[mask]

    z_full = z(full_mask(n))
    trace = SolveTrace(z_full=z_full)
    selected = 0
    current = z(0)
    if current == z_full:
        trace.oracle_calls = oracle.calls
        return _solution(inst, 0, current, z_full), trace

    d = max((z(1 << i) - current) / inst.costs[i] for i in range(n))
    h_min, h_max = min(inst.costs), max(inst.costs)
    floor = eps * h_min / (n * h_max) * d
    tau = d
    level = 0
    while tau >= floor:
        trace.levels = level + 1
        for j in range(n):
            if (selected >> j) & 1:
                continue
            value = z(selected | (1 << j))
            if (value - current) / inst.costs[j] >= tau:
                selected |= 1 << j
                trace.picks.append(
                    Pick(t=trace.T, source=j, gain=value - current, z_after=value, level=level)
                )
                current = value
            if current == z_full:
                trace.oracle_calls = oracle.calls
                return _solution(inst, selected, current, z_full), trace
        tau *= 1 - eps
        level += 1
    trace.oracle_calls = oracle.calls
    return _solution(inst, selected, current, z_full), trace


def _doubling(values: Sequence, dtype) -> np.ndarray:
    """Entry ``mask`` is the bitwise OR of ``values[i]`` over the bits of ``mask``."""
    out = np.zeros(1, dtype=dtype)
    for v in values:
        out = np.concatenate([out, out | v])
    return out


def _subset_sums(values: Sequence[int], dtype) -> np.ndarray:
    """Entry ``mask`` is the sum of ``values[i]`` over the bits of ``mask``."""
    out = np.zeros(1, dtype=dtype)
    for v in values:
        out = np.concatenate([out, out + v])
    return out


def exact_solve(inst: BldsInstance, max_sources: int = MAX_EXACT_SOURCES) -> Solution:
    """Minimum-cost feasible subset by enumerating all ``2^n`` subsets.

    Among optimal subsets the one with the smallest bitmask value wins.
    """
    n = inst.n
    if n > max_sources:
        raise TooLarge(f"exact search supports at most {max_sources} sources, got {n}")
    check_solvable(inst)
    cov = inst.coverage
    m = inst.m
    size = 1 << n
    feasible = np.ones(size, dtype=bool)
    # Bitsets over up to 64 states fit in uint64.
    for p, target in cov.targets:
        union = _doubling([np.uint64(s) for s in cov.per_state[p]], np.uint64)
        if cov.uniform_weight is not None:
            mass = np.bitwise_count(union).astype(object if cov.uniform_weight * m >= 2**62 else np.int64)
            mass = mass * cov.uniform_weight
        else:
            big = max(cov.weights) * m >= 2**62
            mass = np.zeros(size, dtype=object if big else np.int64)
            for q, w in enumerate(cov.weights):
                mass = mass + ((union >> np.uint64(q)) & np.uint64(1)).astype(mass.dtype) * w
        feasible &= mass >= target
    denom = 1
    for h in inst.costs:
        denom = math.lcm(denom, h.denominator)
    int_costs = [int(h * denom) for h in inst.costs]
    big = sum(int_costs) >= 2**62
    costs = _subset_sums(int_costs, object if big else np.int64)
    candidates = np.flatnonzero(feasible)
    best_cost = costs[candidates].min()
    best = int(candidates[np.flatnonzero(costs[candidates] == best_cost)[0]])
    z_sel = cov.value(best)
    return _solution(inst, best, z_sel, cov.value(full_mask(n)))


def reduce_set_cover(sc: SetCoverInstance) -> BldsInstance:
    """BLDS instance whose feasible source sets are exactly the covers of ``sc``.

    State 0 is the one to be identified; state ``q + 1`` stands for element
    ``q``.  Source ``i`` separates state ``q + 1`` from state 0 iff element
    ``q`` lies in subset ``i``.
    """
    d = sc.universe_size
    half = (Fraction(1, 2), Fraction(1, 2))
    marked = (Fraction(1, 3), Fraction(2, 3))
    sources = []
    for subset in sc.subsets:
        rows = [half] + [marked if (subset >> q) & 1 else half for q in range(d)]
        sources.append(Source(likelihood=tuple(rows), cost=Fraction(1)))
    prior = [Fraction(1, d + 1)] * (d + 1)
    budgets = [Fraction(0)] + [Fraction(1)] * d
    return validate_instance(sources, prior, budgets)


def min_cover_size(sc: SetCoverInstance) -> int | None:
    """Brute-force minimum cover size, None when no cover exists."""
    k = len(sc.subsets)
    best = None
    for chosen in range(1 << k):
        if sc.covers(chosen):
            size = chosen.bit_count()
            if best is None or size < best:
                best = size
    return best
