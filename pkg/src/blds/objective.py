"""Steady-state learning error and the submodular coverage function ``z``.

``z(I)`` is the sum over active states of the truncated distinguishable prior
mass.  Every value is a rational; internally :class:`Coverage` works with an
integer multiple of ``z`` so that repeated evaluation stays cheap and exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from blds.model import BldsInstance, bits, full_mask, indist_intersection


class Infeasible(Exception):
    """Even the full source set misses some state's error budget."""

    def __init__(self, states):
        self.states = tuple(states)
        super().__init__(f"no source set meets the budget of states {list(self.states)}")


@dataclass(frozen=True)
class ActiveStateSet:
    states: int
    requirement: dict

    def __iter__(self):
        return iter(bits(self.states))

    def __len__(self):
        return self.states.bit_count()


def steady_state_error(inst: BldsInstance, selected: int, p: int) -> Fraction:
    """Limiting total-variation error when ``p`` is the true state."""
    fset = indist_intersection(inst.dmap, selected, p)
    mass = sum((inst.prior[q] for q in bits(fset)), Fraction(0))
    return 1 - inst.prior[p] / mass


def requirement(inst: BldsInstance, p: int) -> Fraction:
    """Distinguishable mass state ``p`` needs: ``1 - mu0(p)/(1 - R_p)``.

    Only meaningful for ``R_p < 1``.
    """
    return 1 - inst.prior[p] / (1 - inst.budgets[p])


def active_states(inst: BldsInstance) -> ActiveStateSet:
    mask = 0
    req = {}
    for p in range(inst.m):
        # Strict inequality: R_p == 1 - mu0(p) imposes nothing.
        if inst.budgets[p] < 1 - inst.prior[p]:
            mask |= 1 << p
            req[p] = requirement(inst, p)
    return ActiveStateSet(states=mask, requirement=req)


def f_value(inst: BldsInstance, p: int, selected: int) -> Fraction:
    fset = indist_intersection(inst.dmap, selected, p)
    comp = full_mask(inst.m) & ~fset
    return sum((inst.prior[q] for q in bits(comp)), Fraction(0))


def f_truncated(inst: BldsInstance, p: int, selected: int) -> Fraction:
    return min(f_value(inst, p, selected), requirement(inst, p))


def section_scale(inst: BldsInstance) -> int | None:
    """``m(m - R)`` when the instance has uniform prior and budgets ``R/m``.

    Returns None for any other instance.
    """
    m = inst.m
    if any(mu != Fraction(1, m) for mu in inst.prior):
        return None
    first = inst.budgets[0]
    if any(b != first for b in inst.budgets):
        return None
    r = first * m
    if r.denominator != 1 or not 0 <= r < m - 1:
        return None
    return m * (m - int(r))


def integer_scale(inst: BldsInstance, active: ActiveStateSet | None = None) -> int:
    """A positive integer ``L`` such that ``L * z(I)`` is an integer for all ``I``."""
    special = section_scale(inst)
    if special is not None:
        return special
    if active is None:
        active = active_states(inst)
    scale = 1
    for mu in inst.prior:
        scale = math.lcm(scale, mu.denominator)
    for r in active.requirement.values():
        scale = math.lcm(scale, r.denominator)
    return scale


class Coverage:
    """Exact, memoized evaluator of ``z`` for one instance.

    ``scaled(I)`` returns ``scale * z(I)`` as an int; ``value(I)`` returns the
    Fraction ``z(I)``.
    """

    def __init__(self, inst: BldsInstance):
        self.inst = inst
        self.active = active_states(inst)
        self.scale = integer_scale(inst, self.active)
        self.weights = [int(mu * self.scale) for mu in inst.prior]
        self.uniform_weight = self.weights[0] if len(set(self.weights)) == 1 else None
        self.targets = [(p, int(r * self.scale)) for p, r in sorted(self.active.requirement.items())]
        self.full = full_mask(inst.m)
        # per_state[p][i] = distinguishable set of p under source i
        self.per_state = {
            p: [self.full & ~inst.dmap.indist[i][p] for i in range(inst.n)]
            for p, _ in self.targets
        }
        self._cache: dict[int, int] = {}

    def _mass(self, mask: int) -> int:
        if self.uniform_weight is not None:
            return self.uniform_weight * mask.bit_count()
        w = self.weights
        return sum(w[q] for q in bits(mask))

    def scaled(self, selected: int) -> int:
        hit = self._cache.get(selected)
        if hit is not None:
            return hit
        members = bits(selected)
        total = 0
        for p, target in self.targets:
            comp = 0
            row = self.per_state[p]
            for i in members:
                comp |= row[i]
            total += min(self._mass(comp), target)
        self._cache[selected] = total
        return total

    def value(self, selected: int) -> Fraction:
        return Fraction(self.scaled(selected), self.scale)

    def __call__(self, selected: int) -> Fraction:
        return self.value(selected)

    @property
    def full_set(self) -> int:
        return full_mask(self.inst.n)


def z_value(inst: BldsInstance, selected: int) -> Fraction:
    return inst.coverage.value(selected)


def z_integer_scaled(inst: BldsInstance, selected: int) -> int:
    return inst.coverage.scaled(selected)


def is_feasible(inst: BldsInstance, selected: int) -> bool:
    cov = inst.coverage
    return cov.scaled(selected) == cov.scaled(cov.full_set)


def check_solvable(inst: BldsInstance) -> None:
    """Raise :class:`Infeasible` naming every state the full set cannot satisfy."""
    full = full_mask(inst.n)
    act = active_states(inst)
    bad = [p for p in act if f_value(inst, p, full) < act.requirement[p]]
    if bad:
        raise Infeasible(bad)
