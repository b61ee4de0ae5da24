"""Exhaustive property checks on a single small instance.

Used by ``blds verify``.  Every check enumerates subsets outright, so keep
``n`` small (the defaults refuse instances with more than 10 sources).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from blds.bounds import fast_bounds, greedy_bounds
from blds.model import BldsInstance, full_mask
from blds.objective import (
    active_states,
    check_solvable,
    f_truncated,
    f_value,
    is_feasible,
    steady_state_error,
)
from blds.solvers import FastGreedyConfig, exact_solve, fast_greedy_solve, greedy_solve

SetFunction = Callable[[int], Fraction]
SLACK = 1e-9


@dataclass
class CheckResult:
    name: str
    checked: int
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def monotone_violations(f: SetFunction, n: int) -> tuple[int, int]:
    checked = bad = 0
    for J in range(1 << n):
        fJ = f(J)
        for I in submasks(J):
            checked += 1
            if f(I) > fJ:
                bad += 1
    return checked, bad


def diminishing_returns_violations(f: SetFunction, n: int) -> tuple[int, int]:
    """``f(I+j) - f(I) >= f(J+j) - f(J)`` for all ``I <= J`` and ``j`` outside ``J``."""
    checked = bad = 0
    full = full_mask(n)
    for J in range(1 << n):
        fJ = f(J)
        outside = full & ~J
        for I in submasks(J):
            fI = f(I)
            j_bits = outside
            while j_bits:
                low = j_bits & -j_bits
                j_bits ^= low
                checked += 1
                if f(I | low) - fI < f(J | low) - fJ:
                    bad += 1
    return checked, bad


def pairwise_sum_violations(f: SetFunction, n: int) -> tuple[int, int]:
    """``sum_{j in Y-X} (f(X+j) - f(X)) >= f(X|Y) - f(X)`` for all ``X, Y``."""
    checked = bad = 0
    size = 1 << n
    for X in range(size):
        fX = f(X)
        gains = [f(X | (1 << j)) - fX for j in range(n)]
        for Y in range(size):
            checked += 1
            extra = Y & ~X
            lhs = sum((gains[j] for j in range(n) if (extra >> j) & 1), Fraction(0))
            if lhs < f(X | Y) - fX:
                bad += 1
    return checked, bad


def direct_feasible(inst: BldsInstance, selected: int) -> bool:
    """Every state's steady-state error is within its budget."""
    return all(steady_state_error(inst, selected, p) <= inst.budgets[p] for p in range(inst.m))


def _set_functions(inst: BldsInstance):
    yield "z", inst.coverage.value
    for p in active_states(inst):
        yield f"f[{p}]", lambda I, p=p: f_value(inst, p, I)
        yield f"f_trunc[{p}]", lambda I, p=p: f_truncated(inst, p, I)


def run_checks(inst: BldsInstance, epsilon=Fraction(1, 10), max_sources: int = 10) -> list[CheckResult]:
    n = inst.n
    if n > max_sources:
        raise ValueError(f"exhaustive checks limited to {max_sources} sources, got {n}")
    results = []
    for name, f in _set_functions(inst):
        cache: dict[int, Fraction] = {}

        def g(I, f=f, cache=cache):
            if I not in cache:
                cache[I] = f(I)
            return cache[I]

        results.append(CheckResult(f"monotone {name}", *monotone_violations(g, n)))
        results.append(CheckResult(f"submodular {name}", *diminishing_returns_violations(g, n)))
        results.append(CheckResult(f"submodular-sum {name}", *pairwise_sum_violations(g, n)))

    agree = sum(is_feasible(inst, I) != direct_feasible(inst, I) for I in range(1 << n))
    results.append(CheckResult("feasibility equivalence", 1 << n, agree))

    check_solvable(inst)
    opt = exact_solve(inst)
    brute = min(
        (inst.cost_of(I) for I in range(1 << n) if direct_feasible(inst, I)),
        default=None,
    )
    results.append(CheckResult("exact optimum", 1, int(brute != opt.cost)))

    sol_g, trace_g = greedy_solve(inst)
    sol_f, trace_f = fast_greedy_solve(inst, FastGreedyConfig(epsilon))
    z_full = trace_g.z_full
    bad = int(not sol_g.feasible) + int(sol_g.cost < opt.cost)
    results.append(CheckResult("greedy feasible and no better than optimum", 2, bad))
    bad = int(sol_f.achieved_z < (1 - Fraction(epsilon)) * z_full)
    results.append(CheckResult("fast greedy coverage", 1, bad))

    gb = greedy_bounds(inst, trace_g)
    fb = fast_bounds(inst, trace_f, epsilon)
    h_star = float(opt.cost)
    checked = bad = 0
    for value in (gb.bound_a, gb.bound_b, gb.bound_c, gb.bound_d, gb.bound_d_log):
        if value is not None:
            checked += 1
            bad += float(sol_g.cost) > value * h_star + SLACK
    if sol_f.feasible:
        for value in (fb.fast_a, fb.fast_b):
            if value is not None:
                checked += 1
                bad += float(sol_f.cost) > value * h_star + SLACK
    results.append(CheckResult("bound soundness", checked, bad))

    calls_ok = trace_g.oracle_calls <= n * (trace_g.T + 1) + 1
    calls_ok &= trace_f.oracle_calls <= n * fb.kmax + n + 1
    results.append(CheckResult("oracle call ceilings", 2, int(not calls_ok)))
    return results
