from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import strategies as st

from blds.harness import random_partition
from blds.model import Source, full_mask, instance_from_partitions, instance_from_sets, validate_instance
from blds.objective import Infeasible, check_solvable


def tiny_sources(cost1=2, cost2=1):
    s1 = Source.from_rows([["1/2", "1/2"], ["1/3", "2/3"], ["1/2", "1/2"]], cost1)
    s2 = Source.from_rows([["1/2", "1/2"], ["1/2", "1/2"], ["1/4", "3/4"]], cost2)
    return [s1, s2]


def make_tiny():
    """Three states, two sources; only the first state has a binding budget."""
    return validate_instance(tiny_sources(), [F(1, 3)] * 3, [F(0), F(1), F(1)])


@pytest.fixture
def tiny():
    return make_tiny()


def random_prior(rng, m):
    weights = [int(w) for w in rng.integers(1, 6, size=m)]
    total = sum(weights)
    return [F(w, total) for w in weights]


def random_budgets(rng, m):
    # Mix of tight, loose and vacuous budgets.
    return [F(int(rng.integers(0, 5)), 4) for _ in range(m)]


def random_instance(rng, n, m, mode="realizable", uniform=False):
    """Small instance with random structure, costs, prior and budgets.

    Not necessarily solvable; see ``solvable_instance``.
    """
    costs = [int(c) for c in rng.integers(1, 6, size=n)]
    prior = [F(1, m)] * m if uniform else random_prior(rng, m)
    budgets = random_budgets(rng, m)
    if mode == "realizable":
        parts = [random_partition(m, rng) for _ in range(n)]
        return instance_from_partitions(parts, costs, prior, budgets)
    full = full_mask(m)
    indist = []
    for _ in range(n):
        coin = rng.random((m, m)) < 0.5
        np.fill_diagonal(coin, False)
        sym = coin | coin.T
        indist.append([full & ~sum(1 << int(q) for q in np.flatnonzero(sym[p])) for p in range(m)])
    return instance_from_sets(indist, costs, prior, budgets)


def solvable_instance(rng, n, m, mode="realizable", uniform=False):
    while True:
        inst = random_instance(rng, n, m, mode, uniform)
        try:
            check_solvable(inst)
        except Infeasible:
            continue
        return inst


@st.composite
def instances(draw, max_n=5, max_m=5, solvable=True):
    """Hypothesis strategy over small instances, driven by one integer seed."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(2, max_m))
    mode = draw(st.sampled_from(["realizable", "raw"]))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if solvable:
        return solvable_instance(rng, n, m, mode)
    return random_instance(rng, n, m, mode)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def report_criterion(request):
    """Record a PASS/FAIL line that is printed in the terminal summary."""
    lines = request.config._acceptance_lines

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
