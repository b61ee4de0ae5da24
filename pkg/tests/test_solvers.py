from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blds.bounds import kmax
from blds.model import Source, full_mask, instance_from_partitions, mask_of, validate_instance
from blds.objective import Infeasible, f_value, is_feasible, z_value
from blds.solvers import (
    FastGreedyConfig,
    SetCoverInstance,
    TooLarge,
    counting_oracle,
    exact_solve,
    fast_greedy_solve,
    greedy_solve,
    min_cover_size,
    reduce_set_cover,
)
from conftest import instances, tiny_sources

EPS = F(1, 10)


def loose_tiny():
    return validate_instance(tiny_sources(), [F(1, 3)] * 3, [1, 1, 1])


def test_greedy_tiny(tiny):
    sol, trace = greedy_solve(tiny)
    assert [p.source for p in trace.picks] == [1, 0]
    assert [p.gain for p in trace.picks] == [F(1, 3), F(1, 3)]
    assert sol.selected == 0b11 and sol.cost == 3 and sol.feasible
    assert trace.oracle_calls == 5
    assert trace.oracle_calls <= 2 * (trace.T + 1) + 1


def test_greedy_nothing_to_cover():
    sol, trace = greedy_solve(loose_tiny())
    assert sol.selected == 0 and sol.cost == 0 and trace.T == 0


def test_greedy_single_good_source_among_decoys():
    m = 3
    parts = [[0b111], [0b011, 0b100], [0b001, 0b010, 0b100]]
    inst = instance_from_partitions(parts, [1, 1, 1], [F(1, m)] * m, [0, 1, 1])
    sol, trace = greedy_solve(inst)
    assert sol.indices == [2] and trace.T == 1
    assert exact_solve(inst).selected == sol.selected


def test_greedy_infeasible():
    s1, _ = tiny_sources()
    with pytest.raises(Infeasible):
        greedy_solve(validate_instance([s1], [F(1, 3)] * 3, [0, 1, 1]))


def test_fast_greedy_tiny(tiny):
    sol, trace = fast_greedy_solve(tiny, FastGreedyConfig(EPS))
    assert [(p.source, p.level) for p in trace.picks] == [(1, 0), (0, 7)]
    tau = F(1, 3) * (1 - EPS) ** 7
    assert tau <= F(1, 6) < tau / (1 - EPS)
    assert float(tau) == pytest.approx(0.1594323)
    assert sol.selected == 0b11 and sol.cost == 3 and sol.feasible
    assert trace.oracle_calls <= 2 * kmax(2, EPS, 2, 1) + 3
    assert trace.oracle_calls <= 2 * 66 + 3


def test_fast_greedy_nothing_to_cover():
    sol, trace = fast_greedy_solve(loose_tiny())
    assert sol.selected == 0 and trace.T == 0 and sol.feasible


def test_fast_config_validation():
    for bad in (0, 1, F(3, 2), -EPS):
        with pytest.raises(ValueError):
            FastGreedyConfig(bad)


def test_exact_tiny(tiny):
    sol = exact_solve(tiny)
    assert sol.selected == 0b11 and sol.cost == 3
    assert exact_solve(loose_tiny()).selected == 0


def test_exact_tie_break():
    # {0} and {1, 2} both cost 2; the smaller bitmask wins.
    m = 3
    parts = [[0b001, 0b010, 0b100], [0b011, 0b100], [0b101, 0b010]]
    inst = instance_from_partitions(parts, [2, 1, 1], [F(1, m)] * m, [0, 1, 1])
    assert is_feasible(inst, 0b001) and is_feasible(inst, 0b110)
    assert exact_solve(inst).selected == 0b001


def test_exact_too_large():
    n = 21
    src = Source.from_rows([["1/2", "1/2"], ["1/3", "2/3"]])
    inst = validate_instance([src] * n, [F(1, 2)] * 2, [0, 0])
    with pytest.raises(TooLarge):
        exact_solve(inst)


def test_reduction_example():
    sc = SetCoverInstance(universe_size=2, subsets=(0b01, 0b11))
    inst = reduce_set_cover(sc)
    assert inst.m == 3 and inst.n == 2
    full = full_mask(3)
    assert full & ~inst.dmap.indist[0][0] == 0b010
    assert full & ~inst.dmap.indist[1][0] == 0b110
    assert inst.costs == (1, 1)
    assert inst.budgets == (0, 1, 1)


def test_reduction_empty_subset():
    inst = reduce_set_cover(SetCoverInstance(universe_size=3, subsets=(0, 0b111)))
    assert set(inst.sources[0].likelihood) == {(F(1, 2), F(1, 2))}


@st.composite
def set_covers(draw, max_k=6, max_d=8):
    d = draw(st.integers(1, max_d))
    k = draw(st.integers(1, max_k))
    subsets = draw(st.lists(st.integers(0, (1 << d) - 1), min_size=k, max_size=k))
    return SetCoverInstance(universe_size=d, subsets=tuple(subsets))


@settings(max_examples=80, deadline=None)
@given(set_covers())
def test_reduction_equivalence(sc):
    inst = reduce_set_cover(sc)
    universe = full_mask(sc.universe_size)
    for chosen in range(1 << len(sc.subsets)):
        # Selected sources separate exactly the covered elements from state 0.
        assert f_value(inst, 0, chosen) * (sc.universe_size + 1) == (
            _union(sc, chosen) & universe
        ).bit_count()
        if sc.covers(full_mask(len(sc.subsets))):
            assert sc.covers(chosen) == is_feasible(inst, chosen)
    best = min_cover_size(sc)
    if best is None:
        with pytest.raises(Infeasible):
            exact_solve(inst)
    else:
        assert exact_solve(inst).cost == best


def _union(sc, chosen):
    out = 0
    for i, s in enumerate(sc.subsets):
        if (chosen >> i) & 1:
            out |= s
    return out


def test_counting_oracle(tiny):
    z = counting_oracle(tiny)
    assert z.calls == 0
    assert [z(I) for I in range(4)] == [z_value(tiny, I) for I in range(4)]
    assert z.calls == 4


@settings(max_examples=60, deadline=None)
@given(instances(max_n=7, max_m=7))
def test_solver_contracts(inst):
    opt = exact_solve(inst)
    brute = min(inst.cost_of(I) for I in range(1 << inst.n) if is_feasible(inst, I))
    assert opt.cost == brute and opt.feasible

    sol_g, trace_g = greedy_solve(inst)
    assert sol_g.feasible and sol_g.achieved_z == trace_g.z_full
    assert opt.cost <= sol_g.cost
    zs = [p.z_after for p in trace_g.picks]
    assert zs == sorted(set(zs))
    assert trace_g.oracle_calls <= inst.n * (trace_g.T + 1) + 1

    sol_f, trace_f = fast_greedy_solve(inst, FastGreedyConfig(EPS))
    assert sol_f.achieved_z >= (1 - EPS) * trace_f.z_full
    assert sol_f.feasible == (sol_f.achieved_z == trace_f.z_full)
    if sol_f.feasible:
        assert opt.cost <= sol_f.cost
    k = kmax(inst.n, EPS, max(inst.costs), min(inst.costs))
    assert trace_f.levels <= k
    assert trace_f.oracle_calls <= inst.n * k + inst.n + 1
    assert sol_f.cost == inst.cost_of(sol_f.selected)


@settings(max_examples=20, deadline=None)
@given(instances(max_n=6, max_m=6))
def test_deterministic_traces(inst):
    assert greedy_solve(inst) == greedy_solve(inst)
    assert fast_greedy_solve(inst) == fast_greedy_solve(inst)


def test_greedy_tie_break_smallest_index():
    m = 2
    parts = [[0b01, 0b10]] * 3
    inst = instance_from_partitions(parts, [1, 1, 1], [F(1, m)] * m, [0, 0])
    sol, trace = greedy_solve(inst)
    assert sol.indices == [0]
    sol, trace = fast_greedy_solve(inst)
    assert sol.indices == [0]
    assert mask_of([0]) == exact_solve(inst).selected
