import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blds.harness import random_partition
from blds.model import (
    BadBudget,
    BadPrior,
    BadStructure,
    DimensionMismatch,
    NonpositiveCost,
    RowNotNormalized,
    Source,
    ZeroLikelihood,
    as_fraction,
    bits,
    equivalence_partition,
    full_mask,
    indist_intersection,
    indist_set,
    instance_from_partitions,
    is_partition_structured,
    kl_divergence,
    mask_of,
    realize_likelihoods,
    validate_instance,
)
from conftest import tiny_sources

T1, T2, T3 = 1, 2, 4  # state bitmasks


def test_tiny_accepted(tiny):
    assert tiny.m == 3 and tiny.n == 2
    assert tiny.costs == (F(2), F(1))
    assert tiny.dmap.indist == ((T1 | T3, T2, T1 | T3), (T1 | T2, T1 | T2, T3))


def test_zero_likelihood_rejected():
    s1, s2 = tiny_sources()
    bad = Source.from_rows([["1/2", "1/2"], ["0", "1"], ["1/2", "1/2"]], 2)
    with pytest.raises(ZeroLikelihood) as err:
        validate_instance([bad, s2], [F(1, 3)] * 3, [0, 1, 1])
    assert err.value.index == (0, 1, 0)


def test_bad_prior_rejected():
    with pytest.raises(BadPrior):
        validate_instance(tiny_sources(), [F(1, 2)] * 3, [0, 1, 1])


def test_other_validation_errors():
    with pytest.raises(RowNotNormalized):
        bad = Source.from_rows([["1/2", "1/3"], ["1/3", "2/3"], ["1/2", "1/2"]], 1)
        validate_instance([bad], [F(1, 3)] * 3, [0, 1, 1])
    with pytest.raises(BadBudget) as err:
        validate_instance(tiny_sources(), [F(1, 3)] * 3, [0, F(3, 2), 1])
    assert err.value.index == 1
    with pytest.raises(NonpositiveCost) as err:
        validate_instance(tiny_sources(cost2=0), [F(1, 3)] * 3, [0, 1, 1])
    assert err.value.index == 1
    with pytest.raises(BadStructure):
        validate_instance(tiny_sources(), [F(1, 2)] * 2, [0, 1])


def test_floats_rejected():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("2/4") == F(1, 2)


def test_indist_set():
    s1, s2 = tiny_sources()
    assert indist_set(s1, 0) == T1 | T3
    assert indist_set(s2, 2) == T3
    flat = Source.from_rows([["1/2", "1/2"]] * 4)
    assert all(indist_set(flat, p) == full_mask(4) for p in range(4))


def test_indist_intersection(tiny):
    assert indist_intersection(tiny.dmap, 0b11, 0) == T1
    assert indist_intersection(tiny.dmap, 0, 1) == T1 | T2 | T3
    assert indist_intersection(tiny.dmap, 0b10, 0) == T1 | T2


def test_kl_divergence():
    half, skew = [F(1, 2), F(1, 2)], [F(1, 3), F(2, 3)]
    assert kl_divergence(half, half) == 0.0
    assert kl_divergence(half, skew) == pytest.approx(0.5 * math.log(9 / 8), abs=1e-12)
    assert kl_divergence(half, skew) == pytest.approx(0.058891518, abs=1e-9)
    assert kl_divergence(skew, half) > 0
    with pytest.raises(DimensionMismatch):
        kl_divergence(half, [F(1)])


def test_equivalence_partition():
    s1, s2 = tiny_sources()
    assert equivalence_partition(s1) == [T1 | T3, T2]
    assert equivalence_partition(s2) == [T1 | T2, T3]
    assert equivalence_partition(Source.from_rows([["1/4", "3/4"]] * 3)) == [T1 | T2 | T3]


def test_realize_rows():
    (src,) = realize_likelihoods([[T1 | T3, T2]])
    assert src.likelihood[0] == src.likelihood[2] == (F(1, 3), F(2, 3))
    assert src.likelihood[1] == (F(1, 4), F(3, 4))
    (single,) = realize_likelihoods([[T1 | T2 | T3]])
    assert set(single.likelihood) == {(F(1, 3), F(2, 3))}


def test_realize_tiny_round_trip(tiny):
    parts = [equivalence_partition(s) for s in tiny.sources]
    rebuilt = instance_from_partitions(parts, tiny.costs, tiny.prior, tiny.budgets)
    assert rebuilt.dmap == tiny.dmap


def test_realize_rejects_overlap():
    with pytest.raises(BadStructure):
        realize_likelihoods([[T1 | T2, T2 | T3]])


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_realize_round_trip(m, seed):
    rng = np.random.default_rng(seed)
    parts = [random_partition(m, rng) for _ in range(3)]
    for blocks, src in zip(parts, realize_likelihoods(parts)):
        assert equivalence_partition(src) == blocks
        assert all(sum(row) == 1 for row in src.likelihood)


def _random_source(rng, m, signals):
    # Rows drawn from a small pool so that some states coincide.
    pool = []
    for _ in range(max(1, m - 1)):
        w = [int(x) for x in rng.integers(1, 4, size=signals)]
        pool.append([F(x, sum(w)) for x in w])
    return Source.from_rows([pool[int(rng.integers(len(pool)))] for _ in range(m)])


@settings(max_examples=60)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_blocks_partition_and_kl_agreement(m, signals, seed):
    rng = np.random.default_rng(seed)
    src = _random_source(rng, m, signals)
    blocks = equivalence_partition(src)
    assert sum(blocks) == full_mask(m) and mask_of(q for b in blocks for q in bits(b)) == full_mask(m)
    for p in range(m):
        assert any(indist_set(src, p) == b for b in blocks)
        for q in range(m):
            same = (indist_set(src, p) >> q) & 1
            close = kl_divergence(src.likelihood[q], src.likelihood[p]) < 1e-12
            assert bool(same) == close


@settings(max_examples=40)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_intersection_matches_joint_likelihood(m, seed):
    rng = np.random.default_rng(seed)
    sources = [_random_source(rng, m, int(rng.integers(1, 4))) for _ in range(3)]
    inst = validate_instance(sources, [F(1, m)] * m, [0] * m)
    for size in range(4):
        for chosen in itertools.combinations(range(3), size):
            selected = mask_of(chosen)
            spaces = [range(sources[i].signal_count) for i in chosen]
            joint = []
            for q in range(m):
                vec = []
                for profile in itertools.product(*spaces):
                    prob = F(1)
                    for i, s in zip(chosen, profile):
                        prob *= sources[i].likelihood[q][s]
                    vec.append(prob)
                joint.append(vec)
            for p in range(m):
                brute = mask_of(q for q in range(m) if joint[q] == joint[p])
                assert indist_intersection(inst.dmap, selected, p) == brute


def test_partition_structure_flag(tiny):
    assert is_partition_structured(tiny.dmap)
