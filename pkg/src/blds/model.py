"""BLDS instances, validation, and observational-equivalence structure.

All probabilities are :class:`fractions.Fraction` so that likelihood rows can be
compared for exact equality.  Sets of states and sets of sources are plain
``int`` bitmasks: bit ``p`` set means state ``p`` (or source ``p``) is a member.
Indices are 0-based throughout the code; the CLI and JSON use the same 0-based
indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

# Bitsets over states and sources are documented as supporting up to 64
# members; Python ints would allow more but generated reports assume it.
MAX_STATES = 64
MAX_SOURCES = 64


class ValidationError(ValueError):
    """Base class for instance validation failures."""

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = index


class ZeroLikelihood(ValidationError):
    pass


class RowNotNormalized(ValidationError):
    pass


class BadPrior(ValidationError):
    pass


class BadBudget(ValidationError):
    pass


class NonpositiveCost(ValidationError):
    pass


class BadStructure(ValidationError):
    """Shape problems: wrong row counts, bad indistinguishability sets, etc."""


class DimensionMismatch(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Parse ``"p/q"``, ``"p"``, ints or Fractions.  Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"expected an exact rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_str(value: Fraction) -> str:
    return str(value)


def bits(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def full_mask(size: int) -> int:
    return (1 << size) - 1


@dataclass(frozen=True)
class Source:
    """A data source with a finite signal space.

    ``likelihood[p][s]`` is the probability of signal ``s`` under state ``p``.
    """

    likelihood: tuple[tuple[Fraction, ...], ...]
    cost: Fraction

    @property
    def signal_count(self) -> int:
        return len(self.likelihood[0]) if self.likelihood else 0

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cost=1) -> "Source":
        return cls(
            likelihood=tuple(tuple(as_fraction(x) for x in row) for row in rows),
            cost=as_fraction(cost),
        )


@dataclass(frozen=True)
class DistinguishabilityMap:
    """``indist[i][p]`` is the bitmask of states source ``i`` cannot tell from ``p``."""

    indist: tuple[tuple[int, ...], ...]
    m: int

    @property
    def n(self) -> int:
        return len(self.indist)

    def distinguishable(self, i: int, p: int) -> int:
        return full_mask(self.m) & ~self.indist[i][p]


@dataclass(frozen=True)
class BldsInstance:
    """A validated BLDS instance.

    ``sources`` is empty for instances given directly by their
    indistinguishability sets (``fc_sets`` form); those can be optimized but
    not simulated.  ``costs`` always has one entry per source.
    """

    prior: tuple[Fraction, ...]
    budgets: tuple[Fraction, ...]
    costs: tuple[Fraction, ...]
    dmap: DistinguishabilityMap
    sources: tuple[Source, ...] = ()
    labels: tuple[str, ...] = field(default=())

    @property
    def m(self) -> int:
        return len(self.prior)

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def has_likelihoods(self) -> bool:
        return len(self.sources) == self.n

    def cost_of(self, selected: int) -> Fraction:
        return sum((self.costs[i] for i in bits(selected)), Fraction(0))

    @cached_property
    def coverage(self):
        # Deferred import: objective depends on this module.
        from blds.objective import Coverage

        return Coverage(self)


def indist_set(source: Source, p: int) -> int:
    """States whose likelihood row equals the row of state ``p`` exactly."""
    row = source.likelihood[p]
    return mask_of(q for q, other in enumerate(source.likelihood) if other == row)


def equivalence_partition(source: Source) -> list[int]:
    """Blocks of equal likelihood rows, ordered by their smallest state."""
    blocks: dict[tuple, int] = {}
    for q, row in enumerate(source.likelihood):
        blocks[row] = blocks.get(row, 0) | (1 << q)
    return sorted(blocks.values(), key=lambda b: b & -b)


def indist_intersection(dmap: DistinguishabilityMap, selected: int, p: int) -> int:
    """States indistinguishable from ``p`` under every source in ``selected``.

    The empty selection distinguishes nothing, so every state is returned.
    """
    out = full_mask(dmap.m)
    for i in bits(selected):
        out &= dmap.indist[i][p]
    return out


def kl_divergence(p: Sequence, q: Sequence) -> float:
    if len(p) != len(q):
        raise DimensionMismatch(f"lengths differ: {len(p)} vs {len(q)}")
    total = 0.0
    for ps, qs in zip(p, q):
        ps, qs = float(ps), float(qs)
        total += ps * math.log(ps / qs)
    # Rounding can leave a tiny negative value for identical rows.
    return max(total, 0.0)


def realize_likelihoods(partitions: Sequence[Sequence[int]], costs=None) -> list[Source]:
    """Build binary-signal sources whose equivalence classes are ``partitions``.

    Each partition is a list of state bitmasks.  Blocks are numbered 1, 2, ...
    in order of their smallest state and block ``j`` gets the row
    ``(1/(j+2), (j+1)/(j+2))``; distinct blocks therefore get distinct rows.
    """
    sources = []
    for k, blocks in enumerate(partitions):
        if not blocks:
            raise BadStructure("empty partition", index=k)
        m = max(b.bit_length() for b in blocks)
        rows: list = [None] * m
        ordered = sorted(blocks, key=lambda b: b & -b)
        for j, block in enumerate(ordered, start=1):
            row = (Fraction(1, j + 2), Fraction(j + 1, j + 2))
            for q in bits(block):
                if rows[q] is not None:
                    raise BadStructure(f"state {q} appears in two blocks", index=k)
                rows[q] = row
        if any(r is None for r in rows):
            raise BadStructure("partition does not cover every state", index=k)
        cost = Fraction(1) if costs is None else as_fraction(costs[k])
        sources.append(Source(likelihood=tuple(rows), cost=cost))
    return sources


def _check_partition(blocks: Sequence[int], m: int, index: int) -> None:
    seen = 0
    for b in blocks:
        if b == 0 or seen & b:
            raise BadStructure("partition blocks must be nonempty and disjoint", index=index)
        seen |= b
    if seen != full_mask(m):
        raise BadStructure("partition does not cover every state", index=index)


def _check_common(prior, budgets, costs, m: int) -> None:
    if m < 1 or m > MAX_STATES:
        raise BadStructure(f"state count must be in 1..{MAX_STATES}, got {m}")
    if len(costs) > MAX_SOURCES:
        raise BadStructure(f"at most {MAX_SOURCES} sources are supported")
    if len(budgets) != m:
        raise BadStructure(f"expected {m} budgets, got {len(budgets)}")
    for p, mu in enumerate(prior):
        if mu <= 0:
            raise BadPrior(f"prior of state {p} must be positive, got {mu}", index=p)
    if sum(prior) != 1:
        raise BadPrior(f"prior sums to {sum(prior)}, not 1")
    for p, r in enumerate(budgets):
        if not 0 <= r <= 1:
            raise BadBudget(f"budget of state {p} must lie in [0, 1], got {r}", index=p)
    for i, h in enumerate(costs):
        if h <= 0:
            raise NonpositiveCost(f"cost of source {i} must be positive, got {h}", index=i)


def validate_instance(
    sources: Sequence[Source],
    prior: Sequence,
    budgets: Sequence,
    labels: Sequence[str] | None = None,
) -> BldsInstance:
    """Check every invariant of a likelihood-specified instance.

    Returns the immutable instance with its distinguishability map attached.
    """
    prior = tuple(as_fraction(x) for x in prior)
    budgets = tuple(as_fraction(x) for x in budgets)
    m = len(prior)
    costs = tuple(s.cost for s in sources)
    _check_common(prior, budgets, costs, m)
    for i, src in enumerate(sources):
        if len(src.likelihood) != m:
            raise BadStructure(f"source {i} has {len(src.likelihood)} rows, expected {m}", index=i)
        width = src.signal_count
        if width < 1:
            raise BadStructure(f"source {i} has an empty signal space", index=i)
        for p, row in enumerate(src.likelihood):
            if len(row) != width:
                raise BadStructure(f"source {i} row {p} has the wrong length", index=i)
            for s, value in enumerate(row):
                if value <= 0:
                    raise ZeroLikelihood(
                        f"source {i}: likelihood of signal {s} under state {p} is {value}",
                        index=(i, p, s),
                    )
            if sum(row) != 1:
                raise RowNotNormalized(
                    f"source {i}: row for state {p} sums to {sum(row)}", index=(i, p)
                )
    dmap = DistinguishabilityMap(
        indist=tuple(tuple(indist_set(src, p) for p in range(m)) for src in sources),
        m=m,
    )
    return BldsInstance(
        prior=prior,
        budgets=budgets,
        costs=costs,
        dmap=dmap,
        sources=tuple(sources),
        labels=tuple(labels) if labels else tuple(f"theta{p + 1}" for p in range(m)),
    )


def instance_from_sets(
    indist: Sequence[Sequence[int]],
    costs: Sequence,
    prior: Sequence,
    budgets: Sequence,
    labels: Sequence[str] | None = None,
) -> BldsInstance:
    """Build an instance directly from indistinguishability sets.

    ``indist[i][p]`` must contain ``p``.  The sets need not form a partition;
    such instances are valid for the covering problem but have no likelihood
    model behind them.
    """
    prior = tuple(as_fraction(x) for x in prior)
    budgets = tuple(as_fraction(x) for x in budgets)
    costs = tuple(as_fraction(x) for x in costs)
    m = len(prior)
    _check_common(prior, budgets, costs, m)
    if len(indist) != len(costs):
        raise BadStructure(f"{len(indist)} set families for {len(costs)} costs")
    full = full_mask(m)
    for i, family in enumerate(indist):
        if len(family) != m:
            raise BadStructure(f"source {i} needs {m} sets, got {len(family)}", index=i)
        for p, fset in enumerate(family):
            if not (fset >> p) & 1 or fset & ~full:
                raise BadStructure(
                    f"source {i}: set for state {p} must contain it and stay within range",
                    index=(i, p),
                )
    return BldsInstance(
        prior=prior,
        budgets=budgets,
        costs=costs,
        dmap=DistinguishabilityMap(indist=tuple(tuple(f) for f in indist), m=m),
        labels=tuple(labels) if labels else tuple(f"theta{p + 1}" for p in range(m)),
    )


def instance_from_partitions(
    partitions: Sequence[Sequence[int]],
    costs: Sequence,
    prior: Sequence,
    budgets: Sequence,
) -> BldsInstance:
    """Realize partitions as likelihoods and validate the result."""
    m = len(prior)
    for k, blocks in enumerate(partitions):
        _check_partition(blocks, m, k)
    return validate_instance(realize_likelihoods(partitions, costs), prior, budgets)


def is_partition_structured(dmap: DistinguishabilityMap) -> bool:
    """True when every source's sets are the blocks of a partition."""
    for family in dmap.indist:
        for p, fset in enumerate(family):
            for q in bits(fset):
                if family[q] != fset:
                    return False
    return True
