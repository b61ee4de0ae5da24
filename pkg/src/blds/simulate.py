"""Belief simulations for centralized Bayes and the distributed pooling rule.

Beliefs are float arrays; updates run in log space so that states being ruled
out decay towards zero without underflow.  Observations are drawn with a
seeded PCG64 generator by inverse CDF over each exact likelihood row.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from blds.model import (
    BldsInstance,
    DistinguishabilityMap,
    Source,
    as_fraction,
    bits,
    indist_intersection,
    indist_set,
    validate_instance,
)


class BadMatrix(ValueError):
    pass


class NotConverged(RuntimeError):
    pass


@dataclass
class BeliefTrajectory:
    """``beliefs[k]`` is the belief after ``k`` observations.

    Shape ``(steps + 1, m)`` for a single learner, ``(steps + 1, n, m)`` for a
    network of agents.
    """

    beliefs: np.ndarray
    true_state: int
    selected: int
    seed: int

    @property
    def final(self) -> np.ndarray:
        return self.beliefs[-1]


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    residual: float
    iterations: int


def _log_table(source: Source) -> np.ndarray:
    # rows: states, columns: signals
    return np.log(np.array([[float(x) for x in row] for row in source.likelihood]))


def _cdf(row: Sequence[Fraction]) -> np.ndarray:
    """Interior breakpoints of the exact cumulative distribution, as floats."""
    acc = Fraction(0)
    out = []
    for x in row[:-1]:
        acc += x
        out.append(float(acc))
    return np.array(out)


def sample_signals(source: Source, state: int, steps: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(steps)
    return np.searchsorted(_cdf(source.likelihood[state]), u, side="right")


def _normalize_log(logb: np.ndarray) -> np.ndarray:
    shift = np.max(logb, axis=-1, keepdims=True)
    w = np.exp(logb - shift)
    return w / w.sum(axis=-1, keepdims=True)


def bayes_step(belief, inst: BldsInstance, selected: int, observation: Sequence[int]):
    """One recursive Bayes update with the selected sources' joint signal.

    ``observation`` lists one signal per selected source, in increasing source
    order.  A belief of Fractions is updated exactly; anything else is treated
    as floats.
    """
    chosen = bits(selected)
    if len(observation) != len(chosen):
        raise ValueError(f"expected {len(chosen)} signals, got {len(observation)}")
    if belief and isinstance(belief[0], Fraction):
        weights = list(belief)
        for i, s in zip(chosen, observation):
            src = inst.sources[i]
            weights = [w * src.likelihood[p][s] for p, w in enumerate(weights)]
        total = sum(weights)
        return [w / total for w in weights]
    b = np.asarray(belief, dtype=float)
    with np.errstate(divide="ignore"):
        logb = np.log(b)
    for i, s in zip(chosen, observation):
        logb = logb + _log_table(inst.sources[i])[:, s]
    return _normalize_log(logb)


def run_bayes(
    inst: BldsInstance, selected: int, true_state: int, steps: int, seed: int
) -> BeliefTrajectory:
    """Simulate ``steps`` i.i.d. observations from ``true_state`` and track beliefs.

    Uses the unrolled form: log prior plus cumulative log-likelihood, normalized
    at every step.
    """
    if not inst.has_likelihoods:
        raise ValueError("instance has no likelihood model to simulate")
    rng = np.random.default_rng(seed)
    logp = np.log(np.array([float(x) for x in inst.prior]))
    increments = np.zeros((steps, inst.m))
    for i in bits(selected):
        src = inst.sources[i]
        signals = sample_signals(src, true_state, steps, rng)
        increments += _log_table(src)[:, signals].T
    cumulative = np.vstack([np.zeros((1, inst.m)), np.cumsum(increments, axis=0)])
    beliefs = _normalize_log(logp + cumulative)
    return BeliefTrajectory(beliefs=beliefs, true_state=true_state, selected=selected, seed=seed)


def limit_belief(inst: BldsInstance, selected: int, true_state: int) -> list[Fraction]:
    """Almost-sure limit: prior renormalized on the states indistinguishable from the truth."""
    fset = indist_intersection(inst.dmap, selected, true_state)
    mass = sum((inst.prior[q] for q in bits(fset)), Fraction(0))
    return [inst.prior[q] / mass if (fset >> q) & 1 else Fraction(0) for q in range(inst.m)]


def empirical_error(trajectory: BeliefTrajectory, true_state: int) -> float:
    final = np.asarray(trajectory.final, dtype=float)
    if final.ndim != 1:
        raise ValueError("use per-agent beliefs for network trajectories")
    target = np.zeros_like(final)
    target[true_state] = 1.0
    return 0.5 * float(np.abs(final - target).sum())


@dataclass(frozen=True)
class AgentNetwork:
    """Agents with one data source each, pooling beliefs with weights ``A``.

    ``weights[i][j] > 0`` means agent ``i`` listens to agent ``j``.
    """

    weights: tuple[tuple[Fraction, ...], ...]
    sources: tuple[Source, ...]
    priors: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        A = self.weights
        n = len(A)
        if n == 0 or any(len(row) != n for row in A):
            raise BadMatrix("weight matrix must be square and nonempty")
        for i, row in enumerate(A):
            if any(a < 0 for a in row) or sum(row) != 1:
                raise BadMatrix(f"row {i} is not a probability vector")
            if row[i] <= 0:
                raise BadMatrix(f"agent {i} must put positive weight on itself")
        if not strongly_connected(A):
            raise BadMatrix("communication graph is not strongly connected")
        if len(self.sources) != n or len(self.priors) != n:
            raise BadMatrix("need one source and one prior per agent")
        m = len(self.priors[0])
        for i, mu in enumerate(self.priors):
            if len(mu) != m or any(x <= 0 for x in mu) or sum(mu) != 1:
                raise BadMatrix(f"prior of agent {i} must be positive and sum to 1")
        for i, src in enumerate(self.sources):
            if len(src.likelihood) != m:
                raise BadMatrix(f"source of agent {i} has the wrong number of states")

    @classmethod
    def build(cls, weights, sources, priors) -> "AgentNetwork":
        return cls(
            weights=tuple(tuple(as_fraction(a) for a in row) for row in weights),
            sources=tuple(sources),
            priors=tuple(tuple(as_fraction(x) for x in mu) for mu in priors),
        )

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def m(self) -> int:
        return len(self.priors[0])

    @property
    def dmap(self) -> DistinguishabilityMap:
        return DistinguishabilityMap(
            indist=tuple(tuple(indist_set(s, p) for p in range(self.m)) for s in self.sources),
            m=self.m,
        )

    def matrix(self) -> np.ndarray:
        return np.array([[float(a) for a in row] for row in self.weights])


def strongly_connected(A) -> bool:
    n = len(A)

    def reach(forward: bool) -> int:
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in range(n):
                edge = A[v][u] if forward else A[u][v]
                if edge > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen)

    return reach(True) == n and reach(False) == n


def stationary_distribution(A, tol: float = 1e-14, max_iter: int = 1_000_000) -> StationaryDistribution:
    """Left Perron vector of a row-stochastic, irreducible, aperiodic matrix.

    Power iteration on ``pi <- pi A`` until the L1 residual drops to ``tol``.
    """
    if isinstance(A, AgentNetwork):
        A = A.weights
    rows = [list(r) for r in A]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise BadMatrix("weight matrix must be square")
    for i, r in enumerate(rows):
        if any(a < 0 for a in r) or abs(float(sum(r)) - 1) > 1e-12:
            raise BadMatrix(f"row {i} is not a probability vector")
        if r[i] <= 0:
            raise BadMatrix(f"diagonal entry {i} must be positive")
    if not strongly_connected(rows):
        raise BadMatrix("matrix is reducible")
    M = np.array([[float(a) for a in r] for r in rows])
    pi = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        nxt = pi @ M
        nxt /= nxt.sum()
        residual = float(np.abs(nxt @ M - nxt).sum())
        pi = nxt
        if residual <= tol:
            return StationaryDistribution(pi=pi, residual=residual, iterations=it)
    raise NotConverged(f"residual {residual:.3e} after {max_iter} iterations")


def _flat_table(source: Source) -> np.ndarray:
    return np.full((len(source.likelihood), source.signal_count), -np.log(source.signal_count))


def _agent_tables(network: AgentNetwork, selected: int) -> list[np.ndarray]:
    return [
        _log_table(src) if (selected >> i) & 1 else _flat_table(src)
        for i, src in enumerate(network.sources)
    ]


def _logsumexp_rows(logb: np.ndarray) -> np.ndarray:
    shift = logb.max(axis=1, keepdims=True)
    return shift + np.log(np.exp(logb - shift).sum(axis=1, keepdims=True))


def _pool_log(A: np.ndarray, logb: np.ndarray, tables, observations) -> np.ndarray:
    """Normalized log beliefs after pooling and the local likelihood update."""
    pooled = A @ logb
    for i, s in enumerate(observations):
        pooled[i] += tables[i][:, s]
    return pooled - _logsumexp_rows(pooled)


def nonbayes_step(network: AgentNetwork, selected: int, beliefs, observations: Sequence[int]) -> np.ndarray:
    """One step of geometric pooling followed by each agent's local update.

    Agents outside ``selected`` use a flat likelihood, so their own signal has
    no effect; ``observations`` still needs one entry per agent.
    """
    b = np.asarray(beliefs, dtype=float)
    logb = _pool_log(network.matrix(), np.log(b), _agent_tables(network, selected), observations)
    return _normalize_log(logb)


def run_nonbayes(
    network: AgentNetwork, selected: int, true_state: int, steps: int, seed: int
) -> BeliefTrajectory:
    rng = np.random.default_rng(seed)
    n, m = network.n, network.m
    A = network.matrix()
    tables = _agent_tables(network, selected)
    signals = np.zeros((steps, n), dtype=int)
    for i in bits(selected):
        signals[:, i] = sample_signals(network.sources[i], true_state, steps, rng)
    logb = np.log(np.array([[float(x) for x in mu] for mu in network.priors]))
    out = np.empty((steps + 1, n, m))
    out[0] = _normalize_log(logb)
    for k in range(steps):
        logb = _pool_log(A, logb, tables, signals[k])
        out[k + 1] = _normalize_log(logb)
    return BeliefTrajectory(beliefs=out, true_state=true_state, selected=selected, seed=seed)


def pooled_prior(network: AgentNetwork, pi: np.ndarray | None = None) -> np.ndarray:
    """Unnormalized ``prod_j mu_{j,0}(theta)^{pi_j}`` for every state."""
    if pi is None:
        pi = stationary_distribution(network.weights).pi
    logs = np.log(np.array([[float(x) for x in mu] for mu in network.priors]))
    return np.exp(pi @ logs)


def nonbayes_limit(network: AgentNetwork, selected: int, true_state: int) -> np.ndarray:
    """Common limiting belief of every agent."""
    weights = pooled_prior(network)
    fset = indist_intersection(network.dmap, selected, true_state)
    mask = np.array([(fset >> q) & 1 for q in range(network.m)], dtype=bool)
    out = np.where(mask, weights, 0.0)
    return out / out.sum()


def nonbayes_error(network: AgentNetwork, selected: int, p: int) -> float:
    """Sum over agents of the limiting error when ``p`` is the true state."""
    limit = nonbayes_limit(network, selected, p)
    return network.n * (1 - float(limit[p]))


def surrogate_instance(network: AgentNetwork, budgets: Sequence, precision: int = 10**12) -> BldsInstance:
    """Single-learner instance with the normalized pooled prior.

    The pooled prior is irrational in general; it is rounded to rationals with
    denominators up to ``precision`` and the last entry absorbs the remainder.
    """
    weights = pooled_prior(network)
    weights = weights / weights.sum()
    prior = [Fraction(float(w)).limit_denominator(precision) for w in weights[:-1]]
    prior.append(1 - sum(prior))
    return validate_instance(list(network.sources), prior, budgets)


def consensus_gap(beliefs: np.ndarray) -> float:
    """Largest L1 distance between any two agents' belief vectors."""
    b = np.asarray(beliefs)
    diff = np.abs(b[:, None, :] - b[None, :, :]).sum(axis=-1)
    return float(diff.max())


def network_limit_error(trajectory: BeliefTrajectory, limit: np.ndarray) -> np.ndarray:
    """Per-agent L1 distance between the final beliefs and ``limit``."""
    return np.abs(trajectory.final - limit[None, :]).sum(axis=-1)
