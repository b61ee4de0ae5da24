"""Random instance generation and the benchmark campaign over error budgets."""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import IO, Iterable

import numpy as np

from blds.bounds import fast_bounds, greedy_bounds
from blds.model import BldsInstance, full_mask, instance_from_partitions, instance_from_sets
from blds.objective import Infeasible, check_solvable
from blds.solvers import (
    MAX_EXACT_SOURCES,
    FastGreedyConfig,
    TooLarge,
    exact_solve,
    fast_greedy_solve,
    greedy_solve,
)

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240521
# Fixed costs are drawn from their own stream so they do not depend on R or index.
_COST_STREAM = 0xC057


@dataclass(frozen=True)
class GenConfig:
    n: int = 10
    m: int = 15
    R: int = 0
    cost_max: int = 10
    count: int = 500
    seed: int = DEFAULT_SEED
    mode: str = "raw"
    include_prob: Fraction = Fraction(1, 2)
    fixed_costs: bool = True
    max_blocks: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need at least one source and one state")
        if not 0 <= self.R < self.m - 1:
            raise ValueError(f"R must satisfy 0 <= R < m - 1, got R={self.R}, m={self.m}")
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.cost_max < 1:
            raise ValueError("cost_max must be positive")
        if self.mode not in ("raw", "realizable"):
            raise ValueError(f"unknown mode {self.mode!r}")
        prob = Fraction(self.include_prob)
        if not 0 <= prob <= 1:
            raise ValueError("include_prob must lie in [0, 1]")
        object.__setattr__(self, "include_prob", prob)


def _costs(cfg: GenConfig, rng: np.random.Generator) -> list[int]:
    if cfg.fixed_costs:
        rng = np.random.default_rng([cfg.seed, _COST_STREAM])
    return [int(c) for c in rng.integers(1, cfg.cost_max + 1, size=cfg.n)]


def random_partition(m: int, rng: np.random.Generator, max_blocks: int | None = None) -> list[int]:
    labels = rng.integers(0, max_blocks or m, size=m)
    blocks: dict[int, int] = {}
    for q, lab in enumerate(labels):
        blocks[int(lab)] = blocks.get(int(lab), 0) | (1 << q)
    return sorted(blocks.values(), key=lambda b: b & -b)


def gen_instance(cfg: GenConfig, index: int, attempt: int = 0) -> BldsInstance:
    """Deterministic random instance for ``(cfg.seed, cfg.R, index, attempt)``.

    Uniform prior ``1/m`` and budgets ``R/m``.  Raw mode draws each
    distinguishable set pairwise with probability ``include_prob`` and
    symmetrizes by union; realizable mode draws a partition per source and
    realizes it with binary likelihoods.
    """
    rng = np.random.default_rng([cfg.seed, cfg.R, index, attempt])
    m, n = cfg.m, cfg.n
    costs = _costs(cfg, rng)
    prior = [Fraction(1, m)] * m
    budgets = [Fraction(cfg.R, m)] * m
    if cfg.mode == "realizable":
        partitions = [random_partition(m, rng, cfg.max_blocks) for _ in range(n)]
        return instance_from_partitions(partitions, costs, prior, budgets)
    full = full_mask(m)
    prob = float(cfg.include_prob)
    indist = []
    for _ in range(n):
        coin = rng.random((m, m)) < prob
        np.fill_diagonal(coin, False)
        sym = coin | coin.T
        family = []
        for p in range(m):
            fc = 0
            for q in np.flatnonzero(sym[p]):
                fc |= 1 << int(q)
            family.append(full & ~fc)
        indist.append(family)
    return instance_from_sets(indist, costs, prior, budgets)


def draw_solvable(cfg: GenConfig, index: int, max_attempts: int = 1000) -> tuple[BldsInstance, int]:
    """First solvable draw for ``index``; also returns the number of redraws."""
    for attempt in range(max_attempts):
        inst = gen_instance(cfg, index, attempt)
        try:
            check_solvable(inst)
        except Infeasible:
            continue
        return inst, attempt
    raise RuntimeError(f"no solvable instance after {max_attempts} draws (index {index})")


def _ratio(h: Fraction, h_opt: Fraction) -> float:
    if h_opt == 0:
        # Nothing to cover: both costs are 0, count it as optimal.
        return 1.0 if h == 0 else float("inf")
    return float(h / h_opt)


@dataclass
class BenchRow:
    R: int
    idx: int
    h_opt: Fraction
    h_greedy: Fraction
    h_fast: Fraction
    ratio_g: float
    ratio_f: float
    full_cover_f: bool
    oracle_g: int
    oracle_f: int
    bound_a: float | None
    bound_b: float | None
    bound_c: float | None
    bound_d: float | None
    fast_a: float | None
    fast_b: float | None
    bound_d_log: float | None
    # exact values kept for checks, not written to CSV
    z_full: Fraction = Fraction(0)
    z_fast: Fraction = Fraction(0)
    greedy_feasible: bool = True
    T_g: int = 0
    T_f: int = 0
    levels_f: int = 0
    kmax: int = 0
    redraws: int = 0


CSV_COLUMNS = [
    "R", "idx", "h_opt", "h_greedy", "h_fast", "ratio_g", "ratio_f", "full_cover_f",
    "oracle_g", "oracle_f", "bound_a", "bound_b", "bound_c", "bound_d", "fast_a", "fast_b",
    "bound_d_log",
]


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    epsilon: Fraction = Fraction(1, 10)
    redraws: dict[int, int] = field(default_factory=dict)

    def R_values(self) -> list[int]:
        return sorted({r.R for r in self.rows})

    def rows_for(self, R: int) -> list[BenchRow]:
        return [r for r in self.rows if r.R == R]

    def aggregates(self) -> list[dict]:
        out = []
        for R in self.R_values():
            rows = self.rows_for(R)
            out.append(
                {
                    "R": R,
                    "count": len(rows),
                    "mean_ratio_g": statistics.fmean(r.ratio_g for r in rows),
                    "mean_ratio_f": statistics.fmean(r.ratio_f for r in rows),
                    "mean_bound_d_log": statistics.fmean(r.bound_d_log for r in rows),
                    "mean_fast_b": statistics.fmean(r.fast_b for r in rows),
                    "full_cover_fraction": sum(r.full_cover_f for r in rows) / len(rows),
                    "redraws": self.redraws.get(R, 0),
                }
            )
        return out


def evaluate_instance(inst: BldsInstance, R: int, idx: int, epsilon: Fraction) -> BenchRow:
    opt = exact_solve(inst)
    sol_g, trace_g = greedy_solve(inst)
    sol_f, trace_f = fast_greedy_solve(inst, FastGreedyConfig(epsilon))
    gb = greedy_bounds(inst, trace_g)
    fb = fast_bounds(inst, trace_f, epsilon)
    return BenchRow(
        R=R,
        idx=idx,
        h_opt=opt.cost,
        h_greedy=sol_g.cost,
        h_fast=sol_f.cost,
        ratio_g=_ratio(sol_g.cost, opt.cost),
        ratio_f=_ratio(sol_f.cost, opt.cost),
        full_cover_f=sol_f.feasible,
        oracle_g=trace_g.oracle_calls,
        oracle_f=trace_f.oracle_calls,
        bound_a=gb.bound_a,
        bound_b=gb.bound_b,
        bound_c=gb.bound_c,
        bound_d=gb.bound_d,
        fast_a=fb.fast_a,
        fast_b=fb.fast_b,
        bound_d_log=gb.bound_d_log,
        z_full=trace_f.z_full,
        z_fast=sol_f.achieved_z,
        greedy_feasible=sol_g.feasible,
        T_g=trace_g.T,
        T_f=trace_f.T,
        levels_f=trace_f.levels,
        kmax=fb.kmax,
    )


def run_benchmark(
    cfg: GenConfig, R_values: Iterable[int], epsilon=Fraction(1, 10), progress=None
) -> BenchReport:
    """Generate ``cfg.count`` solvable instances per budget level and evaluate each.

    Infeasible draws are replaced by the next substream for the same index.
    """
    if cfg.n > MAX_EXACT_SOURCES:
        raise TooLarge(f"benchmark needs exact optima; n must be <= {MAX_EXACT_SOURCES}")
    epsilon = Fraction(epsilon)
    report = BenchReport(epsilon=epsilon)
    for R in R_values:
        cfg_R = replace(cfg, R=R)
        redraws = 0
        for idx in range(cfg.count):
            inst, extra = draw_solvable(cfg_R, idx)
            redraws += extra
            row = evaluate_instance(inst, R, idx, epsilon)
            row.redraws = extra
            report.rows.append(row)
            if progress:
                progress(R, idx)
        report.redraws[R] = redraws
        if redraws:
            log.info("R=%d: %d infeasible draws replaced", R, redraws)
    return report


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_csv(report: BenchReport, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([_cell(getattr(row, c)) for c in CSV_COLUMNS])


def write_aggregates_csv(report: BenchReport, fh: IO[str]) -> None:
    aggs = report.aggregates()
    if not aggs:
        return
    writer = csv.DictWriter(fh, fieldnames=list(aggs[0]), lineterminator="\n")
    writer.writeheader()
    for a in aggs:
        writer.writerow({k: _cell(v) for k, v in a.items()})
