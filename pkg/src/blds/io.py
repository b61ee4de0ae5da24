"""JSON and CSV formats for instances, solutions, set-cover inputs and trajectories.

Rationals are written as ``"p/q"`` or ``"p"`` strings.  State and source
indices are 0-based.

Instance JSON, likelihood form::

    {"m": 3, "n": 2, "prior": ["1/3", ...], "budgets": ["0", ...],
     "sources": [{"cost": "2", "signals": 2, "rows": [["1/2", "1/2"], ...]}]}

Instance JSON, set form (no likelihoods; one entry per source)::

    {"m": 3, "n": 2, "prior": [...], "budgets": [...],
     "fc_sets": [{"cost": "2", "blocks": [[0, 2], [1]]},
                 {"cost": "1", "distinguishable": [[2], [2], [0, 1]]}]}

``blocks`` is a partition of the states and is realized as binary likelihoods;
``distinguishable`` lists, for every state, the states the source separates
from it, and yields an instance that can be optimized but not simulated.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path
from typing import IO

from blds.model import (
    BadStructure,
    BldsInstance,
    Source,
    as_fraction,
    bits,
    full_mask,
    instance_from_partitions,
    instance_from_sets,
    mask_of,
    validate_instance,
)
from blds.solvers import SetCoverInstance, Solution, SolveTrace


def _fr(values) -> list[str]:
    return [str(Fraction(v)) for v in values]


def instance_from_dict(data: dict) -> BldsInstance:
    prior = [as_fraction(x) for x in data["prior"]]
    budgets = [as_fraction(x) for x in data["budgets"]]
    m = len(prior)
    if "m" in data and data["m"] != m:
        raise BadStructure(f"m = {data['m']} but prior has {m} entries")
    labels = data.get("labels")
    if "sources" in data:
        sources = [Source.from_rows(s["rows"], s["cost"]) for s in data["sources"]]
        for i, (spec, src) in enumerate(zip(data["sources"], sources)):
            if "signals" in spec and spec["signals"] != src.signal_count:
                raise BadStructure(f"source {i} declares {spec['signals']} signals", index=i)
        inst = validate_instance(sources, prior, budgets, labels)
    elif "fc_sets" in data:
        entries = data["fc_sets"]
        costs = [e["cost"] for e in entries]
        if all("blocks" in e for e in entries):
            partitions = [[mask_of(b) for b in e["blocks"]] for e in entries]
            inst = instance_from_partitions(partitions, costs, prior, budgets)
        else:
            full = full_mask(m)
            indist = []
            for i, e in enumerate(entries):
                if "distinguishable" in e:
                    indist.append([full & ~mask_of(fc) for fc in e["distinguishable"]])
                elif "blocks" in e:
                    family = [0] * m
                    for block in e["blocks"]:
                        for q in block:
                            family[q] = mask_of(block)
                    indist.append(family)
                else:
                    raise BadStructure("fc_sets entries need 'blocks' or 'distinguishable'", index=i)
            inst = instance_from_sets(indist, costs, prior, budgets, labels)
    else:
        raise BadStructure("instance needs 'sources' or 'fc_sets'")
    if "n" in data and data["n"] != inst.n:
        raise BadStructure(f"n = {data['n']} but {inst.n} sources are given")
    return inst


def instance_to_dict(inst: BldsInstance) -> dict:
    out = {
        "m": inst.m,
        "n": inst.n,
        "prior": _fr(inst.prior),
        "budgets": _fr(inst.budgets),
    }
    if inst.has_likelihoods:
        out["sources"] = [
            {"cost": str(s.cost), "signals": s.signal_count, "rows": [_fr(r) for r in s.likelihood]}
            for s in inst.sources
        ]
    else:
        full = full_mask(inst.m)
        out["fc_sets"] = [
            {
                "cost": str(inst.costs[i]),
                "distinguishable": [bits(full & ~f) for f in family],
            }
            for i, family in enumerate(inst.dmap.indist)
        ]
    return out


def load_instance(path) -> BldsInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def dump_instance(inst: BldsInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def setcover_from_dict(data: dict) -> SetCoverInstance:
    return SetCoverInstance(
        universe_size=int(data["d"]), subsets=tuple(mask_of(s) for s in data["subsets"])
    )


def load_setcover(path) -> SetCoverInstance:
    with open(path) as fh:
        return setcover_from_dict(json.load(fh))


def trace_to_dict(trace: SolveTrace) -> dict:
    return {
        "T": trace.T,
        "oracle_calls": trace.oracle_calls,
        "levels": trace.levels,
        "picks": [
            {
                "t": p.t,
                "source": p.source,
                "gain": str(p.gain),
                "z_after": str(p.z_after),
                **({"level": p.level} if p.level is not None else {}),
            }
            for p in trace.picks
        ],
    }


def solution_to_dict(solution: Solution, trace: SolveTrace | None = None, bounds=None) -> dict:
    out = {
        "selected": solution.indices,
        "cost": str(solution.cost),
        "achieved_z": str(solution.achieved_z),
        "feasible": solution.feasible,
    }
    if trace is not None:
        out["order"] = [p.source for p in trace.picks]
        out["z_full"] = str(trace.z_full)
        out["trace"] = trace_to_dict(trace)
    if bounds is not None:
        out["bounds"] = bounds.to_dict()
    return out


def write_trajectory_csv(trajectory, labels, fh: IO[str]) -> None:
    """One row per step (per agent for network runs) after a ``#`` JSON header."""
    meta = {
        "seed": trajectory.seed,
        "selected": bits(trajectory.selected),
        "true_state": trajectory.true_state,
    }
    fh.write("# " + json.dumps(meta) + "\n")
    writer = csv.writer(fh, lineterminator="\n")
    beliefs = trajectory.beliefs
    if beliefs.ndim == 2:
        writer.writerow(["step", *labels])
        for k, row in enumerate(beliefs):
            writer.writerow([k, *(repr(float(x)) for x in row)])
    else:
        writer.writerow(["step", "agent", *labels])
        for k, agents in enumerate(beliefs):
            for i, row in enumerate(agents):
                writer.writerow([k, i, *(repr(float(x)) for x in row)])


def network_from_dict(data: dict):
    from blds.simulate import AgentNetwork

    sources = [Source.from_rows(s["rows"], s.get("cost", 1)) for s in data["sources"]]
    return AgentNetwork.build(data["weights"], sources, data["priors"])
