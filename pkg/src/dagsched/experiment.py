"""Experiment matrix runner and CSV emission.

Runs every requested (partitioner, scheduler) combination for a number of
repetitions, collecting one raw row per successful run and one aggregate row
per combination.  Repetition ``r`` uses seed ``seed_base + r`` for both the
partitioner and the scheduler, so randomized strategies vary across
repetitions while deterministic ones repeat identically.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Optional

from . import simulate
from .cluster import DeviceCluster
from .constraints import build_groups
from .errors import InfeasibleInstanceError
from .graph import DataflowGraph
from .partition import PARTITIONERS, make_partition
from .sched import DEFAULT_MSR_WEIGHTS, POLICIES, MsrWeights

RUNS_HEADER = ("partitioner,scheduler,repetition,seed,makespan,"
               "peak_memory_violations,mean_utilization")
SUMMARY_HEADER = ("partitioner,scheduler,repetitions,failures,mean_makespan,"
                  "std_makespan,mean_utilization")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: which strategies to cross and how often to repeat."""

    partitioners: tuple = PARTITIONERS
    schedulers: tuple = POLICIES
    repetitions: int = 10
    seed_base: int = 0
    msr_weights: MsrWeights = DEFAULT_MSR_WEIGHTS

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        for name in self.partitioners:
            if name not in PARTITIONERS:
                raise ValueError(f"unknown partitioning strategy '{name}'")
        for name in self.schedulers:
            if name not in POLICIES:
                raise ValueError(f"unknown scheduling policy '{name}'")


@dataclass(frozen=True)
class RunRow:
    """One simulated run of one strategy combination."""

    partitioner: str
    scheduler: str
    repetition: int
    seed: int
    makespan: float
    peak_memory_violations: int
    mean_utilization: float


@dataclass(frozen=True)
class CombinationStats:
    """Aggregates over the repetitions of one strategy combination."""

    partitioner: str
    scheduler: str
    repetitions: int
    failures: int
    mean_makespan: float
    std_makespan: float
    mean_utilization: float


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple = field(default_factory=tuple)
    stats: tuple = field(default_factory=tuple)

    def runs_csv(self) -> str:
        lines = [RUNS_HEADER]
        for r in self.rows:
            lines.append(f"{r.partitioner},{r.scheduler},{r.repetition},"
                         f"{r.seed},{r.makespan!r},{r.peak_memory_violations},"
                         f"{r.mean_utilization!r}")
        return "\n".join(lines) + "\n"

    def summary_csv(self) -> str:
        lines = [SUMMARY_HEADER]
        for s in self.stats:
            lines.append(f"{s.partitioner},{s.scheduler},{s.repetitions},"
                         f"{s.failures},{s.mean_makespan!r},"
                         f"{s.std_makespan!r},{s.mean_utilization!r}")
        return "\n".join(lines) + "\n"

    def write(self, prefix) -> tuple:
        """Write ``<prefix>_runs.csv`` and ``<prefix>_summary.csv``."""
        runs_path = f"{prefix}_runs.csv"
        summary_path = f"{prefix}_summary.csv"
        with open(runs_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.runs_csv())
        with open(summary_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.summary_csv())
        return runs_path, summary_path


def run_experiment(graph: DataflowGraph, cluster: DeviceCluster,
                   spec: ExperimentSpec,
                   backend: Optional[str] = None) -> ExperimentResult:
    """Run the full strategy matrix on one instance.

    An infeasible combination is recorded as failed repetitions rather than
    aborting the experiment.  Output order is fixed by (partitioner,
    scheduler, repetition) and the result is reproducible bit for bit from
    ``spec`` and the seed base.
    """
    groups = build_groups(graph)
    partitions = {}
    rows = []
    stats = []
    for pname in spec.partitioners:
        for sname in spec.schedulers:
            makespans = []
            utilizations = []
            failures = 0
            for rep in range(spec.repetitions):
                seed = spec.seed_base + rep
                key = (pname, seed if pname == "hash" else None)
                try:
                    if key not in partitions:
                        partitions[key] = make_partition(
                            pname, graph, cluster, groups, seed=seed)
                    partition = partitions[key]
                except InfeasibleInstanceError:
                    partitions[key] = None
                    failures += 1
                    continue
                if partition is None:
                    failures += 1
                    continue
                _, report = simulate.run(
                    graph, cluster, partition, sname,
                    policy_params=spec.msr_weights, seed=seed,
                    backend=backend)
                run_util = statistics.fmean(report.utilization.values())
                makespans.append(report.makespan)
                utilizations.append(run_util)
                rows.append(RunRow(
                    partitioner=pname, scheduler=sname, repetition=rep,
                    seed=seed, makespan=report.makespan,
                    peak_memory_violations=len(report.memory_violations),
                    mean_utilization=run_util))
            if makespans:
                mean_mk = statistics.fmean(makespans)
                std_mk = statistics.pstdev(makespans)
                mean_ut = statistics.fmean(utilizations)
            else:
                mean_mk = std_mk = mean_ut = float("nan")
            stats.append(CombinationStats(
                partitioner=pname, scheduler=sname,
                repetitions=spec.repetitions, failures=failures,
                mean_makespan=mean_mk, std_makespan=std_mk,
                mean_utilization=mean_ut))
    return ExperimentResult(rows=tuple(rows), stats=tuple(stats))
