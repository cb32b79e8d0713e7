"""Command line front end.

Subcommands: ``gen`` writes a synthetic instance, ``validate`` checks a file,
``partition`` assigns vertices to devices, ``simulate`` replays an assignment
under a scheduling policy, ``compare`` runs the strategy matrix into CSVs and
``oracle`` exhaustively solves small instances.  Machine-readable output goes
to files; a short human summary goes to standard output.
"""

from __future__ import annotations

import sys

import click

from . import experiment, generate, instance_io, oracle, partition, simulate
from .constraints import build_groups, validate_solution
from .errors import DagschedError
from .graph import validate_dag
from .sched import DEFAULT_MSR_WEIGHTS, POLICIES, MsrWeights


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _parse_range(text: str, name: str):
    parts = text.split(",")
    if len(parts) != 2:
        _fail(f"{name} must be 'lo,hi'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        _fail(f"{name} must be numeric: {text!r}")


def _parse_weights(text: str) -> MsrWeights:
    parts = text.split(",")
    if len(parts) != 4:
        _fail("--msr-weights must be 'a,b,g,d'")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        _fail(f"--msr-weights must be numeric: {text!r}")
    return MsrWeights(*values)


def _parse_names(text: str, known: tuple, kind: str) -> tuple:
    names = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not names:
        _fail(f"no {kind} given")
    for name in names:
        if name not in known:
            _fail(f"unknown {kind} '{name}' (choose from {', '.join(known)})")
    return names


@click.group()
def main():
    """Partitioning and scheduling workbench for dataflow graphs."""


@main.command()
@click.option("--vertices", default=100, show_default=True, type=int)
@click.option("--avg-degree", default=1.65, show_default=True, type=float)
@click.option("--cost-range", default="1,100", show_default=True)
@click.option("--volume-range", default="1,100", show_default=True)
@click.option("--colocation-fraction", default=0.2, show_default=True,
              type=float)
@click.option("--devices", default=50, show_default=True, type=int)
@click.option("--speed-range", default="10,100", show_default=True)
@click.option("--bandwidth-range", default="10,60", show_default=True)
@click.option("--memory-range", default="10000,50000", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def gen(vertices, avg_degree, cost_range, volume_range, colocation_fraction,
        devices, speed_range, bandwidth_range, memory_range, seed, out):
    """Generate a random layered instance and write it to a file."""
    params = generate.GeneratorParams(
        vertices=vertices, avg_degree=avg_degree,
        cost_range=_parse_range(cost_range, "--cost-range"),
        volume_range=_parse_range(volume_range, "--volume-range"),
        colocation_fraction=colocation_fraction, devices=devices,
        speed_range=_parse_range(speed_range, "--speed-range"),
        bandwidth_range=_parse_range(bandwidth_range, "--bandwidth-range"),
        memory_range=_parse_range(memory_range, "--memory-range"), seed=seed)
    try:
        graph, cluster = generate.generate_instance(params)
    except (DagschedError, ValueError) as exc:
        _fail(str(exc))
    instance_io.save_instance(graph, cluster, out)
    groups = build_groups(graph)
    grouped = sum(len(m) for m in groups.members.values() if len(m) > 1)
    click.echo(f"wrote {out}: {len(graph.vertices)} vertices, "
               f"{len(graph.edges)} edges, {grouped} collocated vertices, "
               f"{len(cluster.devices)} devices")


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
def validate(instance):
    """Check an instance file and report violations."""
    try:
        graph, cluster = instance_io.load_instance(instance)
    except DagschedError as exc:
        _fail(str(exc))
    problems = validate_dag(graph)
    if problems:
        for problem in problems:
            click.echo(f"violation: {problem}")
        sys.exit(1)
    click.echo(f"ok: {len(graph.vertices)} vertices, {len(graph.edges)} "
               f"edges, {len(cluster.devices)} devices")


@main.command("partition")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", required=True,
              type=click.Choice(partition.PARTITIONERS))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def partition_cmd(instance, strategy, seed, out):
    """Assign vertices to devices with one strategy."""
    try:
        graph, cluster = instance_io.load_instance(instance)
        result = partition.make_partition(strategy, graph, cluster, seed=seed)
    except (DagschedError, ValueError) as exc:
        _fail(str(exc))
    instance_io.save_assignment(result, out)
    used = len(set(result.assignment.values()))
    click.echo(f"wrote {out}: strategy {strategy}, "
               f"{len(result.assignment)} vertices on {used} devices")


@main.command("simulate")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--assignment", "assignment_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", required=True, type=click.Choice(POLICIES))
@click.option("--msr-weights", default="1,1,1,5", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Trace file to write.")
def simulate_cmd(instance, assignment_path, policy, msr_weights, seed, out):
    """Simulate an assignment under a scheduling policy."""
    weights = _parse_weights(msr_weights)
    try:
        graph, cluster = instance_io.load_instance(instance)
        assignment = instance_io.load_assignment(assignment_path)
        trace, report = simulate.run(graph, cluster, assignment, policy,
                                     policy_params=weights, seed=seed)
    except (DagschedError, ValueError) as exc:
        _fail(str(exc))
    if out is not None:
        instance_io.write_trace(trace, out)
        click.echo(f"wrote {out}")
    click.echo(f"makespan {report.makespan!r}")
    mean_util = (sum(report.utilization.values()) / len(report.utilization)
                 if report.utilization else 0.0)
    click.echo(f"mean utilization {mean_util!r}")
    click.echo(f"memory violations {len(report.memory_violations)}")
    problems = validate_solution(graph, cluster, assignment, trace)
    hard = [p for p in problems if not p.startswith("memory")]
    if hard:
        _fail("invalid schedule: " + "; ".join(hard))


@main.command()
@click.argument("instance", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--vertices", default=100, show_default=True, type=int,
              help="Generated size when no instance file is given.")
@click.option("--avg-degree", default=1.65, show_default=True, type=float)
@click.option("--devices", default=50, show_default=True, type=int)
@click.option("--gen-seed", default=0, show_default=True, type=int,
              help="Seed for the generated instance.")
@click.option("--partitioners", default=",".join(partition.PARTITIONERS),
              show_default=True)
@click.option("--schedulers", default=",".join(POLICIES), show_default=True)
@click.option("--repetitions", default=10, show_default=True, type=int)
@click.option("--msr-weights", default="1,1,1,5", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int,
              help="Base seed; repetition r uses seed + r.")
@click.option("--out", required=True,
              help="Prefix for <prefix>_runs.csv and <prefix>_summary.csv.")
def compare(instance, vertices, avg_degree, devices, gen_seed, partitioners,
            schedulers, repetitions, msr_weights, seed, out):
    """Run the strategy matrix on an instance and write result CSVs."""
    spec = experiment.ExperimentSpec(
        partitioners=_parse_names(partitioners, partition.PARTITIONERS,
                                  "partitioning strategy"),
        schedulers=_parse_names(schedulers, POLICIES, "scheduling policy"),
        repetitions=repetitions, seed_base=seed,
        msr_weights=_parse_weights(msr_weights))
    try:
        if instance is not None:
            graph, cluster = instance_io.load_instance(instance)
        else:
            graph, cluster = generate.generate_instance(
                generate.GeneratorParams(vertices=vertices,
                                         avg_degree=avg_degree,
                                         devices=devices, seed=gen_seed))
        result = experiment.run_experiment(graph, cluster, spec)
    except (DagschedError, ValueError) as exc:
        _fail(str(exc))
    runs_path, summary_path = result.write(out)
    click.echo(f"wrote {runs_path} and {summary_path}")
    width = max(len(s.partitioner) for s in result.stats) + 2
    for s in result.stats:
        mean = f"{s.mean_makespan:.3f}" if s.mean_makespan == s.mean_makespan \
            else "n/a"
        click.echo(f"{s.partitioner:<{width}}{s.scheduler:<6} "
                   f"mean makespan {mean} ({s.failures} failures)")


@main.command("oracle")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--limit", default=8, show_default=True, type=int,
              help="Largest vertex count the exhaustive search accepts.")
@click.option("--device-limit", default=3, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Optional assignment file for the optimal partition.")
def oracle_cmd(instance, limit, device_limit, out):
    """Exhaustively compute the optimal makespan of a small instance."""
    try:
        graph, cluster = instance_io.load_instance(instance)
        best = oracle.optimal(graph, cluster, limit=limit,
                              device_limit=device_limit)
    except (DagschedError, ValueError) as exc:
        _fail(str(exc))
    click.echo(f"optimal makespan {best.makespan!r}")
    click.echo(f"searched {best.assignments_tried} assignments, "
               f"{best.schedules_tried} schedules")
    if out is not None:
        instance_io.save_assignment(best.partition, out)
        click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
