#!/usr/bin/env python3
"""Timing comparison of the pure Python and compiled engine lanes.

Measures the simulation event loop across instance sizes and the exhaustive
solver's forced-order evaluator, printing best-of-N wall times per lane and
the resulting speedup.  Both lanes produce bit-identical results; this script
only quantifies the performance gap.
"""

import argparse
import os
import time

from dagsched import engine, oracle, simulate
from dagsched.generate import GeneratorParams, generate_instance
from dagsched.partition import make_partition
from dagsched.sched import DEFAULT_MSR_WEIGHTS, compute_pct


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_simulation(sizes, repeats):
    rows = []
    for n in sizes:
        graph, cluster = generate_instance(GeneratorParams(
            vertices=n, avg_degree=1.65, devices=50, seed=1))
        partition = make_partition("critical_path", graph, cluster)

        def once(backend):
            simulate.run(graph, cluster, partition, "pct", backend=backend)

        pure = best_of(lambda: once("pure"), repeats)
        compiled = (best_of(lambda: once("compiled"), repeats)
                    if engine.HAVE_COMPILED else None)
        rows.append((f"simulate end to end, {n} vertices", pure, compiled))

        # The lane entry points alone, without the shared report stage.
        pct = compute_pct(graph, cluster, partition)
        loop_pure = best_of(
            lambda: simulate._run_reference(graph, cluster, partition, "pct",
                                            DEFAULT_MSR_WEIGHTS, 0, pct),
            repeats)
        loop_compiled = (best_of(
            lambda: simulate._run_compiled(graph, cluster, partition, "pct",
                                           DEFAULT_MSR_WEIGHTS, 0, pct),
            repeats) if engine.HAVE_COMPILED else None)
        rows.append((f"event loop only, {n} vertices", loop_pure,
                     loop_compiled))
    return rows


def bench_solver(repeats):
    graph, cluster = generate_instance(GeneratorParams(
        vertices=7, avg_degree=1.4, devices=3, seed=2))

    def once(backend):
        previous = os.environ.get("DAGSCHED_BACKEND")
        os.environ["DAGSCHED_BACKEND"] = backend
        try:
            oracle.optimal(graph, cluster)
        finally:
            if previous is None:
                del os.environ["DAGSCHED_BACKEND"]
            else:
                os.environ["DAGSCHED_BACKEND"] = previous

    pure = best_of(lambda: once("pure"), repeats)
    compiled = (best_of(lambda: once("compiled"), repeats)
                if engine.HAVE_COMPILED else None)
    return [("exhaustive solve, 7 vertices", pure, compiled)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,2000,5000",
                        help="comma-separated simulation sizes")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions per measurement; best is kept")
    args = parser.parse_args()
    sizes = [int(tok) for tok in args.sizes.split(",") if tok]

    if not engine.HAVE_COMPILED:
        print("compiled extension not built; timing the pure lane only\n")

    rows = bench_simulation(sizes, args.repeats) + bench_solver(args.repeats)
    width = max(len(label) for label, _, _ in rows) + 2
    print(f"{'task':<{width}}{'pure':>12}{'compiled':>12}{'speedup':>10}")
    for label, pure, compiled in rows:
        if compiled is None:
            print(f"{label:<{width}}{pure:>11.4f}s{'n/a':>12}{'n/a':>10}")
        else:
            print(f"{label:<{width}}{pure:>11.4f}s{compiled:>11.4f}s"
                  f"{pure / compiled:>9.1f}x")


if __name__ == "__main__":
    main()
