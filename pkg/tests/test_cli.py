"""Command line behaviour via click's test runner."""

import pytest
from click.testing import CliRunner

from dagsched.cli import main
from dagsched.instance_io import (
    load_assignment,
    load_instance,
    save_assignment,
    save_instance,
)
from dagsched.partition import Partition

from conftest import build_cluster, build_diamond


@pytest.fixture()
def runner():
    return CliRunner()


def all_output(result) -> str:
    text = result.output
    try:
        text += result.stderr
    except ValueError:
        pass
    return text


@pytest.fixture()
def instance_file(tmp_path):
    path = tmp_path / "inst.txt"
    graph = build_diamond()
    cluster = build_cluster([2.0, 1.0], memories=[100.0, 100.0])
    save_instance(graph, cluster, path)
    return str(path)


class TestGen:
    def test_writes_instance(self, runner, tmp_path):
        out = str(tmp_path / "gen.txt")
        result = runner.invoke(main, ["gen", "--vertices", "30", "--devices",
                                      "3", "--seed", "1", "--out", out])
        assert result.exit_code == 0, all_output(result)
        assert "30 vertices" in result.output
        graph, cluster = load_instance(out)
        assert len(graph.vertices) == 30
        assert len(cluster.devices) == 3

    def test_bad_range_flag(self, runner, tmp_path):
        result = runner.invoke(main, ["gen", "--cost-range", "5", "--out",
                                      str(tmp_path / "x.txt")])
        assert result.exit_code == 1
        assert "--cost-range must be 'lo,hi'" in all_output(result)

    def test_impossible_density(self, runner, tmp_path):
        result = runner.invoke(main, ["gen", "--vertices", "5", "--avg-degree",
                                      "30", "--out", str(tmp_path / "x.txt")])
        assert result.exit_code == 1
        assert "error:" in all_output(result)


class TestValidate:
    def test_ok(self, runner, instance_file):
        result = runner.invoke(main, ["validate", instance_file])
        assert result.exit_code == 0
        assert result.output.startswith("ok: 4 vertices")

    def test_broken_file(self, runner, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("not an instance\n")
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 1
        assert "error:" in all_output(result)

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(main, ["validate", str(tmp_path / "nope.txt")])
        assert result.exit_code == 2


class TestPartition:
    def test_writes_assignment(self, runner, instance_file, tmp_path):
        out = str(tmp_path / "assign.txt")
        result = runner.invoke(main, ["partition", instance_file, "--strategy",
                                      "critical_path", "--out", out])
        assert result.exit_code == 0, all_output(result)
        assert "strategy critical_path" in result.output
        loaded = load_assignment(out)
        assert set(loaded.assignment) == {"v1", "v2", "v3", "v4"}
        assert loaded.strategy == "critical_path"

    def test_unknown_strategy_rejected(self, runner, instance_file, tmp_path):
        result = runner.invoke(main, ["partition", instance_file, "--strategy",
                                      "magic", "--out",
                                      str(tmp_path / "a.txt")])
        assert result.exit_code == 2

    def test_infeasible_instance(self, runner, tmp_path):
        path = tmp_path / "tight.txt"
        save_instance(build_diamond(), build_cluster([1.0], memories=[5.0]),
                      path)
        result = runner.invoke(main, ["partition", str(path), "--strategy",
                                      "batch_split", "--out",
                                      str(tmp_path / "a.txt")])
        assert result.exit_code == 1
        assert "error:" in all_output(result)


class TestSimulate:
    def simulate_args(self, instance_file, tmp_path, policy="pct"):
        assign = str(tmp_path / "assign.txt")
        runner = CliRunner()
        assert runner.invoke(main, ["partition", instance_file, "--strategy",
                                    "batch_split", "--out",
                                    assign]).exit_code == 0
        return ["simulate", instance_file, "--assignment", assign,
                "--policy", policy]

    def test_reports_makespan(self, runner, instance_file, tmp_path):
        args = self.simulate_args(instance_file, tmp_path)
        trace_path = tmp_path / "trace.txt"
        result = runner.invoke(main, args + ["--out", str(trace_path)])
        assert result.exit_code == 0, all_output(result)
        assert "makespan 5.0" in result.output
        assert "memory violations 0" in result.output
        assert trace_path.read_text().count("finish") == 4

    def test_msr_weights_accepted(self, runner, instance_file, tmp_path):
        args = self.simulate_args(instance_file, tmp_path, policy="msr")
        result = runner.invoke(main, args + ["--msr-weights", "2,1,1,9"])
        assert result.exit_code == 0, all_output(result)

    def test_bad_weights(self, runner, instance_file, tmp_path):
        args = self.simulate_args(instance_file, tmp_path, policy="msr")
        result = runner.invoke(main, args + ["--msr-weights", "1,2"])
        assert result.exit_code == 1
        assert "--msr-weights must be" in all_output(result)

    def test_stale_assignment(self, runner, instance_file, tmp_path):
        assign = str(tmp_path / "stale.txt")
        save_assignment(Partition(assignment={"v1": "d1"}, strategy="hash",
                                  seed=0), assign)
        result = runner.invoke(main, ["simulate", instance_file,
                                      "--assignment", assign, "--policy",
                                      "fifo"])
        assert result.exit_code == 1
        assert "does not assign" in all_output(result)


class TestCompare:
    def test_on_instance_file(self, runner, instance_file, tmp_path):
        prefix = str(tmp_path / "cmp")
        result = runner.invoke(main, [
            "compare", instance_file, "--partitioners", "hash,critical_path",
            "--schedulers", "fifo,pct", "--repetitions", "2", "--out", prefix])
        assert result.exit_code == 0, all_output(result)
        runs = (tmp_path / "cmp_runs.csv").read_text()
        summary = (tmp_path / "cmp_summary.csv").read_text()
        assert len(runs.splitlines()) == 9
        assert len(summary.splitlines()) == 5
        assert "mean makespan" in result.output

    def test_generated_instance_path(self, runner, tmp_path):
        prefix = str(tmp_path / "gen")
        result = runner.invoke(main, [
            "compare", "--vertices", "25", "--devices", "2", "--repetitions",
            "1", "--partitioners", "batch_split", "--schedulers", "fifo",
            "--out", prefix])
        assert result.exit_code == 0, all_output(result)
        assert (tmp_path / "gen_runs.csv").exists()
        assert (tmp_path / "gen_summary.csv").exists()

    def test_unknown_name(self, runner, instance_file, tmp_path):
        result = runner.invoke(main, ["compare", instance_file,
                                      "--partitioners", "wat", "--out",
                                      str(tmp_path / "x")])
        assert result.exit_code == 1
        assert "unknown partitioning strategy 'wat'" in all_output(result)

    def test_rerun_byte_identical(self, runner, instance_file, tmp_path):
        args = ["compare", instance_file, "--partitioners", "hash",
                "--schedulers", "fifo", "--repetitions", "3"]
        assert runner.invoke(main, args + ["--out",
                                           str(tmp_path / "a")]).exit_code == 0
        assert runner.invoke(main, args + ["--out",
                                           str(tmp_path / "b")]).exit_code == 0
        assert ((tmp_path / "a_runs.csv").read_bytes()
                == (tmp_path / "b_runs.csv").read_bytes())
        assert ((tmp_path / "a_summary.csv").read_bytes()
                == (tmp_path / "b_summary.csv").read_bytes())


class TestOracle:
    def test_reports_optimum(self, runner, instance_file, tmp_path):
        out = str(tmp_path / "best.txt")
        result = runner.invoke(main, ["oracle", instance_file, "--out", out])
        assert result.exit_code == 0, all_output(result)
        assert "optimal makespan" in result.output
        assert "searched" in result.output
        loaded = load_assignment(out)
        assert set(loaded.assignment) == {"v1", "v2", "v3", "v4"}

    def test_limit_enforced(self, runner, tmp_path):
        path = str(tmp_path / "big.txt")
        gen = CliRunner().invoke(main, ["gen", "--vertices", "30", "--devices",
                                        "2", "--out", path])
        assert gen.exit_code == 0
        result = runner.invoke(main, ["oracle", path])
        assert result.exit_code == 1
        assert "error:" in all_output(result)


def test_help_lists_subcommands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("gen", "validate", "partition", "simulate", "compare",
                 "oracle"):
        assert name in result.output
