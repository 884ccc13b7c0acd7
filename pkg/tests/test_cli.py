"""
Tests for the command-line interface.
"""

import pytest
from click.testing import CliRunner

from es_unicycle.cli.es_cli import (
    EXIT_COMPARE_FAILED,
    EXIT_DEGENERATE,
    EXIT_DIVERGENCE,
    EXIT_USAGE,
    cli,
)

FAST = ["--override", "t_end=1", "--override", "steps_per_fast_period=20"]


@pytest.fixture
def cli_runner():
    return CliRunner()


def invoke(cli_runner, out, *args):
    return cli_runner.invoke(cli, list(args) + ["--out", str(out)])


class TestListCommand:
    """Test `es-unicycle list`."""

    def test_lists_builtins(self, cli_runner):
        result = cli_runner.invoke(cli, ["list"])
        assert result.exit_code == 0
        for name in ("sim-moving", "sim-fixed", "exp-fixed", "exp-eight"):
            assert name in result.output

    def test_lists_file_scenarios(self, cli_runner, scenario_file):
        result = cli_runner.invoke(cli, ["list", "--config", str(scenario_file)])
        assert result.exit_code == 0
        assert "short-fixed-far" in result.output
        assert "Start further out" in result.output

    def test_version(self, cli_runner):
        result = cli_runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "0.1.0" in result.output


class TestRunCommand:
    """Test `es-unicycle run`."""

    def test_run(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "run", "sim-fixed", *FAST)
        assert result.exit_code == 0, result.output
        assert "trajectory:" in result.output
        assert (temp_dir / "sim-fixed_cont2_summary.txt").exists()

    def test_run_with_law_and_log_level(self, cli_runner, temp_dir):
        result = cli_runner.invoke(
            cli, ["--log-level", "DEBUG", "run", "sim-fixed", "--law", "cont4", *FAST, "--out", str(temp_dir)]
        )
        assert result.exit_code == 0, result.output
        assert (temp_dir / "sim-fixed_cont4_trajectory.csv").exists()

    def test_output_dir_from_environment(self, cli_runner, temp_dir):
        result = cli_runner.invoke(cli, ["run", "sim-fixed", *FAST], env={"ES_UNICYCLE_OUT": str(temp_dir)})
        assert result.exit_code == 0, result.output
        assert (temp_dir / "sim-fixed_cont2_summary.txt").exists()

    def test_unknown_scenario(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "run", "nope")
        assert result.exit_code == EXIT_USAGE
        assert "error: usage:" in result.output

    def test_bad_override(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "run", "sim-fixed", "--override", "omega=52")
        assert result.exit_code == EXIT_USAGE

    def test_divergence(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "run", "sim-fixed", "--law", "cont1", *FAST, "--override", "x0=1000,0")
        assert result.exit_code == EXIT_DIVERGENCE
        assert "error: divergence:" in result.output
        assert (temp_dir / "sim-fixed_cont1_trajectory.csv").exists()


class TestCompareCommand:
    """Test `es-unicycle compare`."""

    def test_compare(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "compare", "sim-fixed", "cont1", "CONT2", *FAST)
        assert result.exit_code == 0, result.output
        assert "cont1" in result.output and "cont2" in result.output
        assert (temp_dir / "sim-fixed_compare.csv").exists()

    def test_single_law(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "compare", "sim-fixed", "cont1", *FAST)
        assert result.exit_code == EXIT_USAGE

    def test_failed_law(self, cli_runner, temp_dir):
        result = invoke(
            cli_runner, temp_dir, "compare", "sim-fixed", "cont2", "custom", *FAST,
            "--override", "custom.f1=sine", "--override", "custom.z_lo=0.5", "--override", "custom.z_hi=4",
        )
        assert result.exit_code == EXIT_COMPARE_FAILED
        assert "FAILED" in result.output
        assert "error: compare:" in result.output


class TestStudyCommand:
    """Test `es-unicycle study`."""

    def test_omega_study(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "study", "omega", "sim-fixed", "--k", "4,8", *FAST)
        assert result.exit_code == 0, result.output
        assert "non_increasing" in result.output

    def test_probe_needs_arguments(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "study", "probe", "sim-fixed", "--omega", "50")
        assert result.exit_code == EXIT_USAGE
        assert "error: usage:" in result.output

    def test_bad_list(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "study", "omega", "sim-fixed", "--k", "4,x")
        assert result.exit_code == EXIT_USAGE

    def test_degenerate_volterra(self, cli_runner, temp_dir):
        result = invoke(
            cli_runner, temp_dir, "study", "volterra", "exp-fixed", "--omega", "3,6,12,24", *FAST,
            "--override", "x0=0.5,0.7",
        )
        assert result.exit_code == EXIT_DEGENERATE
        assert "error: degenerate:" in result.output

    def test_unknown_kind(self, cli_runner, temp_dir):
        result = invoke(cli_runner, temp_dir, "study", "spectral")
        assert result.exit_code == EXIT_USAGE
