"""
Command-line interface for es-unicycle.
Runs scenarios, compares laws and drives the empirical studies.
"""

import functools
import sys
from typing import Callable, List, Optional

import click
from pydantic import ValidationError

from es_unicycle.api.config import OUTPUT_DIR_ENV, RunSettings
from es_unicycle.api.scenarios import list_scenarios, load_scenarios
from es_unicycle.core.scenario_runner import ScenarioRunner
from es_unicycle.utils.exceptions import (
    DegenerateStudyError,
    DivergenceError,
    DomainError,
    EsUnicycleError,
    ParameterError,
    QuadratureError,
    RangeError,
    ScenarioNotFoundError,
)
from es_unicycle.utils.logger import get_logger, set_log_level
from es_unicycle.utils.schema import StudyKind

logger = get_logger(__name__)

EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_COMPARE_FAILED = 4
EXIT_DEGENERATE = 5

DEFAULT_STUDY_SCENARIO = {
    StudyKind.OMEGA: "sim-moving",
    StudyKind.VOLTERRA: "sim-fixed",
    StudyKind.PROBE: "sim-moving",
}

# (exception type, reported kind, exit code), most specific first
_ERROR_TABLE = [
    (ScenarioNotFoundError, "usage", EXIT_USAGE),
    (ParameterError, "usage", EXIT_USAGE),
    (ValidationError, "usage", EXIT_USAGE),
    (DivergenceError, "divergence", EXIT_DIVERGENCE),
    (DegenerateStudyError, "degenerate", EXIT_DEGENERATE),
    (DomainError, "domain", 1),
    (RangeError, "range", 1),
    (QuadratureError, "quadrature", 1),
    (EsUnicycleError, "error", 1),
]


def fail(kind: str, message: str, code: int) -> None:
    """One-line diagnostic on stderr, then exit with ``code``."""
    click.echo(f"error: {kind}: {' '.join(str(message).split())}", err=True)
    sys.exit(code)


def handle_errors(fn: Callable) -> Callable:
    """Map package errors to one-line diagnostics and exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except tuple(e for e, _, _ in _ERROR_TABLE) as e:
            for exc_type, kind, code in _ERROR_TABLE:
                if isinstance(e, exc_type):
                    logger.debug(f"{kind} error", exc_info=True)
                    fail(kind, str(e), code)

    return wrapper


def parse_list(text: Optional[str], kind: type, name: str) -> Optional[List]:
    """Comma-separated list, e.g. ``10,20,40``."""
    if text is None:
        return None
    try:
        return [kind(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ParameterError(f"invalid {name} list {text!r}") from e


def common_options(fn: Callable) -> Callable:
    """Options shared by every command that writes artifacts."""
    fn = click.option("--out", "out", envvar=OUTPUT_DIR_ENV, default=None, help="Output directory")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Scenario file (INI)")(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True, help="Worker processes")(fn)
    fn = click.option("--progress", is_flag=True, help="Show progress bars")(fn)
    return fn


def make_runner(out: Optional[str], config_path: Optional[str], workers: int = 1, progress: bool = False) -> ScenarioRunner:
    ctx = click.get_current_context(silent=True)
    log_level = (ctx.find_root().obj or {}).get("log_level", "WARNING") if ctx else "WARNING"
    settings = RunSettings(workers=max(1, workers), show_progress=progress, log_level=log_level)
    if out:
        settings.output_dir = out
    return ScenarioRunner(settings=settings, config_path=config_path)


@click.group()
@click.version_option(version="0.1.0")
@click.option("--log-level", default="WARNING", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Package log level")
@click.pass_context
def cli(ctx, log_level):
    """
    es-unicycle - extremum seeking control of a unicycle

    Simulate scenarios, compare control laws and run the averaging and
    practical-stability studies. Artifacts are CSV and key = value files.
    """
    ctx.ensure_object(dict)["log_level"] = log_level.upper()
    set_log_level(log_level)


@cli.command()
@click.argument("scenario")
@click.option("--law", help="Control law (cont1..cont4, custom)")
@click.option("--override", "overrides", multiple=True, help="key=value, repeatable")
@common_options
@handle_errors
def run(scenario, law, overrides, out, config_path, workers, progress):
    """Simulate one scenario and write trajectory, plot data and summary."""
    runner = make_runner(out, config_path, workers, progress)
    artifacts = runner.run(scenario, overrides, law)
    click.echo(f"trajectory: {artifacts.trajectory_csv_path}")
    click.echo(f"summary: {artifacts.summary_path}")
    for path in artifacts.plotdata_paths:
        click.echo(f"plot data: {path}")
    if artifacts.diverged:
        fail("divergence", f"state norm exceeded 1e6 at t={artifacts.divergence_time!r}; partial artifacts written",
             EXIT_DIVERGENCE)


@cli.command()
@click.argument("scenario")
@click.argument("laws", nargs=-1)
@click.option("--override", "overrides", multiple=True, help="key=value, repeatable")
@common_options
@handle_errors
def compare(scenario, laws, overrides, out, config_path, workers, progress):
    """Run several laws on one scenario and tabulate their tracking metrics."""
    runner = make_runner(out, config_path, workers, progress)
    report = runner.compare(scenario, [law.lower() for law in laws], overrides)
    click.echo(f"{'law':<8} {'acc_sq_err':>14} {'effort':>14} {'final_err':>12} {'max_err_tail':>13}")
    for row in report.rows:
        if row.failed:
            click.echo(f"{row.law:<8} FAILED {row.reason}")
            continue
        click.echo(
            f"{row.law:<8} {row.accumulated_sq_error:>14.6g} {row.control_effort:>14.6g} "
            f"{row.final_error:>12.6g} {row.max_error_tail:>13.6g}"
        )
    click.echo(f"table: {report.table_path}")
    if report.any_failed:
        failed = ", ".join(r.law for r in report.rows if r.failed)
        fail("compare", f"run(s) failed: {failed}", EXIT_COMPARE_FAILED)


@cli.command()
@click.argument("kind", type=click.Choice([k.value for k in StudyKind]))
@click.argument("scenario", required=False)
@click.option("--law", help="Control law (cont1..cont4, custom)")
@click.option("--override", "overrides", multiple=True, help="key=value, repeatable")
@click.option("--k", "k_text", help="Comma-separated k values (omega study)")
@click.option("--omega", "omega_text", help="Comma-separated omega values (volterra, probe)")
@click.option("--eps", type=float, help="Containment radius (probe)")
@click.option("--delta", type=float, help="Initial distance from the level set (probe)")
@click.option("--t0", "t0_text", help="Comma-separated start times (probe)")
@click.option("--horizon", type=float, help="Run length, default the scenario window")
@click.option("--beta", type=float, help="Decay constant for the transient envelope (probe)")
@common_options
@handle_errors
def study(kind, scenario, law, overrides, k_text, omega_text, eps, delta, t0_text, horizon, beta,
          out, config_path, workers, progress):
    """Run an omega-convergence, Volterra-scaling or practical-stability study."""
    kind = StudyKind(kind)
    ref = scenario or DEFAULT_STUDY_SCENARIO[kind]
    overrides = list(overrides) + ([f"law={law}"] if law else [])
    runner = make_runner(out, config_path, workers, progress)
    artifacts = runner.study(
        kind,
        ref,
        overrides,
        k_list=parse_list(k_text, int, "k"),
        omega_list=parse_list(omega_text, float, "omega"),
        epsilon=eps,
        delta=delta,
        t0_list=parse_list(t0_text, float, "t0"),
        duration=horizon,
        beta=beta,
    )
    with open(artifacts.summary_path, "r", encoding="utf-8") as f:
        click.echo(f.read().rstrip("\n"))
    click.echo(f"summary: {artifacts.summary_path}")
    click.echo(f"table: {artifacts.table_path}")


@cli.command(name="list")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Scenario file (INI)")
@handle_errors
def list_command(config_path):
    """List built-in scenarios (and those of a scenario file)."""
    scenarios = list_scenarios()
    if config_path:
        scenarios += list(load_scenarios(config_path).values())
    for s in scenarios:
        c = s.config
        click.echo(
            f"{s.name:<12} law={s.law.value} Omega={c.Omega:g} k={c.k} omega={c.omega:g} "
            f"x0=({c.x0}) t=[{c.t0:g}, {c.t_end:g}] path={s.path.kind.value} vartheta={s.vartheta:g} kappa={s.kappa:g}"
        )
        if s.description:
            click.echo(f"{'':<12} {s.description}")


if __name__ == "__main__":
    cli()
