"""
Scenario Runner - Main orchestrator for es-unicycle.
Coordinates simulations, metrics, studies and artifact writing.
"""

import functools
import math
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from es_unicycle.analysis.metrics import compute_metrics
from es_unicycle.analysis.stability import practical_stability_probe
from es_unicycle.analysis.studies import is_non_increasing, omega_convergence_study, volterra_scaling_study
from es_unicycle.api.config import RunSettings
from es_unicycle.api.scenarios import Scenario, apply_overrides, resolve_scenario
from es_unicycle.core.artifact_store import ArtifactStore
from es_unicycle.core.control_family import LawKind
from es_unicycle.core.dynamics import ClosedLoopSystem, simulate_closed_loop
from es_unicycle.utils.exceptions import DegenerateStudyError, DivergenceError, EsUnicycleError, ParameterError
from es_unicycle.utils.logger import EsLogger, get_logger
from es_unicycle.utils.parallel import parallel_map
from es_unicycle.utils.schema import (
    CompareReport,
    CompareRow,
    Metrics,
    RunArtifacts,
    StabilityProbeReport,
    StudyArtifacts,
    StudyKind,
    Trajectory,
)

logger = get_logger(__name__)

PROBE_COLUMNS = [
    "omega", "t0", "x1", "x2", "contained", "settled_after", "max_distance", "envelope_violation_fraction",
]


def run_summary(scenario: Scenario, traj: Trajectory, metrics: Optional[Metrics]) -> Dict[str, Any]:
    """Flat summary of one run: parameters first, then metrics."""
    law, cost, config = scenario.build()
    summary: Dict[str, Any] = {
        "scenario": scenario.name,
        "law": law.kind.value,
        "pair": law.pair.name,
        "k": config.k,
        "Omega": config.Omega,
        "omega": config.omega,
        "vartheta": law.vartheta,
        "kappa": cost.kappa,
        "alpha": law.alpha_used,
        "amplitude_scale": law.amplitude_scale,
        "descent_gain": law.descent_gain,
        "steps_per_fast_period": config.steps_per_fast_period,
        "samples": len(traj),
    }
    if metrics is not None:
        summary.update(metrics.to_flat())
    return summary


def at_settings_log_level(fn):
    """Run a runner method at the log level of its settings."""

    @functools.wraps(fn)
    def wrapper(self, *args, **kwargs):
        with EsLogger(self.settings.log_level):
            return fn(self, *args, **kwargs)

    return wrapper


def _compare_key(row: CompareRow) -> Tuple[bool, float]:
    return row.failed, math.inf if row.accumulated_sq_error is None else row.accumulated_sq_error


def compare_row(task: Tuple[Scenario, str]) -> CompareRow:
    """Simulate one law of a comparison; failures become a marked row."""
    scenario, law_id = task
    try:
        scenario = scenario.with_law(law_id)
        law, cost, config = scenario.build()
        traj = simulate_closed_loop(ClosedLoopSystem(law=law, cost=cost, config=config))
        m = compute_metrics(traj, scenario.path)
    except EsUnicycleError as e:
        logger.warning(f"compare: {law_id} failed: {e}")
        return CompareRow(law=law_id, failed=True, reason=f"{type(e).__name__}: {e}")
    return CompareRow(
        law=law_id,
        accumulated_sq_error=m.accumulated_sq_error,
        control_effort=m.control_effort,
        final_error=m.final_error,
        max_error_tail=m.max_error_tail,
        mean_sq_error_tail=m.mean_sq_error_tail,
    )


class ScenarioRunner:
    """
    Main entry point: resolves scenarios, runs them and stores artifacts.
    """

    def __init__(self, settings: Optional[RunSettings] = None, config_path: Optional[Union[str, Path]] = None):
        """
        Initialize the runner.

        Args:
            settings: Run settings (output directory, workers, ...)
            config_path: Optional INI file with extra scenarios
        """
        self.settings = settings or RunSettings()
        self.config_path = config_path
        self.store = ArtifactStore(self.settings.output_dir, self.settings.csv_max_rows)
        self.logger = get_logger(__name__)
        self.logger.info(f"Initialized ScenarioRunner writing to {self.settings.output_dir}")

    def resolve(self, ref: str, overrides: Sequence[str] = (), law: Optional[str] = None) -> Scenario:
        """Scenario by id with overrides and an optional law applied."""
        scenario = resolve_scenario(ref, self.config_path)
        if overrides:
            scenario = apply_overrides(scenario, overrides)
        if law is not None:
            try:
                scenario = scenario.with_law(LawKind(law))
            except ValueError as e:
                raise ParameterError(f"unknown law {law!r}") from e
        return scenario

    def simulate(self, scenario: Scenario) -> Trajectory:
        law, cost, config = scenario.build()
        return simulate_closed_loop(ClosedLoopSystem(law=law, cost=cost, config=config))

    def _write_run(self, scenario: Scenario, traj: Trajectory, extra: Dict[str, Any]) -> RunArtifacts:
        prefix = f"{scenario.name}_{scenario.law.value}"
        metrics = compute_metrics(traj, scenario.path) if scenario.compute_metrics else None
        summary = run_summary(scenario, traj, metrics)
        summary.update(extra)
        csv_path = self.store.write_trajectory(f"{prefix}_trajectory.csv", traj)
        plot_paths = self.store.write_plot_data(prefix, traj)
        summary_path = self.store.write_summary(f"{prefix}_summary.txt", summary)
        return RunArtifacts(
            trajectory_csv_path=str(csv_path),
            summary_path=str(summary_path),
            plotdata_paths=[str(p) for p in plot_paths],
            diverged=bool(extra.get("diverged", False)),
            divergence_time=extra.get("divergence_time"),
        )

    @at_settings_log_level
    def run(self, ref: str, overrides: Sequence[str] = (), law: Optional[str] = None) -> RunArtifacts:
        """
        Simulate a scenario and write trajectory, plot data and summary.

        A divergent run writes the partial trajectory and returns artifacts marked
        ``diverged``.

        Raises:
            ScenarioNotFoundError: unknown scenario
            ParameterError: invalid overrides or law
        """
        scenario = self.resolve(ref, overrides, law)
        self.logger.info(f"Running {scenario.name} with {scenario.law.value}")
        try:
            traj = self.simulate(scenario)
        except DivergenceError as e:
            self.logger.error(f"Run {scenario.name} diverged at t={e.time}")
            if e.trajectory is None:
                raise
            return self._write_run(scenario, e.trajectory, {"diverged": True, "divergence_time": e.time})
        return self._write_run(scenario, traj, {"diverged": False})

    @at_settings_log_level
    def compare(self, ref: str, laws: Sequence[str], overrides: Sequence[str] = ()) -> CompareReport:
        """
        Run several laws on one scenario and write a table sorted by accumulated squared error.

        Raises:
            ParameterError: fewer than two laws or an unknown law
        """
        if len(laws) < 2:
            raise ParameterError("compare needs at least two laws")
        for law_id in laws:
            if law_id not in {k.value for k in LawKind}:
                raise ParameterError(f"unknown law {law_id!r}")
        scenario = self.resolve(ref, overrides)
        rows = parallel_map(
            compare_row,
            [(scenario, law_id) for law_id in laws],
            self.settings.workers,
            self.settings.show_progress,
            desc="compare",
        )
        rows = sorted(rows, key=_compare_key)
        header = list(CompareRow.__fields__)
        table = self.store.write_table(
            f"{scenario.name}_compare.csv",
            header,
            [[getattr(r, h) for h in header] for r in rows],
        )
        self.logger.info(f"Compared {len(rows)} laws on {scenario.name}")
        return CompareReport(scenario=scenario.name, rows=rows, table_path=str(table))

    @at_settings_log_level
    def study(
        self,
        kind: Union[str, StudyKind],
        ref: str,
        overrides: Sequence[str] = (),
        k_list: Optional[Sequence[int]] = None,
        omega_list: Optional[Sequence[float]] = None,
        epsilon: Optional[float] = None,
        delta: Optional[float] = None,
        t0_list: Optional[Sequence[float]] = None,
        duration: Optional[float] = None,
        beta: Optional[float] = None,
    ) -> StudyArtifacts:
        """
        Run an empirical study and write its summary and table.

        Raises:
            ParameterError: missing or invalid grid arguments
            DegenerateStudyError: every Volterra point was excluded (artifacts are still written)
        """
        kind = StudyKind(kind)
        scenario = self.resolve(ref, overrides)
        prefix = f"{scenario.name}_{scenario.law.value}_study_{kind.value}"
        if kind == StudyKind.OMEGA:
            return self._omega_study(scenario, prefix, k_list, duration)
        if kind == StudyKind.VOLTERRA:
            return self._volterra_study(scenario, prefix, omega_list)
        return self._probe_study(scenario, prefix, epsilon, delta, omega_list, t0_list, duration, beta)

    def _omega_study(self, scenario, prefix, k_list, duration) -> StudyArtifacts:
        if not k_list:
            raise ParameterError("omega study needs --k")
        rows = omega_convergence_study(scenario, k_list, duration, self.settings)
        table = self.store.write_table(
            f"{prefix}.csv", ["k", "omega", "sup_distance"], [[r.k, r.omega, r.sup_distance] for r in rows]
        )
        summary = {
            "study": StudyKind.OMEGA.value,
            "scenario": scenario.name,
            "law": scenario.law.value,
            "non_increasing": is_non_increasing(rows),
        }
        for r in rows:
            summary[f"sup_distance_k{r.k}"] = r.sup_distance
        path = self.store.write_summary(f"{prefix}_summary.txt", summary)
        return StudyArtifacts(kind=StudyKind.OMEGA, summary_path=str(path), table_path=str(table))

    def _volterra_study(self, scenario, prefix, omega_list) -> StudyArtifacts:
        if not omega_list:
            raise ParameterError("volterra study needs --omega")
        report = volterra_scaling_study(scenario, omega_list, self.settings)
        table = self.store.write_table(
            f"{prefix}.csv",
            ["omega", "r_norm", "excluded"],
            [[p.omega, p.r_norm, p.excluded] for p in report.points],
        )
        summary = {
            "study": StudyKind.VOLTERRA.value,
            "scenario": scenario.name,
            "law": scenario.law.value,
            "k": scenario.config.k,
            "points": len(report.points),
            "excluded": sum(p.excluded for p in report.points),
            "fitted_slope": report.fitted_slope,
            "degenerate": report.degenerate,
        }
        path = self.store.write_summary(f"{prefix}_summary.txt", summary)
        if report.degenerate:
            raise DegenerateStudyError(f"volterra study on {scenario.name}: every point has a zero remainder")
        return StudyArtifacts(kind=StudyKind.VOLTERRA, summary_path=str(path), table_path=str(table))

    def _probe_study(self, scenario, prefix, epsilon, delta, omega_list, t0_list, duration, beta) -> StudyArtifacts:
        if epsilon is None or delta is None or not omega_list:
            raise ParameterError("probe study needs --eps, --delta and --omega")
        report: StabilityProbeReport = practical_stability_probe(
            scenario,
            epsilon,
            delta,
            omega_list,
            t0_list or [scenario.config.t0],
            duration=duration,
            beta=beta,
            settings=self.settings,
        )
        table = self.store.write_table(
            f"{prefix}.csv",
            PROBE_COLUMNS,
            [[r.omega, r.t0, r.x0.x1, r.x0.x2, r.contained, r.settled_after, r.max_distance, r.envelope_violation_fraction]
             for r in report.runs],
        )
        summary: Dict[str, Any] = {
            "study": StudyKind.PROBE.value,
            "scenario": scenario.name,
            "law": scenario.law.value,
            "epsilon": report.epsilon,
            "delta": report.delta,
            "lambda": report.lambda_,
            "level_set_radius": report.level_set_radius,
            "omega0": report.omega0,
            "t1": report.t1,
            "stable": report.stable,
            "attractive": report.attractive,
            "bounded": report.bounded,
            "precondition_violations": len(report.precondition_violations),
        }
        if report.theorem3 is not None:
            summary["vartheta_min"] = report.theorem3.vartheta_min
            summary["delta_max"] = report.theorem3.delta_max
            summary["admissible"] = report.theorem3.admissible
        summary["note"] = report.note
        path = self.store.write_summary(f"{prefix}_summary.txt", summary)
        return StudyArtifacts(kind=StudyKind.PROBE, summary_path=str(path), table_path=str(table))
