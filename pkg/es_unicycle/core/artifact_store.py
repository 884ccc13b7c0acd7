"""
Artifact store for es-unicycle.
Writes trajectory CSVs, plot-data subsets, tables and key = value summaries atomically.
"""

import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Trajectory

logger = get_logger(__name__)

TRAJECTORY_COLUMNS = ["t", "x1", "x2", "gamma1", "gamma2", "theta", "u", "J", "err"]
PLOT_PANELS: Dict[str, List[str]] = {
    "path": ["t", "x1", "x2", "gamma1", "gamma2"],
    "control": ["t", "u"],
    "error": ["t", "err"],
}
SUMMARY_DIGITS = 12


def format_value(value: Any) -> str:
    """Summary formatting: floats with 12 significant digits, everything else via str."""
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{SUMMARY_DIGITS}g}"
    return str(value)


def parse_value(text: str) -> Union[float, int, bool, str, None]:
    """Inverse of :func:`format_value` for summary files."""
    if text == "None":
        return None
    if text in ("True", "False"):
        return text == "True"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_summary(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a ``key = value`` summary file."""
    result: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#") or " = " not in line:
                continue
            key, value = line.split(" = ", 1)
            result[key] = parse_value(value)
    return result


def trajectory_rows(traj: Trajectory, columns: Sequence[str]) -> Iterable[List[float]]:
    arrays = {
        "t": traj.t,
        "x1": traj.x[:, 0],
        "x2": traj.x[:, 1],
        "gamma1": traj.gamma[:, 0],
        "gamma2": traj.gamma[:, 1],
        "theta": traj.theta,
        "u": traj.u,
        "J": traj.J,
        "err": traj.err,
    }
    selected = [arrays[c].tolist() for c in columns]
    return zip(*selected)


class ArtifactStore:
    """
    Output directory for run, compare and study artifacts.
    Every file is written to a temporary name and renamed into place.
    """

    def __init__(self, output_dir: Union[str, Path], csv_max_rows: int = 100_000):
        """
        Initialize artifact store.

        Args:
            output_dir: Directory for artifacts (created if missing)
            csv_max_rows: Row budget of trajectory CSVs
        """
        self.output_dir = Path(output_dir)
        self.csv_max_rows = csv_max_rows
        self.logger = get_logger(__name__)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.logger.debug(f"Initialized ArtifactStore at {self.output_dir}")

    def path_for(self, name: str) -> Path:
        return self.output_dir / name

    def _atomic_write(self, name: str, text: str) -> Path:
        target = self.path_for(name)
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(self.output_dir))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
            os.replace(tmp, target)
        except Exception as e:
            self.logger.error(f"Failed to write {target}: {e}", exc_info=True)
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.logger.debug(f"Wrote {target}")
        return target

    def downsample_stride(self, n_samples: int) -> int:
        """Smallest stride keeping a CSV within the row budget (last sample always kept)."""
        return max(1, math.ceil(n_samples / (self.csv_max_rows - 1)))

    def _csv_text(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_trajectory(self, name: str, traj: Trajectory) -> Path:
        """Trajectory CSV with shortest round-trip floats, downsampled to the row budget."""
        sampled = traj.downsample(self.downsample_stride(len(traj)))
        return self._atomic_write(name, self._csv_text(TRAJECTORY_COLUMNS, trajectory_rows(sampled, TRAJECTORY_COLUMNS)))

    def write_plot_data(self, prefix: str, traj: Trajectory) -> List[Path]:
        """One CSV per panel: path, control and error."""
        sampled = traj.downsample(self.downsample_stride(len(traj)))
        paths = []
        for panel, columns in PLOT_PANELS.items():
            text = self._csv_text(columns, trajectory_rows(sampled, columns))
            paths.append(self._atomic_write(f"{prefix}_plot_{panel}.csv", text))
        return paths

    def write_table(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self._atomic_write(name, self._csv_text(header, rows))

    def write_summary(self, name: str, values: Mapping[str, Any]) -> Path:
        """Flat ``key = value`` file in insertion order."""
        text = "".join(f"{key} = {format_value(value)}\n" for key, value in values.items())
        return self._atomic_write(name, text)
