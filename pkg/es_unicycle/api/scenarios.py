"""
Scenario catalog, overrides and scenario config files.

A Scenario is plain data (no callables), so it can be shipped to worker processes
and the control law is rebuilt where it is simulated.
"""

import configparser
import math
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, Field, ValidationError

from es_unicycle.api.config import LawTuning, SimConfig
from es_unicycle.core.control_family import ControlLaw, LawKind, make_builtin_law, make_custom_law
from es_unicycle.core.cost import CostFunction
from es_unicycle.core.target_path import PathKind, TargetPath
from es_unicycle.utils.exceptions import ParameterError, ScenarioNotFoundError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Vec2

logger = get_logger(__name__)

DEFAULT_RHO = 10.0


class CustomLawParams(BaseModel):
    """Catalog F1 plus the constants that select F2 and its tabulation interval."""

    f1: str = "linear"
    z_ref: float = 1.0
    c0: float = -1.0
    z_lo: float = 1e-3
    z_hi: float = 50.0

    class Config:
        allow_mutation = False


class Scenario(BaseModel):
    """Everything needed to reproduce one simulation setup."""

    name: str
    description: str = ""
    config: SimConfig
    law: LawKind = LawKind.CONT1
    vartheta: float = Field(default=1.0, gt=0.0)
    kappa: float = Field(default=1.0, gt=0.0)
    path: TargetPath
    tuning: Dict[str, LawTuning] = Field(default_factory=dict, description="Per-law tuning keyed by law id")
    custom: CustomLawParams = Field(default_factory=CustomLawParams)
    rho: float = Field(default=DEFAULT_RHO, gt=0.0, description="Cost bound of the admissible region")
    compute_metrics: bool = True

    class Config:
        allow_mutation = False

    def with_law(self, law: Union[str, LawKind]) -> "Scenario":
        return self.copy(update={"law": LawKind(law)})

    def tuning_for(self, law: Union[str, LawKind, None] = None) -> LawTuning:
        kind = LawKind(law or self.law)
        return self.tuning.get(kind.value, LawTuning())

    def kappa_for(self, law: Union[str, LawKind, None] = None) -> float:
        tuned = self.tuning_for(law).kappa
        return self.kappa if tuned is None else tuned

    def build(self, law: Union[str, LawKind, None] = None) -> Tuple[ControlLaw, CostFunction, SimConfig]:
        """Control law, cost and simulation config for this scenario."""
        return resolve_law(self, law)


def resolve_law(
    scenario: Scenario, law: Union[str, LawKind, None] = None
) -> Tuple[ControlLaw, CostFunction, SimConfig]:
    """
    Instantiate the law of a scenario with its tuning applied.

    Raises:
        ParameterError: invalid law parameters or unknown custom F1
    """
    kind = LawKind(law or scenario.law)
    tuning = scenario.tuning_for(kind)
    config = scenario.config
    if kind == LawKind.CUSTOM:
        params = scenario.custom
        control = make_custom_law(
            params.f1,
            params.z_ref,
            params.c0,
            scenario.vartheta,
            config.k,
            config.Omega,
            params.z_lo,
            params.z_hi,
            amplitude_scale=1.0 if tuning.amplitude_scale is None else tuning.amplitude_scale,
            alpha=tuning.alpha,
        )
    else:
        control = make_builtin_law(
            kind,
            scenario.vartheta,
            config.k,
            config.Omega,
            amplitude_scale=tuning.amplitude_scale,
            alpha=tuning.alpha,
        )
    cost = CostFunction(kappa=scenario.kappa_for(kind), path=scenario.path)
    return control, cost, config


# Built-in catalog

def _sim_moving() -> Scenario:
    return Scenario(
        name="sim-moving",
        description="Moving target on a line with sine, Omega=5, omega=50",
        config=SimConfig(x0=Vec2(x1=-1.0, x2=1.0), t0=0.0, t_end=100.0, Omega=5.0, k=10),
        law=LawKind.CONT1,
        vartheta=1.0,
        kappa=1.0,
        path=TargetPath.line_sine_path(),
    )


def _sim_fixed() -> Scenario:
    return Scenario(
        name="sim-fixed",
        description="Fixed target at the origin, Omega=5, omega=50, bounded law",
        config=SimConfig(x0=Vec2(x1=1.0, x2=0.0), t0=0.0, t_end=20.0, Omega=5.0, k=10),
        law=LawKind.CONT2,
        vartheta=1.0,
        kappa=1.0,
        path=TargetPath.constant(0.0, 0.0),
    )


def _exp_fixed() -> Scenario:
    return Scenario(
        name="exp-fixed",
        description="Fixed target at (0.5, 0.7), Omega=1.5, omega=3, tuned for |u| <= 0.4",
        config=SimConfig(x0=Vec2(x1=0.3, x2=0.5), t0=0.0, t_end=200.0, Omega=1.5, k=2),
        law=LawKind.CONT4,
        vartheta=1.0,
        kappa=1.0,
        path=TargetPath.constant(0.5, 0.7),
        tuning={
            "cont1": LawTuning(alpha=2.25e-4, kappa=10.0, amplitude_scale=1.0),
            "cont2": LawTuning(alpha=4.84e-2, kappa=4.0, amplitude_scale=1.0),
            "cont4": LawTuning(alpha=0.3249, kappa=4.0, amplitude_scale=1.0),
        },
    )


def _exp_eight() -> Scenario:
    return Scenario(
        name="exp-eight",
        description="Figure-eight target, Omega=1, omega=3, tuned for |u| <= 0.4",
        config=SimConfig(x0=Vec2(x1=0.7, x2=0.4), t0=0.0, t_end=500.0, Omega=1.0, k=3),
        law=LawKind.CONT4,
        vartheta=1.0,
        kappa=1.0,
        path=TargetPath.figure_eight_path(),
        tuning={
            "cont2": LawTuning(alpha=5.29e-2, kappa=4.0, amplitude_scale=1.0),
            "cont4": LawTuning(alpha=0.25, kappa=1.0, amplitude_scale=1.0),
        },
    )


SCENARIO_CATALOG: Dict[str, Callable[[], Scenario]] = {
    "sim-moving": _sim_moving,
    "sim-fixed": _sim_fixed,
    "exp-fixed": _exp_fixed,
    "exp-eight": _exp_eight,
}


def list_scenarios() -> List[Scenario]:
    return [factory() for factory in SCENARIO_CATALOG.values()]


def get_scenario(name: str) -> Scenario:
    """
    Built-in scenario by id.

    Raises:
        ScenarioNotFoundError: unknown id
    """
    if name not in SCENARIO_CATALOG:
        raise ScenarioNotFoundError(f"unknown scenario {name!r}; built-in: {', '.join(SCENARIO_CATALOG)}")
    return SCENARIO_CATALOG[name]()


# Overrides

_CONFIG_KEYS = {"t0": float, "t_end": float, "Omega": float, "k": int, "theta0": float, "steps_per_fast_period": int}
_SCENARIO_KEYS = {"vartheta": float, "kappa": float, "rho": float, "description": str}
_TUNING_KEYS = {"alpha": float, "amplitude_scale": float, "tuned_kappa": float}
_CUSTOM_KEYS = {"custom.f1": str, "custom.z_ref": float, "custom.z_lo": float, "custom.z_hi": float, "custom.c0": float}

OVERRIDE_KEYS = sorted(
    list(_CONFIG_KEYS) + list(_SCENARIO_KEYS) + list(_TUNING_KEYS) + list(_CUSTOM_KEYS)
    + ["law", "x0", "omega", "target", "path", "compute_metrics"]
)


def parse_override(text: str) -> Tuple[str, str]:
    """Split ``key=value``."""
    if "=" not in text:
        raise ParameterError(f"override {text!r} is not of the form key=value")
    key, value = text.split("=", 1)
    key, value = key.strip(), value.strip()
    if key not in OVERRIDE_KEYS:
        raise ParameterError(f"unknown override key {key!r}; valid keys: {', '.join(OVERRIDE_KEYS)}")
    return key, value


def _convert(key: str, value: str, kind: type):
    try:
        return kind(value)
    except ValueError as e:
        raise ParameterError(f"invalid value {value!r} for {key}") from e


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"invalid boolean {value!r}")


def _parse_path(value: str) -> TargetPath:
    kind = value.lower()
    if kind == PathKind.LINE_SINE.value:
        return TargetPath.line_sine_path()
    if kind == PathKind.FIGURE_EIGHT.value:
        return TargetPath.figure_eight_path()
    raise ParameterError(f"path must be line_sine or figure_eight (use target=a,b for a fixed point), got {value!r}")


def omega_to_k(omega: float, Omega: float) -> int:
    """
    Frequency ratio for a directly supplied omega.

    Raises:
        ParameterError: omega / Omega is not an integer >= 2
    """
    ratio = omega / Omega
    k = round(ratio)
    if not math.isclose(ratio, k, rel_tol=0.0, abs_tol=1e-9) or k < 2:
        raise ParameterError(f"omega={omega!r} is not an integer multiple >= 2 of Omega={Omega!r}")
    return int(k)


def apply_overrides(scenario: Scenario, overrides: Sequence[str]) -> Scenario:
    """
    Merge ``key=value`` overrides onto a scenario.

    ``alpha``, ``amplitude_scale`` and ``tuned_kappa`` change the tuning of the
    scenario's (possibly overridden) law. ``omega`` is applied last and must be an
    integer multiple >= 2 of Omega.

    Raises:
        ParameterError: unknown key, bad value, or a merged config that fails validation
    """
    pairs = [parse_override(o) for o in overrides]
    data = scenario.dict()
    config = dict(data.pop("config"))
    tuning_changes: Dict[str, float] = {}
    custom = dict(data["custom"])
    omega: Optional[float] = None
    for key, value in pairs:
        if key in _CONFIG_KEYS:
            config[key] = _convert(key, value, _CONFIG_KEYS[key])
        elif key in _SCENARIO_KEYS:
            data[key] = _convert(key, value, _SCENARIO_KEYS[key])
        elif key in _TUNING_KEYS:
            tuning_changes["kappa" if key == "tuned_kappa" else key] = _convert(key, value, float)
        elif key in _CUSTOM_KEYS:
            custom[key.split(".", 1)[1]] = _convert(key, value, _CUSTOM_KEYS[key])
        elif key == "law":
            try:
                data["law"] = LawKind(value.lower())
            except ValueError as e:
                raise ParameterError(f"unknown law {value!r}") from e
        elif key == "x0":
            config["x0"] = _parse_vec(key, value)
        elif key == "target":
            v = _parse_vec(key, value)
            data["path"] = TargetPath.constant(v.x1, v.x2)
        elif key == "path":
            data["path"] = _parse_path(value)
        elif key == "compute_metrics":
            data["compute_metrics"] = _parse_bool(value)
        elif key == "omega":
            omega = _convert(key, value, float)
    if omega is not None:
        config["k"] = omega_to_k(omega, config["Omega"])
    law_id = LawKind(data["law"]).value
    if tuning_changes:
        current = dict(data["tuning"].get(law_id, {}))
        current.update(tuning_changes)
        data["tuning"] = {**data["tuning"], law_id: current}
    data["custom"] = custom
    try:
        return Scenario(config=SimConfig(**config), **data)
    except ValidationError as e:
        raise ParameterError(f"overrides produce an invalid scenario: {e}") from e


def _parse_vec(key: str, value: str) -> Vec2:
    try:
        return Vec2.parse(value)
    except (ValueError, ValidationError) as e:
        raise ParameterError(f"invalid vector {value!r} for {key}; expected a,b") from e


# Config files

def load_scenarios(path: Union[str, Path]) -> Dict[str, Scenario]:
    """
    Read scenarios from an INI-style file.

    Each ``[name]`` section holds flat ``key = value`` overrides. ``base`` names the
    built-in scenario the section starts from (default ``sim-moving``).

    Raises:
        ParameterError: unreadable file or invalid section
        ScenarioNotFoundError: unknown base
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ParameterError(f"cannot read scenario file {str(path)!r}: {e}") from e
    scenarios: Dict[str, Scenario] = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        base = items.pop("base", "sim-moving")
        start = scenarios[base] if base in scenarios else get_scenario(base)
        merged = apply_overrides(start, [f"{k}={v}" for k, v in items.items()])
        scenarios[section] = merged.copy(update={"name": section})
        logger.debug(f"Loaded scenario {section!r} from {path} (base {base!r})")
    logger.info(f"Loaded {len(scenarios)} scenario(s) from {path}")
    return scenarios


def resolve_scenario(ref: str, config_path: Optional[Union[str, Path]] = None) -> Scenario:
    """
    Scenario by id, looking in the config file first and then in the catalog.

    Raises:
        ScenarioNotFoundError: unknown id
    """
    if config_path is not None:
        loaded = load_scenarios(config_path)
        if ref in loaded:
            return loaded[ref]
    return get_scenario(ref)
