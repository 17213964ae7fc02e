"""Key/value text configs for scenarios and batch experiments.

Config files are line oriented: ``key value [value ...]``, ``#`` starts a
comment.  Powers are given in dBm in the files and converted to watts at
this boundary only; everything downstream works in watts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

SPEED_OF_LIGHT = 299792458.0

SCHEMES = (
    "RA-AO-ClosedForm-I",
    "RA-AO-BruteForce-II",
    "OA-HBF",
    "CosA-HBF",
)

SWEEP_AXES = ("power_dbm", "beta_tilde", "n_rf", "n_t")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watt_to_dbm(watt: float) -> float:
    import math

    if watt <= 0:
        raise ConfigError("power must be positive to express in dBm")
    return 10.0 * math.log10(watt / 1e-3)


@dataclass
class ScenarioConfig:
    """Scenario template: fixed geometry plus ranges for randomized draws.

    Defaults mirror the standard desk-scale setup: a 4x4 transmit and
    receive array at 3 GHz with 5 mm element spacing, harmonic window of
    degree 2, 64-pattern candidate library, -94 dBm noise, -30 dBm transmit
    power, and a communication weight of 5e-3.  Placement ranges are
    artifact choices documented here rather than physical constants.
    """

    nt_x: int = 4
    nt_y: int = 4
    nr_x: int = 4
    nr_y: int = 4
    carrier_ghz: float = 3.0
    spacing_m: float = 0.005
    n_cu: int = 1
    n_tar: int = 1
    n_scat: int = 2
    paths_per_cu: int = 5
    pathloss_exponent: float = 2.0
    noise_dbm: float = -94.0
    power_dbm: float = -30.0
    beta_tilde: float = 5e-3
    n_rf: int = 2
    truncation_degree: int = 2
    library_size: int = 64
    library_seed: int = 7
    cu_range_m: tuple[float, float] = (10.0, 30.0)
    target_range_m: tuple[float, float] = (3.0, 7.0)
    scatterer_range_m: tuple[float, float] = (3.0, 7.0)
    target_rcs_m2: tuple[float, float] = (10.0, 100.0)
    scatterer_rcs_m2: tuple[float, float] = (10.0, 100.0)
    trials: int = 1

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)

    @property
    def noise_power(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    @property
    def power_budget(self) -> float:
        return dbm_to_watt(self.power_dbm)

    def validate(self) -> None:
        if self.nt_x < 1 or self.nt_y < 1 or self.nr_x < 1 or self.nr_y < 1:
            raise ConfigError("array dimensions must be at least 1")
        if self.n_cu < 0 or self.n_tar < 1 or self.n_scat < 0:
            raise ConfigError("entity counts invalid (need at least one target)")
        if self.paths_per_cu < 1:
            raise ConfigError("each user needs at least one path")
        if not 0.0 <= self.beta_tilde <= 1.0:
            raise ConfigError("beta_tilde must lie in [0, 1]")
        if self.n_rf < 1:
            raise ConfigError("need at least one RF chain")
        if self.truncation_degree < 0:
            raise ConfigError("truncation degree must be nonnegative")
        if self.library_size < 1:
            raise ConfigError("library must hold at least one pattern")
        if self.trials < 1:
            raise ConfigError("trial count must be positive")
        for name in (
            "cu_range_m",
            "target_range_m",
            "scatterer_range_m",
            "target_rcs_m2",
            "scatterer_rcs_m2",
        ):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise ConfigError(f"{name} must satisfy 0 < min <= max")


@dataclass
class ExperimentConfig:
    """One batch experiment: schemes x sweep values x Monte-Carlo trials."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    schemes: tuple[str, ...] = SCHEMES
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()
    trials: int = 1
    seed: int = 0
    out_dir: str = "results"

    def validate(self) -> None:
        self.scenario.validate()
        if not self.schemes:
            raise ConfigError("scheme list must be nonempty")
        for scheme in self.schemes:
            if scheme not in SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
            if not self.sweep_values:
                raise ConfigError("sweep_values required when sweep_axis is set")
        if self.trials < 1:
            raise ConfigError("trial count must be positive")


# -- parsing ------------------------------------------------------------------

_SCALAR_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)}
_RANGE_KEYS = {
    "cu_range_m",
    "target_range_m",
    "scatterer_range_m",
    "target_rcs_m2",
    "scatterer_rcs_m2",
}
_INT_KEYS = {
    "nt_x",
    "nt_y",
    "nr_x",
    "nr_y",
    "n_cu",
    "n_tar",
    "n_scat",
    "paths_per_cu",
    "n_rf",
    "truncation_degree",
    "library_size",
    "library_seed",
    "trials",
}


def _tokenize(path) -> list[tuple[int, str, list[str]]]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            entries.append((lineno, parts[0], parts[1:]))
    return entries


def _apply_scenario_key(cfg: ScenarioConfig, key: str, values: list[str], where: str) -> bool:
    if key not in _SCALAR_FIELDS:
        return False
    try:
        if key in _RANGE_KEYS:
            if len(values) != 2:
                raise ConfigError(f"{where}: {key} expects 'min max'")
            setattr(cfg, key, (float(values[0]), float(values[1])))
        elif key in _INT_KEYS:
            if len(values) != 1:
                raise ConfigError(f"{where}: {key} expects one value")
            setattr(cfg, key, int(values[0]))
        else:
            if len(values) != 1:
                raise ConfigError(f"{where}: {key} expects one value")
            setattr(cfg, key, float(values[0]))
    except ValueError as exc:
        raise ConfigError(f"{where}: {key}: {exc}") from exc
    return True


def load_scenario_config(path) -> ScenarioConfig:
    cfg = ScenarioConfig()
    for lineno, key, values in _tokenize(path):
        if not _apply_scenario_key(cfg, key, values, f"{path}:{lineno}"):
            raise ConfigError(f"{path}:{lineno}: unknown scenario key {key!r}")
    cfg.validate()
    return cfg


def load_experiment_config(path) -> ExperimentConfig:
    """Parse an experiment config; scenario keys may appear inline or via
    a ``scenario <path>`` include (resolved relative to the config file)."""
    import os

    exp = ExperimentConfig()
    scenario = ScenarioConfig()
    for lineno, key, values in _tokenize(path):
        where = f"{path}:{lineno}"
        if key == "scenario":
            if len(values) != 1:
                raise ConfigError(f"{where}: scenario expects a file path")
            include = values[0]
            if not os.path.isabs(include):
                include = os.path.join(os.path.dirname(os.path.abspath(path)), include)
            scenario = load_scenario_config(include)
        elif key == "schemes":
            if not values:
                raise ConfigError(f"{where}: schemes expects at least one name")
            exp.schemes = tuple(values)
        elif key == "sweep_axis":
            if len(values) != 1:
                raise ConfigError(f"{where}: sweep_axis expects one name")
            exp.sweep_axis = values[0]
        elif key == "sweep_values":
            try:
                exp.sweep_values = tuple(float(v) for v in values)
            except ValueError as exc:
                raise ConfigError(f"{where}: sweep_values: {exc}") from exc
        elif key == "trials":
            exp.trials = int(values[0])
        elif key == "seed":
            exp.seed = int(values[0])
        elif key == "out_dir":
            exp.out_dir = values[0]
        elif _apply_scenario_key(scenario, key, values, where):
            pass
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    exp.scenario = scenario
    exp.validate()
    return exp


def scenario_with_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Scenario template with one sweep axis overridden."""
    if axis == "power_dbm":
        return replace(cfg, power_dbm=float(value))
    if axis == "beta_tilde":
        return replace(cfg, beta_tilde=float(value))
    if axis == "n_rf":
        return replace(cfg, n_rf=int(value))
    if axis == "n_t":
        # keep a planar layout: factor N_T as close to square as possible
        import math

        n_t = int(value)
        nx = max(1, int(math.isqrt(n_t)))
        while n_t % nx != 0:
            nx -= 1
        return replace(cfg, nt_x=nx, nt_y=n_t // nx)
    raise ConfigError(f"unknown sweep axis {axis!r}")
