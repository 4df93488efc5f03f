"""Scenario and training configuration dataclasses plus the plain-text config reader."""

from __future__ import annotations

from dataclasses import dataclass, fields

from holab.errors import ConfigError


@dataclass
class ScenarioConfig:
    """Geometry, radio, traffic, and campaign parameters of one scenario.

    Distances in meters, powers in dBm, losses in dB, times in seconds,
    file size in bytes, carrier frequency in MHz.
    """

    inter_site_distance: float = 500.0
    num_sites: int = 7
    bandwidth_prb: int = 25
    enb_tx_power: float = 46.0
    ue_tx_power: float = 23.0
    enb_height: float = 30.0
    ue_height: float = 1.5
    carrier_freq: float = 2000.0
    antenna_beamwidth: float = 70.0
    antenna_max_atten: float = 20.0
    obstacle_height: float = 35.0
    obstacle_loss: float = 30.0
    num_obstacles: int = 10
    cluster_distance: float = 100.0
    cluster_diameter: float = 50.0
    ues_per_sector: int = 30
    ue_speed: float = 10.0
    sim_duration: float = 40.0
    sample_period: float = 0.2
    file_size: int = 1_500_000
    max_neighbors: int = 8
    num_runs: int = 20
    noise_figure: float = 9.0
    a2_threshold: float = -110.0
    obstacle_seed: int = 1

    @property
    def num_windows(self) -> int:
        return int(round(self.sim_duration / self.sample_period))

    @property
    def num_cells(self) -> int:
        return 3 * self.num_sites

    @property
    def num_ues(self) -> int:
        return self.ues_per_sector * self.num_cells

    def validate(self) -> None:
        if self.inter_site_distance <= 0:
            raise ConfigError("inter_site_distance must be > 0")
        if self.num_sites < 1:
            raise ConfigError("num_sites must be >= 1")
        if self.bandwidth_prb < 1:
            raise ConfigError("bandwidth_prb must be >= 1")
        if self.sample_period <= 0:
            raise ConfigError("sample_period must be > 0")
        n = self.sim_duration / self.sample_period
        if self.sim_duration <= 0 or abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ConfigError(
                "sample_period must divide sim_duration into a whole number of windows"
            )
        if self.max_neighbors < 1:
            raise ConfigError("max_neighbors must be >= 1")
        if self.cluster_diameter >= self.inter_site_distance:
            raise ConfigError("cluster_diameter must be smaller than inter_site_distance")
        if self.cluster_diameter <= 0:
            raise ConfigError("cluster_diameter must be > 0")
        if self.cluster_distance < 0:
            raise ConfigError("cluster_distance must be >= 0")
        if self.obstacle_height <= self.enb_height:
            raise ConfigError("obstacle_height must exceed enb_height for full blockage")
        if self.num_obstacles < 0:
            raise ConfigError("num_obstacles must be >= 0")
        if self.ues_per_sector < 1:
            raise ConfigError("ues_per_sector must be >= 1")
        if self.ue_speed < 0:
            raise ConfigError("ue_speed must be >= 0")
        if self.file_size < 1:
            raise ConfigError("file_size must be >= 1")
        if self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")
        if self.carrier_freq <= 0:
            raise ConfigError("carrier_freq must be > 0")
        if self.antenna_beamwidth <= 0:
            raise ConfigError("antenna_beamwidth must be > 0")


@dataclass
class TrainConfig:
    """Mini-batch training hyperparameters."""

    batch_size: int = 32
    epochs: int = 200
    lr: float = 1e-3
    validation_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in [0, 1)")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")


_SCENARIO_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)}
_TRAIN_FIELDS = {f.name: f.type for f in fields(TrainConfig)}


def _coerce(name: str, raw: str, typ: str):
    caster = int if typ == "int" else float
    try:
        value = caster(raw)
    except ValueError as exc:
        raise ConfigError(f"config key '{name}': cannot parse {raw!r} as {typ}") from exc
    return value


def parse_config_text(text: str) -> tuple[ScenarioConfig, TrainConfig]:
    """Parse `key = value` lines into the two config dataclasses.

    Blank lines and lines starting with '#' are ignored. Unknown keys are
    rejected with the list of valid keys.
    """
    scenario_kwargs: dict = {}
    train_kwargs: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in _SCENARIO_FIELDS:
            scenario_kwargs[key] = _coerce(key, raw, _SCENARIO_FIELDS[key])
        elif key in _TRAIN_FIELDS:
            train_kwargs[key] = _coerce(key, raw, _TRAIN_FIELDS[key])
        else:
            valid = ", ".join(sorted(list(_SCENARIO_FIELDS) + list(_TRAIN_FIELDS)))
            raise ConfigError(f"unknown config key '{key}'; valid keys: {valid}")
    scenario = ScenarioConfig(**scenario_kwargs)
    train = TrainConfig(**train_kwargs)
    scenario.validate()
    train.validate()
    return scenario, train


def load_config(path: str) -> tuple[ScenarioConfig, TrainConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
