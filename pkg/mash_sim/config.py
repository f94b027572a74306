"""
Configuration management for the MASH simulator.
"""

import dataclasses
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .utils import InvalidParameterError

logger = logging.getLogger(__name__)

LMMSE_FORMS = ('large', 'small')


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters of one simulated uplink."""

    # Array and frame geometry
    bs_antennas: int = 64          # B
    num_ues: int = 16              # U
    jammer_antennas: int = 10      # I
    frame_len: int = 100           # L
    redundancy: int = 16           # R
    pilot_len: int = 16            # T

    # Link budget
    rho_db: float = 30.0
    snr_db: float = 10.0

    # Randomness and secrecy
    master_seed: int = 0
    codebook_refresh: bool = True
    secret: str = "mash-shared-secret"

    # Receiver options
    rank_factor: float = 2.0
    lmmse_form: str = "small"
    chest_noise_term: bool = False

    @property
    def data_len(self) -> int:
        """D = L - R - T."""
        return self.frame_len - self.redundancy - self.pilot_len

    @property
    def payload_len(self) -> int:
        """K = T + D = L - R."""
        return self.frame_len - self.redundancy

    @property
    def secret_bytes(self) -> bytes:
        return self.secret.encode('utf-8')

    def replace(self, **changes) -> "SystemConfig":
        """Copy with some fields changed."""
        return dataclasses.replace(self, **changes)

    def validate(self):
        """
        Check the scenario invariants.

        Raises:
            InvalidParameterError: naming the first violated invariant
        """
        counts = {
            'bs_antennas': self.bs_antennas,
            'num_ues': self.num_ues,
            'jammer_antennas': self.jammer_antennas,
            'frame_len': self.frame_len,
            'pilot_len': self.pilot_len,
        }
        for name, value in counts.items():
            if value < 1:
                raise InvalidParameterError(f"{name} must be positive, got {value}")

        if self.redundancy < 0:
            raise InvalidParameterError(f"redundancy must be non-negative, got {self.redundancy}")
        if self.pilot_len != self.num_ues:
            raise InvalidParameterError(
                f"pilot_len must equal num_ues (T = U), got T={self.pilot_len}, U={self.num_ues}")
        if self.data_len < 1:
            raise InvalidParameterError(
                f"R + T + D = L needs D >= 1, got L={self.frame_len}, R={self.redundancy}, T={self.pilot_len}")
        if self.jammer_antennas >= self.bs_antennas:
            raise InvalidParameterError(
                f"jammer_antennas must be below bs_antennas (I < B), got I={self.jammer_antennas}")
        if math.isnan(self.rho_db) or math.isinf(self.rho_db):
            raise InvalidParameterError(f"rho_db must be finite, got {self.rho_db}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise InvalidParameterError(f"snr_db must be a number or +inf, got {self.snr_db}")
        if self.rank_factor <= 0:
            raise InvalidParameterError(f"rank_factor must be positive, got {self.rank_factor}")
        if self.lmmse_form not in LMMSE_FORMS:
            raise InvalidParameterError(f"lmmse_form must be one of {LMMSE_FORMS}, got {self.lmmse_form!r}")


@dataclass(frozen=True)
class SweepDefaults:
    """Grid settings read from the config file alongside SystemConfig."""
    jammers: Tuple[str, ...] = ('barrage', 'data', 'pilot', 'sparse',
                                'eigenbeam', 'multidata', 'dynamic', 'repeat')
    receivers: Tuple[str, ...] = ('mash-l', 'baseline-lmmse', 'jammerless', 'unmitigated')
    snr_points_db: Tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    frames_per_point: int = 200
    parallelism: int = 4

    def validate(self):
        if self.frames_per_point < 1:
            raise InvalidParameterError(f"frames_per_point must be at least 1, got {self.frames_per_point}")
        if self.parallelism < 1:
            raise InvalidParameterError(f"parallelism must be at least 1, got {self.parallelism}")
        for name in ('jammers', 'receivers', 'snr_points_db'):
            if not getattr(self, name):
                raise InvalidParameterError(f"{name} must not be empty")


_TUPLE_FIELDS = {'jammers', 'receivers', 'snr_points_db'}
_SYSTEM_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)}
_SWEEP_FIELDS = {f.name for f in dataclasses.fields(SweepDefaults)}


class ConfigManager:
    """Load, override and validate the simulator configuration."""

    def __init__(self, config_path: Optional[Path] = None):
        """
        Initialize configuration manager.

        Args:
            config_path: Flat key/value file (.toml or .json); None keeps the defaults
        """
        self.config_path = Path(config_path) if config_path is not None else None
        self.config = SystemConfig()
        self.sweep = SweepDefaults()
        if self.config_path is not None:
            self.load_config()

    def load_config(self) -> bool:
        """
        Load configuration from file.

        Returns:
            True if the file was read

        Raises:
            InvalidParameterError: the file cannot be parsed
        """
        if self.config_path is None or not self.config_path.exists():
            logger.warning(f"Config file not found: {self.config_path}")
            return False

        try:
            if self.config_path.suffix == '.json':
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            else:
                with open(self.config_path, 'rb') as f:
                    data = tomllib.load(f)
        except (OSError, ValueError) as e:
            raise InvalidParameterError(f"cannot read config {self.config_path}: {e}") from e

        self.update_from_args(**data)
        logger.info(f"Loaded config: {self.config_path}")
        return True

    def update_from_args(self, **kwargs):
        """Apply overrides; ``None`` values mean "not given" and are skipped."""
        system_changes: Dict[str, Any] = {}
        sweep_changes: Dict[str, Any] = {}

        for key, value in kwargs.items():
            if value is None:
                continue
            if key in _TUPLE_FIELDS:
                value = tuple(value)
            if key in _SYSTEM_FIELDS:
                system_changes[key] = value
            elif key in _SWEEP_FIELDS:
                sweep_changes[key] = value
            else:
                logger.warning(f"Ignoring unknown config key: {key}")

        if 'snr_db' in system_changes:
            system_changes['snr_db'] = float(system_changes['snr_db'])
        if 'snr_points_db' in sweep_changes:
            sweep_changes['snr_points_db'] = tuple(float(v) for v in sweep_changes['snr_points_db'])

        self.config = dataclasses.replace(self.config, **system_changes)
        self.sweep = dataclasses.replace(self.sweep, **sweep_changes)

    def reset_to_defaults(self):
        """Reset configuration to default values."""
        self.config = SystemConfig()
        self.sweep = SweepDefaults()

    def validate_config(self) -> bool:
        """
        Validate configuration values.

        Returns:
            True if configuration is valid
        """
        try:
            self.config.validate()
            self.sweep.validate()
            return True
        except InvalidParameterError as e:
            logger.error(f"Invalid configuration: {e}")
            return False

    def as_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self.config)
        data.update(dataclasses.asdict(self.sweep))
        return data


# Preset configurations
PRESETS: Dict[str, Tuple[SystemConfig, SweepDefaults]] = {
    'full': (
        SystemConfig(),
        SweepDefaults(),
    ),

    'quick': (
        SystemConfig(),
        SweepDefaults(
            jammers=('barrage', 'pilot', 'multidata', 'repeat'),
            receivers=('mash-l', 'baseline-lmmse', 'unmitigated'),
            snr_points_db=(0.0, 10.0),
            frames_per_point=20,
        ),
    ),

    'acceptance': (
        SystemConfig(),
        SweepDefaults(
            jammers=('barrage', 'data', 'pilot', 'sparse', 'multidata', 'repeat'),
            receivers=('mash-l', 'baseline-lmmse'),
            snr_points_db=(5.0, 10.0, 15.0),
            frames_per_point=500,
            parallelism=8,
        ),
    ),
}


def apply_preset(manager: ConfigManager, preset_name: str) -> bool:
    """
    Apply a preset configuration.

    Args:
        manager: Manager whose settings are replaced
        preset_name: Name of the preset to apply

    Returns:
        True if preset applied successfully
    """
    if preset_name in PRESETS:
        manager.config, manager.sweep = PRESETS[preset_name]
        return True
    return False


def list_presets() -> List[str]:
    """Get list of available presets."""
    return list(PRESETS.keys())
