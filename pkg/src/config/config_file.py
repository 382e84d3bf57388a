"""Flat key=value training configuration files."""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from src.models.schemas import SensorConfig, TrainConfig

SENSOR_KEYS = {"tau", "epsilon", "sigma_w", "sigma_z", "noiseless"}
TRAIN_KEYS = {
    "N": "n_patterns",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "mode": "mode",
    "seed": "seed",
    "lr": "lr",
    "s_init": "s_init",
    "s_growth": "s_growth",
    "depth": "depth",
    "width": "width",
    "val_fraction": "val_fraction",
}
CONFIG_KEYS = tuple(TRAIN_KEYS) + tuple(sorted(SENSOR_KEYS))


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} not found")
    return parse_config_text(path.read_text(), str(path))


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def build_sensor_config(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> SensorConfig:
    merged = _merge(file_values, overrides)
    sensor: Dict[str, Any] = {k: v for k, v in merged.items() if k in SENSOR_KEYS}
    if "noiseless" in sensor:
        sensor["noiseless"] = _as_bool(sensor["noiseless"])
    if "seed" in merged:
        sensor["seed"] = merged["seed"]
    return SensorConfig(**sensor)


def _merge(file_values: Optional[Mapping[str, Any]], overrides: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """Overrides win; None means unset."""
    merged: Dict[str, Any] = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def build_train_config(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> TrainConfig:
    merged = _merge(file_values, overrides)
    train: Dict[str, Any] = {TRAIN_KEYS[k]: v for k, v in merged.items() if k in TRAIN_KEYS}
    return TrainConfig(sensor=build_sensor_config(merged), **train)


def format_train_config(cfg: TrainConfig) -> str:
    """Inverse of read_config_file for checkpoint directories."""
    lines = [
        f"N={cfg.n_patterns}",
        f"epochs={cfg.epochs}",
        f"batch_size={cfg.batch_size}",
        f"mode={cfg.mode}",
        f"seed={cfg.seed}",
        f"lr={cfg.lr!r}",
        f"s_init={cfg.s_init!r}",
        f"s_growth={cfg.s_growth!r}",
        f"depth={cfg.depth}",
        f"width={cfg.width}",
        f"val_fraction={cfg.val_fraction!r}",
        f"tau={cfg.sensor.tau!r}",
        f"epsilon={cfg.sensor.epsilon!r}",
        f"sigma_w={cfg.sensor.sigma_w!r}",
        f"sigma_z={cfg.sensor.sigma_z!r}",
        f"noiseless={str(cfg.sensor.noiseless).lower()}",
    ]
    return "\n".join(lines) + "\n"
