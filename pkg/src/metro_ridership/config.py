"""Pipeline configuration: a flat JSON document.

Keys (all optional except the five input paths)::

    stations, edges, pois, population, ridership   input files
    out_dir          output directory (default "out")
    radius_m         catchment radius in metres (default 500)
    center           [lat, lon] of the city centre (default Taipei City Hall)
    weekdays         day names or numbers (Mon=0) counted as weekdays
    reference_date   ISO date for Days_open (default 2015-10-15)
    transforms       {column: "identity" | "log1p"}
    hub_ids          station ids for Trans_hub; null uses the is_hub column
    candidates       predictor columns offered to stepwise; null uses all 14
    cv_folds, cv_seed
    cooks_factor, studentized, leverage_factor   influence flag rules

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .features import DEFAULT_REFERENCE_DATE, FEATURE_COLUMNS, TRANSFORMS
from .network import TAIPEI_CITY_HALL
from .selection import DEFAULT_SEED

INPUT_KEYS = ("stations", "edges", "pois", "population", "ridership")
DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


@dataclass
class PipelineConfig:
    stations: Path | None = None
    edges: Path | None = None
    pois: Path | None = None
    population: Path | None = None
    ridership: Path | None = None
    out_dir: Path = Path("out")
    radius_m: float = 500.0
    center: tuple[float, float] = TAIPEI_CITY_HALL
    weekdays: tuple[int, ...] = (0, 1, 2, 3, 4)
    reference_date: dt.date = DEFAULT_REFERENCE_DATE
    transforms: dict[str, str] = field(default_factory=dict)
    hub_ids: tuple[str, ...] | None = None
    candidates: tuple[str, ...] | None = None
    cv_folds: int = 10
    cv_seed: int = DEFAULT_SEED
    cooks_factor: float = 4.0
    studentized: float = 2.0
    leverage_factor: float = 2.0


def _weekday(value) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"bad weekday {value!r}")
    if isinstance(value, int) and 0 <= value <= 6:
        return value
    if isinstance(value, str) and value[:3].lower() in DAY_NAMES:
        return DAY_NAMES.index(value[:3].lower())
    raise ConfigError(f"bad weekday {value!r}")


def config_from_dict(raw: dict, base_dir: Path | str = ".") -> PipelineConfig:
    """Build a config from parsed JSON; type errors raise ConfigError immediately."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base_dir = Path(base_dir)
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = PipelineConfig()
    try:
        for key in (*INPUT_KEYS, "out_dir"):
            if raw.get(key) is not None:
                setattr(cfg, key, base_dir / str(raw[key]))
        if "radius_m" in raw:
            cfg.radius_m = float(raw["radius_m"])
        if "center" in raw:
            lat, lon = raw["center"]
            cfg.center = (float(lat), float(lon))
        if "weekdays" in raw:
            cfg.weekdays = tuple(sorted({_weekday(d) for d in raw["weekdays"]}))
        if "reference_date" in raw:
            cfg.reference_date = dt.date.fromisoformat(raw["reference_date"])
        if "transforms" in raw:
            cfg.transforms = {str(k): str(v) for k, v in dict(raw["transforms"]).items()}
        if raw.get("hub_ids") is not None:
            cfg.hub_ids = tuple(str(s) for s in raw["hub_ids"])
        if raw.get("candidates") is not None:
            cfg.candidates = tuple(str(s) for s in raw["candidates"])
        for key in ("cv_folds", "cv_seed"):
            if key in raw:
                if isinstance(raw[key], bool) or not isinstance(raw[key], int):
                    raise ConfigError(f"{key} must be an integer")
                setattr(cfg, key, raw[key])
        for key in ("cooks_factor", "studentized", "leverage_factor"):
            if key in raw:
                setattr(cfg, key, math.inf if raw[key] is None else float(raw[key]))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, path.parent)


def validate_config(cfg: PipelineConfig) -> list[str]:
    """Every invariant violation, all at once. An empty list means valid."""
    errors = []
    paths = {}
    for key in INPUT_KEYS:
        p = getattr(cfg, key)
        if p is None:
            errors.append(f"{key}: input path is required")
        else:
            paths.setdefault(Path(p).resolve(), []).append(key)
    for keys in paths.values():
        if len(keys) > 1:
            errors.append(f"{', '.join(keys)}: input paths must be distinct")
    if not (math.isfinite(cfg.radius_m) and cfg.radius_m > 0):
        errors.append(f"radius_m: must be positive, got {cfg.radius_m}")
    lat, lon = cfg.center
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        errors.append(f"center: invalid coordinates {cfg.center}")
    if not cfg.weekdays:
        errors.append("weekdays: at least one weekday is required")
    elif len(cfg.weekdays) == 7:
        errors.append("weekdays: at least one day must count as weekend")
    if cfg.cv_folds < 2:
        errors.append(f"cv_folds: must be >= 2, got {cfg.cv_folds}")
    for name, kind in cfg.transforms.items():
        if name not in FEATURE_COLUMNS:
            errors.append(f"transforms: unknown column {name!r}")
        if kind not in TRANSFORMS:
            errors.append(f"transforms: unknown transform {kind!r} for {name!r}")
    if cfg.candidates is not None:
        bad = [c for c in cfg.candidates if c not in FEATURE_COLUMNS or c == "Trans_hub"]
        if bad:
            errors.append(f"candidates: not stepwise candidates: {bad}")
        if len(set(cfg.candidates)) != len(cfg.candidates):
            errors.append("candidates: duplicates")
    for key in ("cooks_factor", "studentized", "leverage_factor"):
        if not getattr(cfg, key) > 0:
            errors.append(f"{key}: must be positive")
    return errors
