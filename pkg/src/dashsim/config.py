"""Pipeline configuration: one TOML document, strictly validated.

Unknown sections or keys are rejected so typos fail loudly. Values can be
overridden through environment variables named
``DASHSIM_<SECTION>__<KEY>`` (for example ``DASHSIM_LOOP__MAX_ITERATIONS=3``);
threshold overrides use the feature id as the key. Relative paths are
resolved against the config file's directory. The loaded configuration is
snapshotted verbatim into every run manifest so runs are reproducible.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "DASHSIM_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "mock"  # "mock" or "http"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    script_model: str = "gpt-4o"
    feature_model: str = "gpt-4o"
    credential_env: str = "DASHSIM_API_KEY"
    script_temperature: float = 0.2
    feature_temperature: float = 0.0
    retry_cap: int = 3
    deadline_s: float = 60.0
    backoff_base_s: float = 0.5
    max_in_flight: int = 4


@dataclass(frozen=True)
class FramesConfig:
    count: int = 10
    max_dim: int = 512
    jpeg_quality: int = 85
    probe_command: str = "dashsim-videotool probe {input}"
    extract_command: str = "dashsim-videotool extract-batch {input} {indices} {output_dir}"


@dataclass(frozen=True)
class LoopConfig:
    max_iterations: int = 5
    repair_attempts: int = 1
    batch_parallelism: int = 2


@dataclass(frozen=True)
class SimulatorConfig:
    backend: str = "mock"  # "mock" or "external"
    shim_command: str = "carla-shim"
    max_sim_seconds: float = 20.0


@dataclass(frozen=True)
class PathsConfig:
    fixtures_dir: Optional[Path] = None
    catalog_file: Optional[Path] = None
    runs_dir: Path = Path("runs")


@dataclass(frozen=True)
class PipelineConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    frames: FramesConfig = field(default_factory=FramesConfig)
    thresholds: dict[str, float] = field(default_factory=dict)
    loop: LoopConfig = field(default_factory=LoopConfig)
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def to_dict(self) -> dict:
        return {
            "gateway": _section_dict(self.gateway),
            "frames": _section_dict(self.frames),
            "thresholds": dict(self.thresholds),
            "loop": _section_dict(self.loop),
            "simulator": _section_dict(self.simulator),
            "paths": {
                "fixtures_dir": _opt_str(self.paths.fixtures_dir),
                "catalog_file": _opt_str(self.paths.catalog_file),
                "runs_dir": str(self.paths.runs_dir),
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Optional[Path] = None,
                  check_paths: bool = True) -> "PipelineConfig":
        return _build_config(dict(data), base_dir or Path.cwd(), check_paths)


_SECTIONS = {
    "gateway": GatewayConfig,
    "frames": FramesConfig,
    "loop": LoopConfig,
    "simulator": SimulatorConfig,
}
_PATH_KEYS = ("fixtures_dir", "catalog_file", "runs_dir")


def load_config(path: Union[str, Path],
                env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Load, override from the environment, validate."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    data = _apply_env_overrides(data, env if env is not None else os.environ)
    return _build_config(data, path.parent.resolve(), check_paths=True)


def default_config() -> PipelineConfig:
    return PipelineConfig()


def _apply_env_overrides(data: dict, env: Mapping[str, str]) -> dict:
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section_part, _, key_part = name[len(ENV_PREFIX):].partition("__")
        section = section_part.lower()
        if section not in (*_SECTIONS, "thresholds", "paths"):
            continue
        key = key_part.lower()
        data.setdefault(section, {})[key] = _coerce(env[name])
    return data


def _coerce(raw: str) -> Any:
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def _build_config(data: dict, base_dir: Path, check_paths: bool) -> PipelineConfig:
    unknown = set(data) - set(_SECTIONS) - {"thresholds", "paths"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    sections: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"config section [{name}] must be a table")
        fields = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - fields
        if bad:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
        try:
            sections[name] = cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"invalid [{name}] section: {exc}") from exc

    thresholds = data.get("thresholds", {})
    if not isinstance(thresholds, dict):
        raise ConfigError("config section [thresholds] must be a table")
    for fid, tau in thresholds.items():
        if not isinstance(tau, (int, float)) or not 0.0 < float(tau) <= 1.0:
            raise ConfigError(f"threshold for {fid!r} must be a number in (0, 1]")

    raw_paths = data.get("paths", {})
    if not isinstance(raw_paths, dict):
        raise ConfigError("config section [paths] must be a table")
    bad = set(raw_paths) - set(_PATH_KEYS)
    if bad:
        raise ConfigError(f"unknown keys in [paths]: {sorted(bad)}")
    paths = PathsConfig(
        fixtures_dir=_resolve(raw_paths.get("fixtures_dir"), base_dir),
        catalog_file=_resolve(raw_paths.get("catalog_file"), base_dir),
        runs_dir=_resolve(raw_paths.get("runs_dir"), base_dir) or (base_dir / "runs"),
    )

    gateway: GatewayConfig = sections["gateway"]
    if gateway.backend not in ("mock", "http"):
        raise ConfigError(f"gateway.backend must be 'mock' or 'http', got {gateway.backend!r}")
    simulator: SimulatorConfig = sections["simulator"]
    if simulator.backend not in ("mock", "external"):
        raise ConfigError(
            f"simulator.backend must be 'mock' or 'external', got {simulator.backend!r}"
        )

    config = PipelineConfig(
        gateway=gateway,
        frames=sections["frames"],
        thresholds={str(k): float(v) for k, v in thresholds.items()},
        loop=sections["loop"],
        simulator=simulator,
        paths=paths,
    )
    if check_paths:
        _check_paths(config)
    return config


def _check_paths(config: PipelineConfig) -> None:
    if config.paths.fixtures_dir is not None and not config.paths.fixtures_dir.is_dir():
        raise ConfigError(f"paths.fixtures_dir does not exist: {config.paths.fixtures_dir}")
    if config.paths.catalog_file is not None and not config.paths.catalog_file.is_file():
        raise ConfigError(f"paths.catalog_file does not exist: {config.paths.catalog_file}")
    config.paths.runs_dir.mkdir(parents=True, exist_ok=True)


def _resolve(value: Optional[str], base_dir: Path) -> Optional[Path]:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else (base_dir / path).resolve()


def _section_dict(section: Any) -> dict:
    return {name: getattr(section, name) for name in section.__dataclass_fields__}


def _opt_str(value: Optional[Path]) -> Optional[str]:
    return None if value is None else str(value)
