"""Catalog of simulator-supported identifiers.

The catalog is configuration, not code: a JSON file lists the object classes,
built-in behaviors (with arities), weather literals, scenario parameters and
spatial specifier kinds the target simulator stack accepts. Validation runs
scripts against it so unsupported identifiers are caught before a simulator
ever sees them. Lookups are case-sensitive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

_REQUIRED_KEYS = (
    "object_classes", "builtin_behaviors", "weather_values",
    "param_names", "specifier_kinds",
)


class CatalogError(ValueError):
    """Raised for a malformed catalog file or dict."""


@dataclass(frozen=True)
class Catalog:
    object_classes: frozenset[str]
    builtin_behaviors: dict[str, int]  # name -> max positional arity
    weather_values: frozenset[str]
    param_names: frozenset[str]
    specifier_kinds: frozenset[str]

    def __post_init__(self) -> None:
        for key in _REQUIRED_KEYS:
            if not getattr(self, key):
                raise CatalogError(f"catalog set {key!r} must be non-empty")

    @classmethod
    def from_dict(cls, data: dict) -> "Catalog":
        unknown = set(data) - set(_REQUIRED_KEYS)
        if unknown:
            raise CatalogError(f"unknown catalog keys: {sorted(unknown)}")
        missing = set(_REQUIRED_KEYS) - set(data)
        if missing:
            raise CatalogError(f"missing catalog keys: {sorted(missing)}")
        behaviors = data["builtin_behaviors"]
        if not isinstance(behaviors, dict) or not all(
            isinstance(k, str) and isinstance(v, int) for k, v in behaviors.items()
        ):
            raise CatalogError("builtin_behaviors must map behavior name to integer arity")
        return cls(
            object_classes=frozenset(data["object_classes"]),
            builtin_behaviors=dict(behaviors),
            weather_values=frozenset(data["weather_values"]),
            param_names=frozenset(data["param_names"]),
            specifier_kinds=frozenset(data["specifier_kinds"]),
        )

    def to_dict(self) -> dict:
        return {
            "object_classes": sorted(self.object_classes),
            "builtin_behaviors": dict(sorted(self.builtin_behaviors.items())),
            "weather_values": sorted(self.weather_values),
            "param_names": sorted(self.param_names),
            "specifier_kinds": sorted(self.specifier_kinds),
        }


def load_catalog(path: Union[str, Path]) -> Catalog:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    return Catalog.from_dict(data)


def default_catalog() -> Catalog:
    """The catalog shipped with the package (CARLA-compatible subset)."""
    text = resources.files("dashsim.data").joinpath("catalog.json").read_text("utf-8")
    return Catalog.from_dict(json.loads(text))
