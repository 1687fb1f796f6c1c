"""Flat ``section.key = value`` experiment files.

Blank lines and ``#`` comments are ignored. Every key may appear once and
the line it came from is kept for error messages. Values stay strings
here; typing happens in :mod:`apps.experiments.forms`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from apps.core.exceptions import ConfigError

KEY_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*$")
TOP_LEVEL_KEY = "model"


def split_key(key: str) -> Tuple[str, str]:
    """``bc.degree.value`` -> (``bc``, ``degree_value``); ``model`` -> (``model``, ``name``)."""
    if key == TOP_LEVEL_KEY:
        return TOP_LEVEL_KEY, "name"
    head, _, rest = key.partition(".")
    if not rest:
        raise ConfigError("keys need a section prefix such as flow.dt.", key=key)
    return head, rest.replace(".", "_")


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list, np.ndarray)):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, Path):
        return str(value)
    return str(value)


@dataclass(frozen=True)
class ConfigFile:
    values: Dict[str, str]
    lines: Dict[str, Optional[int]] = field(default_factory=dict)
    source: str = "<config>"

    def line_of(self, key: str) -> Optional[int]:
        return self.lines.get(key)

    def keys_in(self, section: str) -> Tuple[str, ...]:
        return tuple(k for k in self.values if split_key(k)[0] == section)

    def section(self, name: str) -> Dict[str, str]:
        """Raw values of one section keyed by form field name."""
        return {split_key(k)[1]: v for k, v in self.values.items() if split_key(k)[0] == name}

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, key=key, line=self.line_of(key))

    def with_overrides(self, assignments: Iterable[str]) -> "ConfigFile":
        """Apply ``key=value`` strings from the command line; they carry no line."""
        values = dict(self.values)
        lines = dict(self.lines)
        for item in assignments:
            key, sep, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not KEY_RE.match(key) or not value:
                raise ConfigError(f"override {item!r} must look like key=value.", key=key or None)
            split_key(key)
            values[key] = value
            lines[key] = None
        return ConfigFile(values=values, lines=lines, source=self.source)


def parse_config(text: str, source: str = "<config>") -> ConfigFile:
    values: Dict[str, str] = {}
    lines: Dict[str, Optional[int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}.", key=key or None, line=number)
        if not KEY_RE.match(key):
            raise ConfigError("malformed key.", key=key, line=number)
        if not value:
            raise ConfigError("missing value.", key=key, line=number)
        if key in values:
            raise ConfigError(f"duplicate key, first set on line {lines[key]}.", key=key, line=number)
        split_key(key)
        values[key] = value
        lines[key] = number
    return ConfigFile(values=values, lines=lines, source=source)


def read_config(path: Union[str, Path]) -> ConfigFile:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def serialize_config(values: Mapping[str, Any]) -> str:
    """One ``key = value`` line per entry; floats keep 17 significant digits."""
    return "".join(f"{key} = {format_value(value)}\n" for key, value in values.items())
