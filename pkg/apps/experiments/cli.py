"""Shared pieces of the experiment management commands."""
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional, Tuple

from django.core.management.base import CommandError

from apps.core.constants import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_NUMERICAL_ERROR
from apps.core.exceptions import (
    ConfigError,
    CouplingError,
    FieldError,
    MeshError,
    MeshFormatError,
    NumericalError,
)

from .configfile import ConfigFile, read_config
from .forms import ExperimentConfig, validate_config
from .registry import EXPERIMENTS, canned_config


def load_config(target: str, overrides: Optional[Iterable[str]] = None) -> ExperimentConfig:
    """A config file path or the name of a canned experiment, with ``--set`` overrides applied."""
    path = Path(target)
    if path.exists():
        config: ConfigFile = read_config(path)
        name = path.stem
    elif target in EXPERIMENTS:
        config = canned_config(target)
        name = target
    else:
        raise FileNotFoundError(f"No config file or canned experiment named {target!r}.")
    if overrides:
        config = config.with_overrides(overrides)
    return validate_config(config, name=name)


def exit_code(exc: Exception) -> Tuple[int, str]:
    if isinstance(exc, (MeshFormatError, OSError)):
        return EXIT_IO_ERROR, "I/O error"
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL_ERROR, "Numerical failure"
    return EXIT_CONFIG_ERROR, "Configuration error"


@contextmanager
def command_errors():
    """Translate library exceptions into ``CommandError`` with the matching exit status."""
    try:
        yield
    except (ConfigError, MeshError, FieldError, CouplingError, NumericalError, OSError) as exc:
        code, what = exit_code(exc)
        raise CommandError(f"{what}: {exc}", returncode=code)
