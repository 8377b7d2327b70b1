"""Pipeline configuration and its flat key-value file format.

The config file holds one ``section.key = value`` assignment per line;
blank lines and ``#`` comments are ignored. Sections map onto the parameter
dataclasses of the individual stages, so every threshold that a stage
exposes is reachable from the file without extra plumbing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from conflictkit.enhance import EnhanceParams
from conflictkit.metrics import PSD_A_MAX, MrctParams
from conflictkit.selection import SelectionConfig


class ConfigError(ValueError):
    """Unparseable or unknown configuration entry."""


@dataclass(frozen=True)
class PipelineConfig:
    """All stage parameters plus run-level paths, parallelism, and seed."""

    selection: SelectionConfig = field(default_factory=SelectionConfig)
    enhance: EnhanceParams = field(default_factory=EnhanceParams)
    mrct: MrctParams = field(default_factory=MrctParams)
    a_max: float = PSD_A_MAX    # m/s^2, PSD maximum acceptable deceleration
    input_dir: str = ""
    out_dir: str = "out"
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("pipeline.jobs must be at least 1")
        if self.input_dir and Path(self.input_dir).resolve() == Path(self.out_dir).resolve():
            raise ConfigError("input and output paths must be distinct")


_SECTIONS = {
    "selection": ("selection", SelectionConfig),
    "enhance": ("enhance", EnhanceParams),
    "mrct": ("mrct", MrctParams),
}

_RUN_KEYS = {
    "pipeline.input": ("input_dir", str),
    "pipeline.out": ("out_dir", str),
    "pipeline.jobs": ("jobs", int),
    "pipeline.seed": ("seed", int),
    "psd.a_max": ("a_max", float),
}


def _coerce(text: str, typ, where: str):
    if typ is bool:
        low = text.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{where}: {text!r} is not a boolean")
    try:
        return typ(text)
    except ValueError:
        raise ConfigError(f"{where}: {text!r} is not a {typ.__name__}") from None


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply ``section.key = value`` lines on top of a base configuration."""
    cfg = base or PipelineConfig()
    section_updates: dict[str, dict] = {}
    run_updates: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        where = f"config line {lineno} ({key})"
        if key in _RUN_KEYS:
            attr, typ = _RUN_KEYS[key]
            run_updates[attr] = _coerce(value, typ, where)
            continue
        if "." not in key:
            raise ConfigError(f"{where}: key is not dotted")
        section, name = key.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"{where}: unknown section {section!r}")
        attr, cls = _SECTIONS[section]
        try:
            fld = next(f for f in fields(cls) if f.name == name)
        except StopIteration:
            raise ConfigError(f"{where}: {cls.__name__} has no field {name!r}") from None
        typ = {"float": float, "int": int, "bool": bool, "str": str}.get(str(fld.type), float)
        section_updates.setdefault(attr, {})[name] = _coerce(value, typ, where)

    for attr, updates in section_updates.items():
        try:
            run_updates[attr] = replace(getattr(cfg, attr), **updates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return replace(cfg, **run_updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"), base)
