"""
Run configuration: an INI file validated into pydantic models.

    [model]        nu, family, basis, dim, n        (nu is required)
    [data]         observations, targets, design_seed
    [sampler]      iters, burn_in, thin, seed, grid_size
    [estimation]   restarts, box_min, box_max, seed
    [prediction]   method, level, max_components
    [bench]        preset, scale, methods, n_designs, n_tests, seed, threads
    [output]       directory

Validation failures are raised as ConfigError pointing at the offending line.
"""

import configparser
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError
from src.models.enums import BasisKind, BenchScale, KernelFamily, Method
from src.storage.files import read_manifest

_METHOD_PATTERN = re.compile(r"^(mle|map|fpd|fixed:\s*[^,\s][^\s]*)$")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    nu: float = Field(..., gt=0)
    family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC
    basis: BasisKind = BasisKind.CONSTANT
    dim: Optional[int] = Field(None, ge=1, description="Input dimension when no data file is given.")
    n: Optional[int] = Field(None, ge=2, description="Random design size when no data file is given.")

    @field_validator("basis")
    @classmethod
    def _no_custom(cls, value: BasisKind) -> BasisKind:
        if value == BasisKind.CUSTOM:
            raise ValueError("custom bases cannot be declared in a config file")
        return value


class DataSection(_Section):
    observations: Optional[Path] = None
    targets: Optional[Path] = None
    design_seed: int = Field(0, ge=0)


class SamplerSection(_Section):
    iters: int = Field(6000, ge=2)
    burn_in: int = Field(1000, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    grid_size: Optional[int] = Field(None, ge=16)

    @model_validator(mode="after")
    def _burn_in(self) -> "SamplerSection":
        if self.burn_in >= self.iters:
            raise ValueError(f"burn_in ({self.burn_in}) must be smaller than iters ({self.iters})")
        return self


class EstimationSection(_Section):
    restarts: int = Field(10, ge=1)
    box_min: float = Field(1e-3, gt=0)
    box_max: float = Field(1e3, gt=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _box(self) -> "EstimationSection":
        if self.box_min >= self.box_max:
            raise ValueError("box_min must be smaller than box_max")
        return self


class PredictionSection(_Section):
    method: str = "fpd"
    level: float = Field(0.95, gt=0, lt=1)
    max_components: Optional[int] = Field(None, ge=1)

    @field_validator("method")
    @classmethod
    def _method(cls, value: str) -> str:
        value = value.strip().lower()
        if not _METHOD_PATTERN.match(value):
            raise ValueError(f"method must be mle, map, fpd or fixed:θ1,θ2,..., got '{value}'")
        return value


class BenchSection(_Section):
    preset: str = "ordinary"
    scale: BenchScale = BenchScale.DESK
    methods: Optional[List[Method]] = None
    n_designs: Optional[int] = Field(None, ge=1)
    n_tests: Optional[int] = Field(None, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("methods", mode="before")
    @classmethod
    def _split(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [m.strip().lower() for m in value.split(",") if m.strip()]
        return value


class OutputSection(_Section):
    directory: Path = Path("out")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSection
    data: DataSection = Field(default_factory=DataSection)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
    estimation: EstimationSection = Field(default_factory=EstimationSection)
    prediction: PredictionSection = Field(default_factory=PredictionSection)
    bench: BenchSection = Field(default_factory=BenchSection)
    output: OutputSection = Field(default_factory=OutputSection)


def _locate(text: str, section: Optional[str], key: Optional[str]) -> Tuple[Optional[int], Optional[int]]:
    """One-based (line, column) of `key` inside `[section]`, or of the section header."""
    if section is None:
        return None, None
    current = None
    header_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        match = re.match(r"^\[(.+)\]$", stripped)
        if match:
            current = match.group(1).strip().lower()
            if current == section:
                header_line = lineno
            continue
        if current != section or key is None or ("=" not in raw and ":" not in raw):
            continue
        name = re.split(r"[=:]", raw, maxsplit=1)[0].strip().lower()
        if name == key:
            sep = min(i for i in (raw.find("="), raw.find(":")) if i >= 0)
            value_col = sep + 1 + (len(raw[sep + 1 :]) - len(raw[sep + 1 :].lstrip()))
            return lineno, value_col + 1
    return header_line, 1 if header_line else None


def _parse(text: str, source: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}: entry before any [section]", line=e.lineno, column=1) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"{source}: duplicate section [{e.section}]", line=e.lineno, column=1) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigError(
            f"{source}: duplicate key '{e.option}' in [{e.section}]", line=e.lineno, column=1
        ) from e
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"{source}: cannot parse {line!r}", line=lineno, column=1) from e
    return {name.lower(): dict(parser.items(name)) for name in parser.sections()}


def _validation_error(e: ValidationError, text: str, source: str) -> ConfigError:
    err = e.errors()[0]
    loc = [str(part) for part in err["loc"]]
    section = loc[0] if loc else None
    key = loc[1] if len(loc) > 1 else None
    line, column = _locate(text, section, key)
    where = f"[{section}]" + (f" {key}" if key else "") if section else "config"
    return ConfigError(f"{source}: {where}: {err['msg']}", line=line, column=column)


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    sections = _parse(text, source)
    try:
        return RunConfig.model_validate(sections)
    except ValidationError as e:
        raise _validation_error(e, text, source) from e


def load_run_config(path: Path | str) -> RunConfig:
    """Read an INI file, or the config echo stored in a run manifest (.json)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        try:
            return RunConfig.model_validate(read_manifest(path).config)
        except ValidationError as e:
            raise ConfigError(f"{path}: manifest does not hold a valid run config: {e}") from e
    return parse_run_config(path.read_text(encoding="utf-8"), str(path))
