"""
Experiment and runner configuration for mtextremal.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Dict, List, Optional

import toml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.constants import ExponentConfig, ExponentRangeError, InvalidDimensionError, critical_config, make_config
from ..core.green.domains import DomainSpec
from ..core.radial import moser_index_limit
from ..utils.logging_setup import default_log_dir

COMMANDS = ("radial-max", "moser", "green-verify", "iso-check", "transplant", "domain2ball", "report")

TOLERANCE_DEFAULTS: Dict[str, float] = {
    "closed_form": 1e-10,
    "quadrature": 1e-6,
    "grid": 2e-2,
    "transplant_energy": 1e-3,
    "transplant_grid": 2e-2,
    "theorem": 1e-6,
    "energy_transfer": 1e-2,
    "concentration": 5e-2,
    "symmetrization": 1e-8,
    "solver": 1e-8,
    "gradient": 1e-5,
}

SEED_LIMIT = 2 ** 64


class DomainConfig(BaseModel):
    """Domain the Green-function commands work on."""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(default="centered_ball",
                      description="'centered_ball', 'shifted_ball', 'disk_grid' or 'square_grid'")
    radius: float = Field(default=1.0, description="Ball or disk radius")
    offset: float = Field(default=0.0, description="Distance of the singularity from the ball center")
    h: float = Field(default=1.0 / 64.0, description="Grid spacing of planar domains")
    half_width: float = Field(default=1.0, description="Half side length of the square grid")
    singularity: List[float] = Field(default_factory=lambda: [0.0, 0.0],
                                     description="Singularity of planar domains")

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("centered_ball", "shifted_ball", "disk_grid", "square_grid"):
            raise ValueError(f"unknown domain kind '{value}'")
        return value

    def to_domain(self, n: int) -> DomainSpec:
        """Build the domain specification in dimension n."""
        if self.kind == "centered_ball":
            return DomainSpec.centered_ball(n, self.radius)
        if self.kind == "shifted_ball":
            return DomainSpec.shifted_ball(n, self.offset, self.radius)
        if self.kind == "disk_grid":
            return DomainSpec.disk_grid(self.h, self.radius, tuple(self.singularity))
        return DomainSpec.square_grid(self.h, self.half_width, tuple(self.singularity))


class ResolutionConfig(BaseModel):
    """Grid and quadrature resolutions."""
    model_config = ConfigDict(extra="forbid")

    nodes: int = Field(default=512, description="Radial nodes of the maximizer grid")
    log_min: float = Field(default=-40.0, description="log of the smallest radius, before division by a")
    max_iter: int = Field(default=5000, description="Ascent iteration cap")
    restarts: int = Field(default=0, description="Random restarts of the ascent (needs a seed)")
    i_max: int = Field(default=8, ge=3, description="Largest Moser index of the concentration level")
    boundary_order: int = Field(default=4096, description="Level-set quadrature points")
    sample_h: Optional[float] = Field(default=None,
                                      description="Spacing for sampling two-dimensional balls on a grid")
    transplant_cases: int = Field(default=20, ge=1,
                                  description="Random (profile, offset, beta) triples of the transplant suite")
    symmetrization_cases: int = Field(default=200, ge=1, description="Random grids of the symmetrization suite")
    max_offset: float = Field(default=0.6, ge=0.0, lt=1.0,
                              description="Largest relative singularity offset drawn for transplanted balls")


class ExperimentConfig(BaseModel):
    """
    One experiment: the command, its exponents, domain, levels and tolerances.

    Round-trips losslessly through JSON; unknown fields are rejected.
    """
    model_config = ConfigDict(extra="forbid")

    command: str = Field(default="radial-max", description="Pipeline to run")
    n: int = Field(default=2, description="Dimension")
    alpha: Optional[float] = Field(default=None, description="Exponent alpha; critical when unset")
    beta: float = Field(default=0.0, description="Weight exponent beta")
    domain: DomainConfig = Field(default_factory=DomainConfig)
    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Overrides of TOLERANCE_DEFAULTS")
    out: str = Field(default="results", description="Output directory")
    seed: Optional[int] = Field(default=None, description="Seed of every randomized suite")
    t_levels: List[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0], description="Green levels t")
    r_levels: List[float] = Field(default_factory=lambda: [1.0], description="Radii r in (0, 1]")
    betas: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0],
                               description="Weight exponents of the isoperimetric chain")
    eps_list: List[float] = Field(default_factory=lambda: [1.0], description="Moser supports epsilon")
    indices: List[int] = Field(default_factory=lambda: [1, 2, 3], description="Moser indices")
    manifest: Optional[str] = Field(default=None, description="Domain-to-ball manifest to replay")
    format: str = Field(default="csv", description="'csv', 'json' or 'plot'")

    @field_validator("command")
    @classmethod
    def _known_command(cls, value: str) -> str:
        if value not in COMMANDS:
            raise ValueError(f"unknown command '{value}'")
        return value

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(value) - set(TOLERANCE_DEFAULTS))
        if unknown:
            raise ValueError(f"unknown tolerance names: {', '.join(unknown)}")
        return value

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and not (0 <= value < SEED_LIMIT):
            raise ValueError("seed must be an unsigned 64-bit integer")
        return value

    @field_validator("format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        if value not in ("csv", "json", "plot"):
            raise ValueError(f"unknown output format '{value}'")
        return value

    @model_validator(mode="after")
    def _representable_moser_indices(self) -> "ExperimentConfig":
        try:
            for eps in self.eps_list:
                top = moser_index_limit(eps, self.n)
                if self.resolution.i_max > top:
                    raise ValueError(f"resolution.i_max={self.resolution.i_max} exceeds {top}, the largest "
                                     f"representable Moser index for n={self.n}, eps={eps}")
        except (ExponentRangeError, InvalidDimensionError) as e:
            raise ValueError(str(e))
        return self

    def tolerance(self, name: str) -> float:
        """Override if present, default otherwise."""
        return self.tolerances.get(name, TOLERANCE_DEFAULTS[name])

    def exponent_config(self) -> ExponentConfig:
        if self.alpha is None:
            return critical_config(self.n, self.beta)
        return make_config(self.n, self.alpha, self.beta)

    def canonical_json(self) -> str:
        """Sorted, whitespace-free JSON of the fields that determine results."""
        data = self.model_dump(mode="json")
        data.pop("out", None)
        data.pop("format", None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate_json(f.read())


class LoggingSettings(BaseModel):
    """Logging settings of the command-line runner."""

    level: str = Field(default="INFO", description="Log level")
    console: bool = Field(default=True, description="Log to stderr")
    file: Optional[str] = Field(default=None, description="Log file; the data directory when unset")


class OutputSettings(BaseModel):
    """Output defaults of the command-line runner."""

    directory: str = Field(default="results", description="Default output directory")
    format: str = Field(default="csv", description="Default report format")


class RunnerSettings:
    """
    Persistent runner settings.

    Loaded from and saved to ``mtextremal.toml`` in the configuration directory.
    """

    def __init__(self, config_dir: Optional[Path] = None):
        """
        Initialize runner settings.

        Args:
            config_dir: Custom configuration directory. If None, uses default.
        """
        self.config_dir = config_dir or self._get_default_config_dir()
        self.config_file = self.config_dir / "mtextremal.toml"

        self.logging = LoggingSettings()
        self.output = OutputSettings()

        self.config_dir.mkdir(parents=True, exist_ok=True)
        self.load()

    def _get_default_config_dir(self) -> Path:
        if os.name == "posix":
            xdg_config = os.environ.get("XDG_CONFIG_HOME")
            if xdg_config:
                return Path(xdg_config) / "mtextremal"
            return Path.home() / ".config" / "mtextremal"
        return Path.home() / ".mtextremal"

    def load(self) -> None:
        """
        Load settings from the TOML file.

        Creates the default file if it doesn't exist.
        """
        if not self.config_file.exists():
            self.save()
            return

        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = toml.load(f)
            if "logging" in data:
                self.logging = LoggingSettings(**data["logging"])
            if "output" in data:
                self.output = OutputSettings(**data["output"])
        except Exception as e:
            print(f"Warning: Failed to load runner settings: {e}")

    def save(self) -> None:
        data = {
            "logging": self.logging.model_dump(exclude_none=True),
            "output": self.output.model_dump(),
        }
        try:
            with open(self.config_file, "w", encoding="utf-8") as f:
                toml.dump(data, f)
        except Exception as e:
            print(f"Warning: Failed to save runner settings: {e}")

    def log_path(self) -> Path:
        """Configured log file, or ``mtextremal.log`` in the default log directory."""
        if self.logging.file:
            return Path(self.logging.file).expanduser()
        return default_log_dir() / "mtextremal.log"
