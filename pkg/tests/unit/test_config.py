"""
Unit tests for experiment and runner configuration.
"""

import json
import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

from mtextremal.config.experiment_config import (
    TOLERANCE_DEFAULTS,
    DomainConfig,
    ExperimentConfig,
    LoggingSettings,
    OutputSettings,
    ResolutionConfig,
    RunnerSettings,
)
from mtextremal.core.green import GreenVariant


class TestDomainConfig:
    """Test DomainConfig model."""

    def test_default_values(self):
        """Test DomainConfig default values."""
        config = DomainConfig()
        assert config.kind == "centered_ball"
        assert config.radius == 1.0
        assert config.offset == 0.0
        assert config.h == 1.0 / 64.0

    def test_unknown_kind(self):
        """Test that unknown domain kinds are rejected."""
        with pytest.raises(ValidationError):
            DomainConfig(kind="annulus")

    def test_to_domain(self):
        """Test building domain specifications."""
        assert DomainConfig().to_domain(3).variant == GreenVariant.CENTERED_BALL
        shifted = DomainConfig(kind="shifted_ball", offset=0.4).to_domain(2)
        assert shifted.variant == GreenVariant.SHIFTED_BALL
        assert shifted.offset.tolist() == [0.4, 0.0]
        square = DomainConfig(kind="square_grid", h=0.25).to_domain(2)
        assert square.variant == GreenVariant.PLANAR_GRID


class TestResolutionConfig:
    """Test ResolutionConfig model."""

    def test_default_values(self):
        """Test ResolutionConfig default values."""
        config = ResolutionConfig()
        assert config.nodes == 512
        assert config.log_min == -40.0
        assert config.i_max == 8
        assert config.sample_h is None
        assert config.transplant_cases == 20
        assert config.symmetrization_cases == 200
        assert config.max_offset == 0.6

    @pytest.mark.parametrize("field,value", [("i_max", 2), ("transplant_cases", 0), ("max_offset", 1.0)])
    def test_bounds(self, field, value):
        """Test the lower and upper bounds of resolution fields."""
        with pytest.raises(ValidationError):
            ResolutionConfig(**{field: value})


class TestExperimentConfig:
    """Test ExperimentConfig model."""

    def test_default_values(self):
        """Test ExperimentConfig default values."""
        config = ExperimentConfig()
        assert config.command == "radial-max"
        assert config.n == 2
        assert config.alpha is None
        assert config.seed is None
        assert config.format == "csv"

    def test_unknown_fields(self):
        """Test that unknown fields are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig(dimension=3)

    def test_unknown_command(self):
        """Test that unknown commands are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig(command="solve")

    def test_unknown_tolerance(self):
        """Test that unknown tolerance names are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig(tolerances={"nonsense": 1.0})

    @pytest.mark.parametrize("seed", [-1, 2 ** 64])
    def test_seed_range(self, seed):
        """Test that seeds must be unsigned 64-bit integers."""
        with pytest.raises(ValidationError):
            ExperimentConfig(seed=seed)

    def test_unrepresentable_moser_index(self):
        """Test that i_max above the largest representable plateau index is rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig(resolution=ResolutionConfig(i_max=12))
        config = ExperimentConfig(n=3, resolution=ResolutionConfig(i_max=12))
        assert config.resolution.i_max == 12

    def test_eps_out_of_range(self):
        """Test that Moser supports outside (0, 1] are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig(eps_list=[1.5])

    def test_tolerance_lookup(self):
        """Test overrides and defaults."""
        config = ExperimentConfig(tolerances={"grid": 0.05})
        assert config.tolerance("grid") == 0.05
        assert config.tolerance("quadrature") == TOLERANCE_DEFAULTS["quadrature"]

    def test_exponent_config(self):
        """Test the critical default and explicit exponents."""
        critical = ExperimentConfig(n=2, beta=1.0).exponent_config()
        assert critical.critical
        explicit = ExperimentConfig(n=2, alpha=3.0, beta=0.0).exponent_config()
        assert explicit.alpha == 3.0
        assert not explicit.critical

    def test_json_round_trip(self):
        """Test a lossless JSON round trip."""
        config = ExperimentConfig(command="iso-check", n=3, beta=0.5, seed=7,
                                  domain=DomainConfig(kind="shifted_ball", offset=0.3),
                                  tolerances={"theorem": 1e-8})
        assert ExperimentConfig.model_validate_json(config.model_dump_json()) == config

    def test_hash_ignores_output(self):
        """Test that the output directory and format do not change the hash."""
        first = ExperimentConfig(out="a", format="csv")
        second = ExperimentConfig(out="b", format="json")
        assert first.config_hash() == second.config_hash()
        assert len(first.config_hash()) == 64

    def test_hash_tracks_content(self):
        """Test that result-relevant fields change the hash."""
        assert ExperimentConfig(seed=1).config_hash() != ExperimentConfig(seed=2).config_hash()

    def test_canonical_json(self):
        """Test sorted, compact canonical JSON."""
        text = ExperimentConfig().canonical_json()
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert "out" not in data and "format" not in data
        assert ": " not in text

    def test_from_file(self, tmp_path):
        """Test loading from a JSON file."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"command": "moser", "n": 3, "indices": [1, 2]}), encoding="utf-8")
        config = ExperimentConfig.from_file(path)
        assert config.command == "moser"
        assert config.indices == [1, 2]


class TestRunnerSettings:
    """Test RunnerSettings class."""

    def test_initialization_with_temp_dir(self):
        """Test RunnerSettings initialization with temporary directory."""
        with tempfile.TemporaryDirectory() as temp_dir:
            config_dir = Path(temp_dir) / "mtextremal_test"
            settings = RunnerSettings(config_dir=config_dir)

            assert settings.config_dir.exists()
            assert settings.config_file.exists()
            assert isinstance(settings.logging, LoggingSettings)
            assert isinstance(settings.output, OutputSettings)

    def test_save_and_load(self):
        """Test that saved settings are read back."""
        with tempfile.TemporaryDirectory() as temp_dir:
            config_dir = Path(temp_dir) / "mtextremal_test"
            settings = RunnerSettings(config_dir=config_dir)
            settings.logging.level = "DEBUG"
            settings.output.format = "json"
            settings.save()

            reloaded = RunnerSettings(config_dir=config_dir)
            assert reloaded.logging.level == "DEBUG"
            assert reloaded.output.format == "json"

    def test_corrupt_file(self, capsys):
        """Test that an unreadable file keeps the defaults."""
        with tempfile.TemporaryDirectory() as temp_dir:
            config_dir = Path(temp_dir)
            (config_dir / "mtextremal.toml").write_text("[logging\nlevel=", encoding="utf-8")
            settings = RunnerSettings(config_dir=config_dir)
            assert settings.logging.level == "INFO"
            assert "Warning" in capsys.readouterr().out

    def test_log_path_configured(self, tmp_path):
        """Test that a configured log file is used as given."""
        settings = RunnerSettings(config_dir=tmp_path / "config")
        settings.logging.file = str(tmp_path / "runs.log")
        assert settings.log_path() == tmp_path / "runs.log"

    def test_log_path_default(self, tmp_path, monkeypatch):
        """Test the default log file under the data directory."""
        monkeypatch.setenv("XDG_DATA_HOME", str(tmp_path / "data"))
        settings = RunnerSettings(config_dir=tmp_path / "config")
        assert settings.log_path() == tmp_path / "data" / "mtextremal" / "logs" / "mtextremal.log"
