"""
Unit tests for radial profiles, functionals and rearrangement.
"""

import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from mtextremal.core.constants import ExponentRangeError, critical_config, make_config
from mtextremal.core.radial import (
    ProfileError,
    RadialProfile,
    concentration_metric,
    decreasing_rearrangement,
    default_grid,
    dirichlet_energy,
    energy_outside,
    energy_where,
    from_function,
    functional_eval,
    moser_plateau_limit,
    moser_profile,
    plateau_radius,
    random_profile,
    superlevel_measure,
    transform_Ta,
)


def bump_profile(n: int = 2) -> RadialProfile:
    """Non-monotone profile with a ring of height 2 around a value 1 at the center."""
    grid = default_grid(64, -6.0)
    with np.errstate(divide="ignore"):
        x = np.log(np.maximum(grid, 1e-300))
    values = 1.0 + np.exp(-((x + 2.0) ** 2))
    values[0] = 1.0
    values[-1] = 0.0
    values[-8:-1] = np.linspace(values[-9], 0.0, 9)[1:-1]
    return RadialProfile(n, grid, values)


class TestRadialProfile:
    """Test RadialProfile validation and helpers."""

    def test_invalid_profiles(self):
        """Test that broken invariants raise ProfileError."""
        grid = default_grid(32)
        values = np.linspace(1.0, 0.0, 32)
        with pytest.raises(ProfileError):
            RadialProfile(2, grid[1:], values[1:])
        with pytest.raises(ProfileError):
            RadialProfile(2, grid, values + 1.0)
        with pytest.raises(ProfileError):
            RadialProfile(2, grid, -values)
        with pytest.raises(ProfileError):
            RadialProfile(2, grid[:8], values[:8])
        with pytest.raises(ProfileError):
            RadialProfile(2, grid, values, core_power=0.0)

    def test_evaluate_core_cell(self):
        """Test the power law on the innermost cell."""
        grid = default_grid(32, -4.0)
        values = np.linspace(2.0, 0.0, 32)
        p = RadialProfile(2, grid, values, core_power=2.0)
        r1 = grid[1]
        expected = values[0] + (values[1] - values[0]) * 0.25
        assert p.evaluate(0.5 * r1)[0] == pytest.approx(expected)
        assert p.evaluate(2.0)[0] == 0.0

    def test_normalized(self):
        """Test rescaling to unit energy."""
        p = from_function(3, lambda r: 1.0 - r, default_grid(64, -5.0))
        assert dirichlet_energy(p.normalized()) == pytest.approx(1.0, abs=1e-12)

    def test_json_round_trip(self):
        """Test saving and loading a profile."""
        p = moser_profile(2, 0.5, 2)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "profile.json"
            p.save_json(path)
            with open(path) as f:
                q = RadialProfile.from_json(json.load(f))
        assert np.array_equal(p.grid, q.grid)
        assert np.array_equal(p.values, q.values)
        assert q.core_power == p.core_power

    def test_csv_header(self):
        """Test the profile CSV layout."""
        p = moser_profile(1, 1.0, 2)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "profile.csv"
            p.save_csv(path)
            lines = path.read_text().split("\n")
        assert lines[0] == "r,u"
        assert len([line for line in lines if line]) == p.grid.size + 1


class TestMoserProfile:
    """Test the Moser concentrating family."""

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
    def test_unit_energy(self, n, eps):
        """Test |energy - 1| <= 1e-10 for i = 1..10."""
        for i in range(1, 11):
            assert abs(dirichlet_energy(moser_profile(i, eps, n)) - 1.0) <= 1e-10

    def test_plateau_limit(self):
        """Test the weighted plateau value at (2, 2 pi, 1), eps = 1/2, i = 3 is pi."""
        c = make_config(2, 2 * math.pi, 1.0)
        assert c.critical
        p = moser_profile(3, 0.5, 2)
        value = functional_eval(p, c, radius=plateau_radius(3, 0.5, 2))
        assert moser_plateau_limit(c, 0.5) == pytest.approx(math.pi)
        assert abs(value - math.pi) <= 1e-4

    def test_invalid_arguments(self):
        """Test rejected indices and supports."""
        with pytest.raises(ExponentRangeError):
            moser_profile(0, 1.0, 2)
        with pytest.raises(ExponentRangeError):
            moser_profile(1, 1.5, 2)
        with pytest.raises(ExponentRangeError):
            moser_profile(2.5, 1.0, 2)

    def test_concentration(self):
        """Test that the family concentrates at the origin."""
        sequence = [moser_profile(i, 1.0, 2) for i in range(1, 9)]
        reports = concentration_metric(sequence, [0.25])
        assert reports[-1].concentrated
        assert not reports[0].concentrated
        outside = [r.energy_outside[0.25] for r in reports]
        assert all(a > b for a, b in zip(outside, outside[1:]))

    def test_energy_outside_plateau(self):
        """Test that all the energy sits outside the plateau."""
        p = moser_profile(2, 1.0, 2)
        rho = plateau_radius(2, 1.0, 2)
        assert energy_outside(p, rho) == pytest.approx(1.0, abs=1e-12)
        assert energy_outside(p, 1.0) == pytest.approx(0.0, abs=1e-15)


class TestTransformTa:
    """Test the T_a transform."""

    def test_energy_invariance(self):
        """Test that T_a preserves the energy for several a."""
        rng = np.random.default_rng(3)
        p = random_profile(3, rng)
        for a in (0.25, 0.5, 2.0):
            assert dirichlet_energy(transform_Ta(p, a)) == pytest.approx(dirichlet_energy(p), abs=1e-10)

    def test_duality(self):
        """Test F(u) = J(T_a u) / a at the critical config (2, 2 pi, 1)."""
        rng = np.random.default_rng(11)
        weighted = critical_config(2, 1.0)
        unweighted = critical_config(2, 0.0)
        for _ in range(5):
            p = random_profile(2, rng)
            f = functional_eval(p, weighted)
            j = functional_eval(transform_Ta(p, 0.5), unweighted)
            assert abs(f - 2.0 * j) / f <= 1e-6

    def test_core_power(self):
        """Test the core exponent scaling."""
        p = moser_profile(1, 1.0, 2)
        assert transform_Ta(p, 0.5).core_power == pytest.approx(2.0 * p.core_power)

    def test_invalid_a(self):
        """Test that a <= 0 is rejected."""
        with pytest.raises(ExponentRangeError):
            transform_Ta(moser_profile(1, 1.0, 2), 0.0)


class TestLevelRestrictions:
    """Test energies and measures on level sets."""

    def test_energy_split(self):
        """Test that the energies below and above a level add up."""
        p = bump_profile()
        total = dirichlet_energy(p)
        for level in (0.3, 1.0, 1.5):
            split = energy_where(p, level, "below") + energy_where(p, level, "above")
            assert split == pytest.approx(total, rel=1e-12)

    def test_plateau_measure(self):
        """Test the measure of the Moser plateau."""
        p = moser_profile(2, 1.0, 2)
        rho = plateau_radius(2, 1.0, 2)
        assert superlevel_measure(p, 2.0, strict=False) == pytest.approx(math.pi * rho ** 2, rel=1e-9)
        assert superlevel_measure(p, 2.0, strict=True) == pytest.approx(0.0, abs=1e-300)
        assert superlevel_measure(p, 0.0, strict=True) == pytest.approx(math.pi, rel=1e-12)


class TestDecreasingRearrangement:
    """Test the Schwarz symmetrization of radial profiles."""

    def test_equimeasurable_and_monotone(self):
        """Test monotonicity and preserved distribution."""
        p = bump_profile()
        levels = (0.5, 1.25, 1.5, 1.75)
        star = decreasing_rearrangement(p, extra_levels=levels)
        assert np.all(np.diff(star.values) <= 1e-15)
        for t in levels:
            assert superlevel_measure(star, t) == pytest.approx(superlevel_measure(p, t), rel=1e-9)

    def test_polya_szego(self):
        """Test that rearranging does not increase the energy."""
        p = bump_profile()
        assert dirichlet_energy(decreasing_rearrangement(p)) <= dirichlet_energy(p) * (1 + 1e-12)

    def test_monotone_input(self):
        """Test that a decreasing profile keeps its energy."""
        p = moser_profile(2, 0.5, 2)
        star = decreasing_rearrangement(p)
        assert dirichlet_energy(star) == pytest.approx(dirichlet_energy(p), rel=1e-9)
