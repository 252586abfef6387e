"""
Unit tests for planar grid functions and their P1 interpolants.
"""

import math

import numpy as np
import pytest

from mtextremal.core.green import DomainSpec
from mtextremal.core.grid_function import GridFunction, GridFunctionError, P1Interpolant


def _interior_mask(shape=(7, 7)):
    mask = np.zeros(shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    return mask


class TestGridFunction:
    """Test grid function invariants and sampling."""

    def test_mask_on_edge(self):
        """Test that masks touching the array edge are rejected."""
        with pytest.raises(GridFunctionError):
            GridFunction(np.ones((4, 4), dtype=bool), 1.0, np.zeros((4, 4)))

    def test_negative_values(self):
        """Test that negative values are rejected."""
        mask = _interior_mask()
        values = np.where(mask, -1.0, 0.0)
        with pytest.raises(GridFunctionError):
            GridFunction(mask, 1.0, values)

    def test_values_outside_mask(self):
        """Test that values must vanish off the mask."""
        values = np.zeros((7, 7))
        values[0, 0] = 1.0
        with pytest.raises(GridFunctionError):
            GridFunction(_interior_mask(), 1.0, values)

    def test_from_function_clips(self):
        """Test sampling with clipping of negative samples."""
        u = GridFunction.from_function(lambda x, y: x - 3.0, _interior_mask(), 1.0)
        assert u.values[1, 3] == 0.0
        assert u.values[5, 3] == 2.0
        assert u.values.min() == 0.0

    def test_on_disk(self):
        """Test sampling a two-dimensional ball on a lattice."""
        u = GridFunction.on_domain(DomainSpec.centered_ball(2), lambda x, y: 1.0 - x * x - y * y, h=1.0 / 32.0)
        assert u.volume == pytest.approx(math.pi, rel=0.02)
        assert u.values.max() == pytest.approx(1.0)

    def test_on_ball_needs_planar(self):
        """Test that three-dimensional balls cannot be sampled."""
        with pytest.raises(GridFunctionError):
            GridFunction.on_domain(DomainSpec.centered_ball(3), lambda x, y: x, h=0.1)

    def test_superlevel_measure(self):
        """Test node counting of superlevel sets."""
        u = GridFunction.from_function(lambda x, y: x, _interior_mask(), 0.5)
        assert u.superlevel_count(2.0) == 5 * 2
        assert u.superlevel_measure(2.0) == pytest.approx(10 * 0.25)

    def test_cell_weights(self):
        """Test unit weights without a weight and finite weights at the center."""
        u = GridFunction.random(np.random.default_rng(0))
        assert np.array_equal(u.cell_weights((2.0, 2.0), 0.0), u.mask.astype(float))
        weights = u.cell_weights((2.0, 2.0), 1.0)
        assert np.all(np.isfinite(weights))
        assert weights[2, 2] > weights[1, 1] > 0.0

    def test_json(self):
        """Test rebuilding from JSON."""
        u = GridFunction.random(np.random.default_rng(1), h=0.5)
        v = GridFunction.from_json(u.to_json())
        assert np.array_equal(v.values, u.values)
        assert v.h == 0.5


class TestP1Interpolant:
    """Test the P1 interpolant."""

    @pytest.mark.parametrize("seed", range(5))
    def test_energy_matches_edge_sum(self, seed):
        """Test that the P1 energy equals the 5-point edge sum."""
        u = GridFunction.random(np.random.default_rng(seed), shape=(6, 7))
        assert P1Interpolant.of(u).energy() == pytest.approx(u.energy(), rel=1e-12)

    def test_distribution_limits(self):
        """Test the distribution below the minimum and above the maximum."""
        u = GridFunction.random(np.random.default_rng(2))
        p1 = P1Interpolant.of(u)
        assert p1.distribution(u.values.max()) == 0.0
        assert p1.distribution(-1.0) == pytest.approx(p1.corners.shape[0] * p1.area)

    def test_energy_split(self):
        """Test that the energies below and above a level add up."""
        u = GridFunction.random(np.random.default_rng(3))
        p1 = P1Interpolant.of(u)
        t = 0.5 * u.values.max()
        assert p1.energy_below(t) + p1.energy_above(t) == pytest.approx(p1.energy(), rel=1e-12)

    def test_distribution_matches_quadratic_pieces(self):
        """Test the distribution against its piecewise quadratic form."""
        u = GridFunction.random(np.random.default_rng(4))
        p1 = P1Interpolant.of(u)
        breaks, c0, c1, c2 = p1._quadratic_pieces()
        for k in range(breaks.size - 1):
            s = 0.5 * (breaks[k] + breaks[k + 1])
            assert p1.distribution(s) == pytest.approx(c0[k] + c1[k] * s + c2[k] * s * s, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_rearranged_energy_decreases(self, seed):
        """Test that symmetrization does not increase the energy."""
        u = GridFunction.random(np.random.default_rng(seed))
        p1 = P1Interpolant.of(u)
        assert p1.rearranged_energy(0.0, u.values.max()) <= p1.energy() * (1 + 1e-10)
