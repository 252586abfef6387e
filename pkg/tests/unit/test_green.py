"""
Unit tests for closed-form Green functions and their level sets.
"""

import math

import numpy as np
import pytest

from mtextremal.core.green import (
    DomainError,
    DomainSpec,
    GreenVariant,
    LevelSetError,
    SingularPointError,
    conformal_incenter,
    green_eval,
    green_function,
    green_gradient,
    green_level_set,
    regular_part,
    verify_green_properties,
)
from mtextremal.core.green.domains import green_from_json
from mtextremal.core.green.level_sets import energy_below, gradient_flux, limit_ratios


class TestDomainSpec:
    """Test domain specifications."""

    def test_centered_with_offset_becomes_shifted(self):
        """Test that a nonzero offset switches the variant."""
        domain = DomainSpec(GreenVariant.CENTERED_BALL, n=2, offset=np.array([0.2, 0.0]))
        assert domain.variant == GreenVariant.SHIFTED_BALL

    def test_singularity_must_be_inside(self):
        """Test that offsets outside the ball are rejected."""
        with pytest.raises(DomainError):
            DomainSpec.shifted_ball(2, 1.0)
        with pytest.raises(DomainError):
            DomainSpec.centered_ball(3, 0.0)

    def test_scalar_offset(self):
        """Test that scalar offsets go on the first axis."""
        domain = DomainSpec.shifted_ball(3, 0.5)
        assert domain.offset.tolist() == [0.5, 0.0, 0.0]

    def test_json_round_trip(self):
        """Test rebuilding a Green function from JSON."""
        g = green_function(DomainSpec.shifted_ball(2, 0.3, 2.0))
        h = green_from_json(g.to_json())
        assert h.variant == GreenVariant.SHIFTED_BALL
        assert h.incenter == g.incenter
        assert np.array_equal(h.domain.offset, g.domain.offset)

    def test_disk_grid_volume(self):
        """Test the lattice disk area."""
        domain = DomainSpec.disk_grid(1.0 / 32.0)
        assert domain.volume == pytest.approx(math.pi, rel=0.02)


class TestClosedForm:
    """Test closed-form ball Green functions."""

    def test_centered_values(self):
        """Test G = -log|y| / omega^(1/(n-1)) on centered unit balls."""
        g2 = green_function(DomainSpec.centered_ball(2))
        g3 = green_function(DomainSpec.centered_ball(3))
        assert green_eval(g2, [0.5, 0.0])[0] == pytest.approx(math.log(2.0) / (2 * math.pi), abs=1e-14)
        assert green_eval(g3, [0.0, 0.5, 0.0])[0] == pytest.approx(math.log(2.0) / math.sqrt(4 * math.pi),
                                                                    abs=1e-14)
        assert conformal_incenter(g2) == 1.0

    @pytest.mark.parametrize("n,offset,radius", [(2, 0.5, 1.0), (3, 0.3, 1.0), (2, 0.5, 2.0)])
    def test_incenter(self, n, offset, radius):
        """Test I = R (1 - |x/R|^2) and its link to the regular part."""
        g = green_function(DomainSpec.shifted_ball(n, offset, radius))
        s = offset / radius
        assert g.incenter == pytest.approx(radius * (1 - s * s), rel=1e-14)
        h0 = regular_part(g, np.zeros(n))[0]
        assert math.exp(-g.c * h0) == pytest.approx(g.incenter, rel=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_vanishes_on_boundary(self, n):
        """Test G = 0 on the boundary of a shifted ball."""
        g = green_function(DomainSpec.shifted_ball(n, 0.5))
        theta = np.linspace(0.0, 2 * math.pi, 17)
        points = np.zeros((theta.size, n))
        points[:, 0] = 0.5 + np.cos(theta)
        points[:, 1] = np.sin(theta)
        assert np.max(np.abs(green_eval(g, points))) <= 1e-12

    def test_gradient_matches_differences(self):
        """Test the analytic gradient against central differences."""
        g = green_function(DomainSpec.shifted_ball(3, 0.4))
        y = np.array([0.1, -0.3, 0.2])
        step = 1e-6
        numeric = np.array([
            (green_eval(g, y + step * e)[0] - green_eval(g, y - step * e)[0]) / (2 * step)
            for e in np.eye(3)
        ])
        assert np.allclose(green_gradient(g, y)[0], numeric, rtol=1e-6, atol=1e-8)

    def test_evaluation_errors(self):
        """Test the singularity and points outside the domain."""
        g = green_function(DomainSpec.shifted_ball(2, 0.5))
        with pytest.raises(SingularPointError):
            green_eval(g, [0.0, 0.0])
        with pytest.raises(DomainError):
            green_eval(g, [-0.8, 0.0])
        with pytest.raises(DomainError):
            green_eval(g, [0.1, 0.1, 0.1])


class TestLevelSets:
    """Test level sets of closed-form Green functions."""

    def test_centered_sphere(self):
        """Test that centered level sets are exact balls."""
        g = green_function(DomainSpec.centered_ball(2))
        level = green_level_set(g, 1.0)
        assert level.radius == pytest.approx(math.exp(-2 * math.pi))
        assert level.sigma == pytest.approx(0.0, abs=1e-15)
        assert level.volume == pytest.approx(math.pi * math.exp(-4 * math.pi), rel=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_points_on_level(self, n):
        """Test that quadrature points of a shifted level set have G = t."""
        g = green_function(DomainSpec.shifted_ball(n, 0.5))
        level = green_level_set(g, 0.3, order=64)
        assert np.allclose(green_eval(g, level.quadrature.points), 0.3, atol=1e-10)
        distances = level.quadrature.distance
        assert level.inner_radius <= distances.min() + 1e-12
        assert distances.max() <= level.outer_radius + 1e-12

    def test_certificate_shrinks(self):
        """Test that sigma/tau decreases along the levels."""
        g = green_function(DomainSpec.shifted_ball(2, 0.5))
        ratios = [green_level_set(g, t).sigma / green_level_set(g, t).tau for t in (0.5, 1.0, 2.0)]
        assert ratios[0] > ratios[1] > ratios[2]

    def test_negative_level(self):
        """Test that negative levels are rejected."""
        g = green_function(DomainSpec.centered_ball(2))
        with pytest.raises(LevelSetError):
            green_level_set(g, -0.1)

    def test_flux_and_energy(self):
        """Test unit flux and energy below t equal to t."""
        g = green_function(DomainSpec.shifted_ball(3, 0.3))
        level = green_level_set(g, 0.7)
        assert gradient_flux(level, 3) == pytest.approx(1.0, abs=1e-6)
        assert energy_below(g, 0.7) == pytest.approx(0.7, abs=1e-6)

    def test_volume_limits(self):
        """Test that the volume ratios approach the incenter powers."""
        g = green_function(DomainSpec.shifted_ball(2, 0.5))
        level = green_level_set(g, 8.0)
        volume_ratio, weighted_ratio = limit_ratios(g, level, 1.0)
        assert volume_ratio == pytest.approx(g.incenter ** 2, rel=0.01)
        assert weighted_ratio == pytest.approx(g.incenter, rel=0.01)


class TestVerifyGreenProperties:
    """Test the property residual report."""

    def test_centered_ball_exact(self):
        """Test residuals below 1e-10 on the centered disk."""
        g = green_function(DomainSpec.centered_ball(2))
        report = verify_green_properties(g, [0.0, 1.0, 2.0], tol=1e-10)
        assert report.passed, report.failing
        checks = {row.check for row in report.rows}
        assert {"energy_below", "gradient_flux", "certificate", "certificate_decreasing"} <= checks

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("offset", [0.3, 0.5])
    def test_shifted_balls(self, n, offset):
        """Test residuals below 1e-6 on shifted balls, limits included."""
        g = green_function(DomainSpec.shifted_ball(n, offset))
        report = verify_green_properties(g, [0.0, 1.0, 2.0, 8.0], beta=0.5, tol=1e-6)
        assert report.passed, report.failing
        asserted = [row for row in report.rows if row.check == "volume_limit" and row.param == "8"]
        assert asserted and asserted[0].residual <= 0.01
