"""
Unit tests for ball-to-domain transplantation.
"""

import numpy as np
import pytest

from mtextremal.core.constants import critical_config
from mtextremal.core.green import DomainSpec, green_function
from mtextremal.core.maximizer import MaximizerResult
from mtextremal.core.radial import (
    ProfileError,
    dirichlet_energy,
    functional_eval,
    moser_profile,
    random_profile,
)
from mtextremal.core.transplant import (
    TransplantedFunction,
    coarea_table,
    concentration_formula_report,
    domain_energy,
    domain_functional,
    transplant_bound_check,
    transplant_concentration,
    transplant_energy_check,
    transplant_eval,
)


@pytest.fixture(scope="module")
def shifted_green():
    return green_function(DomainSpec.shifted_ball(2, 0.3))


@pytest.fixture(scope="module")
def centered_green():
    return green_function(DomainSpec.centered_ball(2))


class TestCoareaTable:
    """Test tabulated level-set integrals."""

    def test_centered_table(self, centered_green):
        """Test unit flux and unit density on the centered disk."""
        table = coarea_table(centered_green, 0.5, s_max=5.0, nodes=11, order=64)
        assert np.allclose(table.flux, 1.0, atol=1e-10)
        assert np.allclose(table.density, 1.0, atol=1e-10)
        assert table.density_limit == 1.0

    def test_shifted_limits(self, shifted_green):
        """Test unit flux and the density limit I^(n-beta)."""
        table = coarea_table(shifted_green, 1.0, s_max=20.0, nodes=21, order=128)
        assert np.allclose(table.flux, 1.0, atol=1e-8)
        assert table.density[-1] == pytest.approx(shifted_green.incenter, rel=1e-6)
        assert table.density_at(np.array([100.0]))[0] == table.density_limit

    def test_volume_extends_past_table(self, shifted_green):
        """Test the tail volume of a ball of radius I e^(-s)."""
        table = coarea_table(shifted_green, 0.0, s_max=5.0, nodes=11, order=64)
        tail = table.volume_at(np.array([10.0]))[0]
        assert tail == pytest.approx(np.pi * (shifted_green.incenter * np.exp(-10.0)) ** 2)


class TestTransplantedFunction:
    """Test pointwise transplantation."""

    def test_identity_on_centered_ball(self, centered_green):
        """Test that the centered unit ball transplants v to itself."""
        v = random_profile(2, np.random.default_rng(1))
        points = np.array([[0.3, 0.1], [-0.5, 0.2], [0.0, 0.9]])
        expected = v.evaluate(np.linalg.norm(points, axis=1))
        assert np.allclose(transplant_eval(v, centered_green, points), expected, atol=1e-12)

    def test_dimension_mismatch(self, shifted_green):
        """Test that profiles must live in the domain dimension."""
        with pytest.raises(ProfileError):
            TransplantedFunction(random_profile(3, np.random.default_rng(0)), shifted_green)

    def test_symmetrized_energy(self, shifted_green):
        """Test that symmetrization does not increase the energy."""
        v = random_profile(2, np.random.default_rng(2))
        u = TransplantedFunction(v, shifted_green)
        star = u.symmetrized()
        assert dirichlet_energy(star) <= u.energy() * (1 + 1e-3)
        assert star.radius == pytest.approx(1.0, rel=1e-6)


class TestTransplantChecks:
    """Test energy preservation and the functional bound."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_energy_preserved(self, shifted_green, seed):
        """Test that the transplanted energy equals the radial energy."""
        v = random_profile(2, np.random.default_rng(seed))
        report = transplant_energy_check(v, shifted_green, tol=1e-3)
        assert report.passed, report.failing

    def test_restricted_energy(self, shifted_green):
        """Test that energies restricted to {G < t} increase with t."""
        v = random_profile(2, np.random.default_rng(3))
        table = coarea_table(shifted_green, 0.0)
        energies = [domain_energy(v, table, s) for s in (0.5, 2.0, 8.0)]
        assert energies[0] < energies[1] < energies[2] <= domain_energy(v, table) * (1 + 1e-12)

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_bound(self, shifted_green, beta):
        """Test F over the domain against I^(n-beta) F over the ball."""
        c = critical_config(2, beta)
        v = random_profile(2, np.random.default_rng(4))
        report = transplant_bound_check(v, shifted_green, c)
        assert report.passed, report.failing
        assert report.notes["ratio"] >= 1.0 - 1e-6

    def test_centered_functional(self, centered_green):
        """Test that the centered unit ball reproduces the radial functional."""
        c = critical_config(2, 0.5)
        v = random_profile(2, np.random.default_rng(5))
        table = coarea_table(centered_green, 0.5)
        assert domain_functional(v, table, c) == pytest.approx(functional_eval(v, c), rel=1e-8)

    def test_table_weight_mismatch(self, shifted_green):
        """Test that a table for another beta is rejected."""
        table = coarea_table(shifted_green, 0.0, s_max=5.0, nodes=11, order=64)
        with pytest.raises(ProfileError):
            domain_functional(random_profile(2, np.random.default_rng(0)), table, critical_config(2, 1.0))


class TestConcentration:
    """Test concentration of transplanted Moser sequences."""

    def test_moser_sequence_concentrates(self, shifted_green):
        """Test unit energy and vanishing energy away from the singularity."""
        sequence = [moser_profile(i, 1.0, 2) for i in (1, 2, 3)]
        reports = transplant_concentration(sequence, shifted_green, [0.25])
        outside = [report.energy_outside[0.25] for report in reports]
        assert all(report.energy_total == pytest.approx(1.0, abs=1e-3) for report in reports)
        assert outside[0] > outside[1] > outside[2]
        assert not reports[0].concentrated
        assert reports[-1].concentrated

    def test_empty_sequence(self, shifted_green):
        """Test that an empty sequence is rejected."""
        with pytest.raises(ProfileError):
            transplant_concentration([], shifted_green, [0.25])

    def test_formula_report(self, shifted_green):
        """Test the rows of the domain concentration report."""
        c = critical_config(2, 0.0)
        v = random_profile(2, np.random.default_rng(6))
        result = MaximizerResult(v, functional_eval(v, c), dirichlet_energy(v), 0, True)
        report = concentration_formula_report(shifted_green, c, result=result)
        assert [row.check for row in report.rows] == ["ball_gap", "existence_gap"]
        assert report.notes["incenter"] == shifted_green.incenter
        assert report.notes["domain_level"] == pytest.approx(
            shifted_green.incenter ** 2 * report.rows[0].rhs)
