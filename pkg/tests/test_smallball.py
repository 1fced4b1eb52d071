"""Tests for small-ball probabilities."""

import math
from fractions import Fraction

import numpy as np
import pytest

from anticoncentration.exceptions import BudgetExceededError, ValidationError
from anticoncentration.geometry import StarBody
from anticoncentration.models import VectorSystem
from anticoncentration.noise import NoiseModel
from anticoncentration.smallball import (
    atoms,
    binomial_sum_S,
    mass_in_translate,
    rho_exact,
    rho_mc,
    sharp_lo_report,
    small_ball,
)


@pytest.fixture
def bernoulli():
    return NoiseModel.bernoulli()


@pytest.fixture
def square_atoms(bernoulli):
    """Law of eta_1 e_1 + eta_2 e_2: the four points (+-1, +-1)."""
    system = VectorSystem(np.eye(2), 1.0)
    return atoms(system, bernoulli)


class TestAtoms:
    """Tests for exact enumeration of X_V."""

    def test_merges_equal_sums(self, bernoulli):
        """Test that eta_1 + eta_2 has atoms -2, 0, 2 with weights 1/4, 1/2, 1/4."""
        law = atoms(VectorSystem(np.ones((2, 1)), 1.0), bernoulli)
        assert law.as_dict() == pytest.approx({(-2.0,): 0.25, (0.0,): 0.5, (2.0,): 0.25})

    def test_weights_sum_to_one(self, bernoulli):
        rng = np.random.default_rng(0)
        law = atoms(VectorSystem(rng.standard_normal((8, 2)), 1.0), bernoulli)
        assert law.size == 256
        assert np.sum(law.weights) == pytest.approx(1.0)

    def test_budget(self, bernoulli):
        """Test that 2^30 atoms exceed the default budget."""
        with pytest.raises(BudgetExceededError) as exc_info:
            atoms(VectorSystem(np.ones((30, 1)), 1.0), bernoulli)
        assert exc_info.value.resource == "atom enumeration"

    def test_empty_system(self, bernoulli):
        law = atoms(VectorSystem(np.zeros((0, 2)), 1.0), bernoulli)
        assert law.size == 1
        assert law.weights.tolist() == [1.0]


class TestRhoExact:
    """Tests for the exact kernels."""

    def test_box_sweep(self, square_atoms):
        """Test unit squares around the four corners."""
        body = StarBody.lp_ball(math.inf, 2)
        assert rho_exact(square_atoms, body, 1.0).rho == pytest.approx(1.0)
        result = rho_exact(square_atoms, body, 0.99)
        assert result.rho == pytest.approx(0.25)
        assert result.certificate == "exact"
        assert result.method == "box_sweep"

    def test_disk_sweep(self, square_atoms):
        """Test that a unit disk holds two adjacent corners on its boundary."""
        body = StarBody.lp_ball(2.0, 2)
        result = rho_exact(square_atoms, body, 1.0)
        assert result.method == "disk_sweep"
        assert result.rho == pytest.approx(0.5)
        assert rho_exact(square_atoms, body, 0.9).rho == pytest.approx(0.25)
        assert rho_exact(square_atoms, body, math.sqrt(2.0)).rho == pytest.approx(1.0)

    def test_l1_rotation(self, square_atoms):
        """Test the diamond kernel."""
        body = StarBody.lp_ball(1.0, 2)
        result = rho_exact(square_atoms, body, 1.0)
        assert result.method == "l1_rotation"
        assert result.rho == pytest.approx(0.5)
        assert rho_exact(square_atoms, body, 2.0).rho == pytest.approx(1.0)

    def test_lattice_search_is_lower_bound(self, square_atoms):
        """Test that bodies without a kernel are certified as lower bounds."""
        body = StarBody.lp_ball(0.5, 2)
        result = rho_exact(square_atoms, body, 1.0)
        assert result.certificate == "lower_bound"
        assert result.method == "lattice_search"
        assert 0.25 <= result.rho <= 1.0

    def test_rho_recomputed_at_center(self, bernoulli):
        """Test that the reported rho is the mass at the witness center."""
        rng = np.random.default_rng(4)
        law = atoms(VectorSystem(rng.standard_normal((7, 2)), 1.0), bernoulli)
        body = StarBody.lp_ball(2.0, 2)
        result = rho_exact(law, body, 0.8)
        assert result.rho == mass_in_translate(law, body, 0.8, result.center)

    def test_rho_dominates_other_centers(self, bernoulli):
        """Test that no sampled center beats the exact supremum."""
        rng = np.random.default_rng(5)
        law = atoms(VectorSystem(rng.standard_normal((6, 2)), 1.0), bernoulli)
        for body in (StarBody.lp_ball(2.0, 2), StarBody.lp_ball(1.0, 2), StarBody.box([0.5, 1.5])):
            rho = rho_exact(law, body, 1.0).rho
            for center in rng.uniform(-4, 4, size=(200, 2)):
                assert mass_in_translate(law, body, 1.0, center) <= rho + 1e-12
            for center in law.points:
                assert mass_in_translate(law, body, 1.0, center) <= rho + 1e-12

    def test_interval_window(self, bernoulli):
        law = atoms(VectorSystem(np.ones((4, 1)), 1.0), bernoulli)
        result = rho_exact(law, StarBody.lp_ball(2.0, 1), 1.0)
        assert result.method == "interval_window"
        assert result.rho == pytest.approx((6 + 4) / 16)

    def test_validation(self, square_atoms):
        body = StarBody.lp_ball(2.0, 2)
        with pytest.raises(ValidationError):
            rho_exact(square_atoms, body, 0.0)
        with pytest.raises(ValidationError):
            rho_exact(square_atoms, StarBody.lp_ball(2.0, 3), 1.0)

    def test_small_ball_needs_body(self, bernoulli):
        with pytest.raises(ValidationError):
            small_ball(VectorSystem(np.eye(2), 1.0), bernoulli)

    def test_small_ball_uses_system_body(self, bernoulli):
        body = StarBody.lp_ball(math.inf, 2)
        result = small_ball(VectorSystem(np.eye(2), 1.0, body), bernoulli)
        assert result.rho == pytest.approx(1.0)


class TestRhoMonteCarlo:
    """Tests for sampled small-ball probabilities."""

    def test_matches_exact(self, bernoulli):
        """Test the sampled estimate against the exact value within 5 standard errors."""
        body = StarBody.lp_ball(2.0, 1)
        system = VectorSystem(np.ones((10, 1)), 0.5, body)
        result = rho_mc(system, bernoulli, body, 0.5, samples=40_000, seed=3)
        assert result.certificate == "lower_bound"
        assert result.samples == 40_000
        assert abs(result.rho - 0.24609375) <= 5 * result.std_error

    def test_best_center_is_reported(self, bernoulli):
        body = StarBody.lp_ball(2.0, 1)
        system = VectorSystem(np.ones((4, 1)), 0.5, body)
        result = rho_mc(system, bernoulli, body, 0.5, samples=5000, centers=[[1.0], [0.0], [7.0]], seed=0)
        assert result.center.tolist() == [0.0]

    def test_deterministic(self, bernoulli):
        body = StarBody.lp_ball(2.0, 2)
        system = VectorSystem(np.eye(2), 1.0, body)
        a = rho_mc(system, bernoulli, body, 1.0, samples=5000, seed=11)
        b = rho_mc(system, bernoulli, body, 1.0, samples=5000, seed=11, max_workers=1)
        assert a.rho == b.rho


class TestSharpLittlewoodOfford:
    """Tests for the all-ones system against 2^-n S(n, floor(R)+1)."""

    def test_binomial_sum(self):
        assert binomial_sum_S(4, 1) == 6
        assert binomial_sum_S(4, 2) == 10
        assert binomial_sum_S(10, 11) == 2**10

    def test_binomial_sum_validation(self):
        with pytest.raises(ValidationError):
            binomial_sum_S(4, 0)
        with pytest.raises(ValidationError):
            binomial_sum_S(4, 6)

    def test_reference_value(self):
        """Test n = 10, R = 1/2: rho = 252/1024."""
        report = sharp_lo_report(10, 0.5)
        assert report.rho == 0.24609375
        assert report.bound == 0.24609375
        assert report.exact_match is True
        assert report.rho_fraction == Fraction(63, 256)

    @pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
    @pytest.mark.parametrize("R", [0.5, 1.0, 2.0, 3.5])
    def test_exact_match(self, n, R):
        """Test that the enumerated rho equals the binomial bound."""
        report = sharp_lo_report(n, R)
        assert report.exact_match is True
        assert report.ratio == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            sharp_lo_report(0, 1.0)
        with pytest.raises(ValidationError):
            sharp_lo_report(25, 1.0)
        with pytest.raises(ValidationError):
            sharp_lo_report(5, 0.0)
