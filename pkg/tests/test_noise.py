"""Tests for coefficient laws, the torus norm and the eta-norm."""

import math

import numpy as np
import pytest

from anticoncentration.config import BERNOULLI_C_ETA
from anticoncentration.exceptions import InvalidNoiseModelError, ValidationError
from anticoncentration.noise import (
    NoiseModel,
    abs_difference_law,
    anticoncentration_audit,
    char_abs,
    difference_char,
    eta_norm,
    eta_norm_squared,
    growth_check,
    lower_expectation_check,
    t_norm,
)


@pytest.fixture
def lazy_walk():
    """Coefficients in {-1, 0, 1} with probabilities 1/4, 1/2, 1/4."""
    return NoiseModel.finite([[-1.0, 0.25], [0.0, 0.5], [1.0, 0.25]])


class TestNoiseModel:
    """Tests for NoiseModel construction."""

    def test_bernoulli_constants(self):
        """Test the stored constants of symmetric Bernoulli coefficients."""
        model = NoiseModel.bernoulli()
        assert model.c_eta == pytest.approx(2 / math.pi**2)
        assert model.C_eta == 2
        assert model.alpha == 2
        assert model.support_size == 2

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite([[0.0, 0.5], [1.0, 0.4]])

    def test_negative_probability(self):
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite([[0.0, 1.5], [1.0, -0.5]])

    def test_shape_mismatch(self):
        """Test that values and probabilities must pair up."""
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel(values=np.array([0.0, 1.0]), probabilities=np.array([1.0]))
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite([0.0, 1.0])

    def test_constant_ranges(self):
        """Test c_eta > 0, C_eta >= 1 and 1 <= alpha <= C_eta."""
        atoms = [[-1.0, 0.5], [1.0, 0.5]]
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite(atoms, c_eta=0.0)
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite(atoms, C_eta=0.5)
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.finite(atoms, C_eta=2.0, alpha=3.0)
        assert NoiseModel.finite(atoms, C_eta=2.0, alpha=2.0).alpha == 2.0

    def test_from_spec(self):
        """Test parsing structured noise descriptions."""
        assert NoiseModel.from_spec({"kind": "bernoulli"}).name == "bernoulli"
        model = NoiseModel.from_spec({"kind": "finite", "atoms": [[0.0, 0.5], [2.0, 0.5]], "c_eta": 0.1})
        assert model.c_eta == 0.1
        assert model.alpha is None

    def test_from_spec_errors(self):
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.from_spec({"kind": "finite"})
        with pytest.raises(InvalidNoiseModelError):
            NoiseModel.from_spec({"kind": "gaussian"})

    def test_sample_stays_in_support(self):
        """Test that samples are drawn from the support with the right frequencies."""
        model = NoiseModel.finite([[0.0, 0.25], [3.0, 0.75]])
        draws = model.sample(np.random.default_rng(0), (20_000,))
        assert set(np.unique(draws)) <= {0.0, 3.0}
        assert np.mean(draws == 3.0) == pytest.approx(0.75, abs=0.02)

    def test_difference_law_bernoulli(self):
        """Test the law of eta1 - eta2 for Bernoulli coefficients."""
        values, probabilities = NoiseModel.bernoulli().difference_law()
        law = dict(zip(values.tolist(), probabilities.tolist()))
        assert law == pytest.approx({-2.0: 0.25, 0.0: 0.5, 2.0: 0.25})

    def test_describe(self):
        described = NoiseModel.bernoulli().describe()
        assert described["name"] == "bernoulli"
        assert described["atoms"] == [[-1.0, 0.5], [1.0, 0.5]]


class TestTorusNorm:
    """Tests for ||a||_T."""

    def test_values(self):
        assert t_norm(0.0) == 0.0
        assert t_norm(math.pi) == pytest.approx(0.0, abs=1e-12)
        assert t_norm(math.pi / 2) == pytest.approx(math.pi / 2)
        assert t_norm(-0.1) == pytest.approx(0.1)
        assert t_norm(3 * math.pi + 0.2) == pytest.approx(0.2)

    def test_range_and_vectorization(self):
        """Test that ||a||_T lies in [0, pi/2] elementwise."""
        a = np.linspace(-20, 20, 1001)
        t = t_norm(a)
        assert isinstance(t, np.ndarray)
        assert np.all(t >= 0)
        assert np.all(t <= math.pi / 2 + 1e-12)

    def test_scalar_in_scalar_out(self):
        assert isinstance(t_norm(1.0), float)


class TestCharacteristicFunctions:
    """Tests for |E exp(i eta a)| and the eta-norm."""

    def test_bernoulli_char_is_abs_cos(self):
        a = np.linspace(-5, 5, 101)
        assert np.allclose(char_abs(NoiseModel.bernoulli(), a), np.abs(np.cos(a)))

    def test_char_at_zero_is_one(self, lazy_walk):
        assert char_abs(lazy_walk, 0.0) == 1.0

    def test_difference_char_is_square(self, lazy_walk):
        """Test E cos(a (eta1 - eta2)) = |E exp(i eta a)|^2."""
        a = np.linspace(-4, 4, 81)
        assert np.allclose(difference_char(lazy_walk, a), np.asarray(char_abs(lazy_walk, a)) ** 2)

    def test_eta_norm_bernoulli(self):
        """Test ||pi/4||_eta for Bernoulli coefficients."""
        model = NoiseModel.bernoulli()
        assert eta_norm_squared(model, math.pi / 4) == pytest.approx(0.5)
        assert eta_norm(model, math.pi / 4) == pytest.approx(math.sqrt(0.5))

    def test_eta_norm_with_precomputed_law(self, lazy_walk):
        deltas, weights = lazy_walk.difference_law()
        a = np.array([0.3, 1.1, 2.7])
        assert np.allclose(eta_norm_squared(lazy_walk, a, deltas, weights), eta_norm_squared(lazy_walk, a))

    def test_eta_norm_of_point_mass_is_zero(self):
        assert eta_norm(NoiseModel.point_mass(3.0), 1.3) == 0.0


class TestGrowthCheck:
    """Tests for the growth audit |E exp(i eta a)| <= exp(-c ||a||_T^2)."""

    def test_bernoulli_growth_holds(self):
        grid = np.linspace(-10, 10, 4001)
        result = growth_check(NoiseModel.bernoulli(), BERNOULLI_C_ETA, grid)
        assert result.holds is True
        assert result.max_violation == 0.0
        assert result.grid_size == 4001

    def test_growth_fails_for_large_constant(self):
        """Test that c = 1 is too large near a = 0."""
        result = growth_check(NoiseModel.bernoulli(), 1.0, np.linspace(0.01, 1.0, 100))
        assert result.holds is False
        assert result.max_violation > 0

    def test_growth_check_validation(self):
        with pytest.raises(ValidationError):
            growth_check(NoiseModel.bernoulli(), 0.0, [1.0])
        with pytest.raises(ValidationError):
            growth_check(NoiseModel.bernoulli(), 0.1, [])


class TestAnticoncentrationAudit:
    """Tests for the anti-concentration audit."""

    def test_bernoulli(self):
        """Test C_eta = 2 and alpha = 2 for Bernoulli coefficients."""
        audit = anticoncentration_audit(NoiseModel.bernoulli())
        assert audit.satisfied is True
        assert audit.C_eta_min == 2.0
        assert audit.alpha == 2.0
        assert audit.mass_at_C == pytest.approx(0.5)

    def test_lazy_walk(self, lazy_walk):
        """Test that |eta1 - eta2| = 1 already carries mass 1/2."""
        law = abs_difference_law(lazy_walk)
        assert [v for v, _ in law] == pytest.approx([0.0, 1.0, 2.0])
        assert [m for _, m in law] == pytest.approx([0.375, 0.5, 0.125])
        audit = anticoncentration_audit(lazy_walk)
        assert audit.C_eta_min == 1.0
        assert audit.alpha == 1.0

    def test_unsatisfiable(self):
        """Test that laws with too little spread are reported, not raised."""
        for model in (NoiseModel.point_mass(), NoiseModel.finite([[0.0, 0.5], [0.5, 0.5]])):
            audit = anticoncentration_audit(model)
            assert audit.satisfied is False
            assert audit.C_eta_min is None
            assert audit.alpha is None

    def test_lower_expectation_bernoulli(self):
        """Test the lower expectation bound with alpha = 2."""
        result = lower_expectation_check(NoiseModel.bernoulli(), 2.0, np.linspace(-6, 6, 601))
        assert result.holds is True
        assert result.violations == 0
        assert result.worst_point is None

    def test_lower_expectation_violation(self):
        """Test that alpha = 1 fails for Bernoulli near a = pi/2."""
        result = lower_expectation_check(NoiseModel.bernoulli(), 1.0, [math.pi / 2])
        assert result.holds is False
        assert result.violations == 1
        assert result.worst_point == pytest.approx(math.pi / 2)

    def test_lower_expectation_needs_grid(self):
        with pytest.raises(ValidationError):
            lower_expectation_check(NoiseModel.bernoulli(), 2.0, [])
