"""Tests for near-hyperplane concentration."""

import json
import math

import numpy as np
import pytest

from anticoncentration.config import ConstantsConfig
from anticoncentration.exceptions import ValidationError
from anticoncentration.geometry import StarBody, estimate_constants
from anticoncentration.hyperplane import (
    angular_certificate,
    best_hyperplane,
    contrapositive_check,
    corollary_k_bound,
    dist_to_hyperplane,
    extract_separated_basis,
    prop_hyper_rhs,
    thm_hyper_threshold,
    verify_prop_hyper,
    verify_thm_hyper,
)
from anticoncentration.models import VectorSystem
from anticoncentration.noise import NoiseModel


@pytest.fixture
def bernoulli():
    return NoiseModel.bernoulli()


@pytest.fixture
def flat_vectors():
    """Three vectors on the x-axis and one far above it."""
    return np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [0.0, 5.0]])


class TestDistances:
    """Tests for hyperplane distances and separated bases."""

    def test_dist_to_hyperplane(self):
        assert dist_to_hyperplane([3.0, 4.0], [0.0, 2.0]) == pytest.approx(4.0)
        assert dist_to_hyperplane([3.0, 4.0], [1.0, 0.0]) == pytest.approx(3.0)

    def test_zero_normal(self):
        with pytest.raises(ValidationError):
            dist_to_hyperplane([1.0, 1.0], [0.0, 0.0])

    def test_separated_basis(self):
        """Test that dependent vectors are skipped."""
        basis = extract_separated_basis([[1.0, 0.0], [2.0, 0.0], [0.0, 3.0]], 1.0)
        assert basis.indices == [0, 2]
        assert basis.depth == 2
        assert basis.distances == pytest.approx([1.0, 3.0])
        assert basis.verify()

    def test_separated_basis_empty(self):
        basis = extract_separated_basis([[1.0, 0.0], [2.0, 0.0], [0.0, 3.0]], 5.0)
        assert basis.depth == 0
        assert basis.indices == []

    def test_separated_basis_random(self):
        """Test the distance property on random data."""
        V = np.random.default_rng(0).standard_normal((30, 3))
        basis = extract_separated_basis(V, 0.5)
        assert basis.depth == 3
        assert basis.verify()


class TestBestHyperplane:
    """Tests for the hyperplane search."""

    def test_flat_configuration(self, flat_vectors):
        report = best_hyperplane(flat_vectors, k=1, R=1.0)
        assert report.method == "exhaustive"
        assert report.objective == pytest.approx(0.0, abs=1e-12)
        assert abs(report.normal[1]) == pytest.approx(1.0)
        assert report.near_count == 3
        assert report.far_count == 1

    def test_axis_normal_has_no_negative_zero(self):
        """Test that the flipped normal (0, -1) is reported as (0.0, 1.0)."""
        report = best_hyperplane(np.array([[1.0, 0.0], [2.0, 0.0], [-3.0, 0.0]]), k=0, R=0.5)
        assert report.normal.tolist() == pytest.approx([0.0, 1.0])
        assert not np.any(np.signbit(report.normal))
        assert "-0.0" not in json.dumps(report.to_dict()["normal"])

    def test_distances_sorted(self, flat_vectors):
        report = best_hyperplane(flat_vectors, k=0, R=1.0)
        assert list(report.distances) == sorted(report.distances)
        assert report.objective == pytest.approx(report.distances[-1])

    def test_three_dimensions(self):
        V = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 4.0]])
        report = best_hyperplane(V, k=1)
        assert report.objective == pytest.approx(0.0, abs=1e-12)
        assert abs(report.normal[2]) == pytest.approx(1.0)

    def test_one_dimension(self):
        report = best_hyperplane([[1.0], [-4.0], [2.0]], k=1)
        assert report.objective == pytest.approx(2.0)

    def test_exhaustive_matches_angular_sweep(self):
        """Test that the planar search is never beaten by a fine angular grid."""
        rng = np.random.default_rng(7)
        for k in (0, 2, 5):
            V = rng.standard_normal((12, 2))
            report = best_hyperplane(V, k)
            value, _ = angular_certificate(V, k, points=20_000)
            assert report.objective <= value + 1e-12

    def test_svd_heuristic_over_budget(self):
        V = np.random.default_rng(1).standard_normal((10, 3))
        report = best_hyperplane(V, k=2, budget=0)
        assert report.method == "svd_heuristic"
        assert report.candidates_evaluated == 2

    def test_validation(self, flat_vectors):
        with pytest.raises(ValidationError):
            best_hyperplane(flat_vectors, k=-1)
        with pytest.raises(ValidationError):
            best_hyperplane(np.zeros((3, 2)), k=0)

    def test_angular_certificate_planar_only(self):
        with pytest.raises(ValidationError):
            angular_certificate(np.ones((3, 3)), 0)


class TestDisplayedBounds:
    """Tests for the closed-form bounds."""

    def test_prop_hyper_rhs(self):
        assert prop_hyper_rhs(1, 1.0, 1.0, 0) == pytest.approx(160.0)
        assert prop_hyper_rhs(2, 1.0, 1.0, 2) == pytest.approx(160.0**2 * 0.5)

    def test_prop_hyper_rhs_validation(self):
        with pytest.raises(ValidationError):
            prop_hyper_rhs(2, 0.0, 1.0, 1)

    def test_threshold(self):
        assert thm_hyper_threshold(2, 1.0, 1.0, 2) == pytest.approx(3200.0)

    def test_corollary_k_meets_threshold(self):
        """Test that the threshold at k equals n^-A."""
        d, kappa, c_eta, A, n = 2, 0.01, 2 / math.pi**2, 0.5, 1000
        k = corollary_k_bound(d, kappa, c_eta, A, n)
        assert k > 0
        assert thm_hyper_threshold(d, kappa, c_eta, k) == pytest.approx(n**-A)

    def test_corollary_k_clamped(self):
        assert corollary_k_bound(1, 1e-6, 1.0, 0.1, 10) == 0.0

    def test_corollary_validation(self):
        with pytest.raises(ValidationError):
            corollary_k_bound(1, 1.0, 1.0, 1.0, 1)


class TestVerification:
    """Tests for the hyperplane verifications."""

    def test_prop_hyper_holds(self, bernoulli):
        system = VectorSystem(3.0 * np.eye(2), 1.0)
        check = verify_prop_hyper(system, bernoulli, k=0, samples=5000)
        assert check.hypothesis_holds is True
        assert check.inequality_holds is True
        assert check.I_estimate.value <= check.rhs

    def test_prop_hyper_hypothesis_fails(self, bernoulli, flat_vectors):
        system = VectorSystem(flat_vectors[:3], 1.0)
        check = verify_prop_hyper(system, bernoulli, k=0, samples=5000)
        assert check.hypothesis_holds is False
        assert check.I_estimate is None
        assert check.inequality_holds is None

    def test_needs_c_eta(self):
        model = NoiseModel.finite([[-1.0, 0.5], [1.0, 0.5]])
        with pytest.raises(ValidationError):
            verify_prop_hyper(VectorSystem(np.eye(2), 1.0), model, k=0, samples=5000)

    def test_contrapositive(self, bernoulli):
        body = StarBody.lp_ball(2.0, 2)
        system = VectorSystem(3.0 * np.eye(2), 1.0, body)
        record = contrapositive_check(system, bernoulli, estimate_constants(body), k=0)
        assert record.holds is True
        assert record.lhs == pytest.approx(0.25)

    def test_contrapositive_skipped_without_hypothesis(self, bernoulli, flat_vectors):
        body = StarBody.lp_ball(2.0, 2)
        system = VectorSystem(flat_vectors[:3], 1.0, body)
        record = contrapositive_check(system, bernoulli, estimate_constants(body), k=0, rho=0.5)
        assert record.holds is None

    def test_thm_hyper_premise_fails_with_default_constant(self, bernoulli):
        body = StarBody.lp_ball(2.0, 2)
        system = VectorSystem(np.eye(2), 1.0, body)
        check = verify_thm_hyper(system, bernoulli, estimate_constants(body), k=0, samples=2000)
        assert check.premise_holds is False
        assert check.conclusion_holds is None

    def test_thm_hyper_conclusion(self, bernoulli):
        """Test near-flat vectors with a small effective constant."""
        body = StarBody.lp_ball(2.0, 2)
        V = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [0.5, 0.05]])
        system = VectorSystem(V, 0.1, body)
        check = verify_thm_hyper(
            system, bernoulli, estimate_constants(body), k=0,
            constants=ConstantsConfig(hyper_constant=1e-3), samples=2000,
        )
        assert check.premise_holds is True
        assert check.conclusion_holds is True
        assert check.near_count == 4
        assert check.max_k_distance <= check.k_distance_bound + 1e-12

    def test_thm_hyper_needs_body(self, bernoulli):
        body = StarBody.lp_ball(2.0, 2)
        with pytest.raises(ValidationError):
            verify_thm_hyper(VectorSystem(np.eye(2), 1.0), bernoulli, estimate_constants(body), k=0)
