"""End-to-end tests for the GAP approximation pipeline."""

import json
import math

import numpy as np
import pytest

from anticoncentration.config import ConstantsConfig
from anticoncentration.exceptions import ValidationError
from anticoncentration.gap import thm_gap_pipeline, verify_thm_gap
from anticoncentration.geometry import StarBody
from anticoncentration.models import Gap, VectorSystem
from anticoncentration.noise import NoiseModel

STAGES = [
    "precondition",
    "anticoncentration_audit",
    "body_constants",
    "level_set",
    "bad_vector_split",
    "choose_k",
    "rounding",
    "dual_volume",
    "fit_gap",
]
PARTS = [
    "part1_rank",
    "part1_cardinality",
    "part2_approximation",
    "part3_full_dimension",
    "part4_generator_norms",
]


@pytest.fixture
def bernoulli():
    return NoiseModel.bernoulli()


@pytest.fixture
def progression_system():
    """Eight copies of 1 in R^1, R = 1, under [-1, 1]."""
    return VectorSystem(np.ones((8, 1)), 1.0, StarBody.lp_ball(2.0, 1))


@pytest.fixture
def progression_report(progression_system, bernoulli):
    return thm_gap_pipeline(progression_system, bernoulli, A=1.0, epsilon=0.5, n_prime=4, samples=2000)


def _record(records, name):
    return next(r for r in records if r.name == name)


class TestExactProgression:
    """Pipeline on a system that is exactly an arithmetic progression."""

    def test_stage_order(self, progression_report):
        assert [r.name for r in progression_report.stages] == STAGES
        assert [r.name for r in progression_report.parts] == PARTS

    def test_precondition(self, progression_report):
        """Test rho = (70 + 56) / 256 against n^-A = 1/8."""
        rec = _record(progression_report.stages, "precondition")
        assert progression_report.rho == pytest.approx(126 / 256)
        assert rec.rhs == pytest.approx(1 / 8)
        assert rec.holds is True
        assert rec.details["certificate"] == "exact"

    def test_rounding(self, progression_report):
        """Test D = 512 d alpha and F = {0, D k}."""
        assert progression_report.alpha == 2.0
        assert progression_report.k == 1
        assert progression_report.D == pytest.approx(1024.0)
        assert progression_report.F.tolist() == [[0], [1024]]
        assert _record(progression_report.stages, "rounding").lhs == 0.0

    def test_no_bad_vectors(self, progression_report):
        rec = _record(progression_report.stages, "bad_vector_split")
        assert rec.lhs == 0.0
        assert rec.holds is True

    def test_fitted_gap(self, progression_report):
        """Test the two-scale GAP {x + 1024 y : |x|, |y| <= 1}."""
        gap = progression_report.gap
        assert sorted(gap.generators[:, 0].tolist()) == [1.0, 1024.0]
        assert gap.bounds == (1, 1)
        scaled = sorted(progression_report.scaled_gap.generators[:, 0].tolist())
        assert scaled == pytest.approx([1 / 1024, 1.0])

    def test_every_vector_lies_in_q(self, progression_report):
        rec = _record(progression_report.parts, "part2_approximation")
        assert rec.holds is True
        assert rec.details["distances"] == pytest.approx([0.0] * 8)
        assert rec.details["effective_constant"] == 0.0

    def test_full_dimension_witness(self, progression_report):
        """Test that s = 1025 is the largest dilate of {-1, 1} inside Q'."""
        rec = _record(progression_report.parts, "part3_full_dimension")
        assert rec.details["s"] == 1025
        assert rec.lhs == pytest.approx(1024 / 1025)
        assert rec.holds is True

    def test_witnesses_are_integer_representations(self, progression_report):
        rec = _record(progression_report.parts, "part3_full_dimension")
        G = progression_report.gap.generators
        for point, x in rec.details["witnesses"].items():
            assert all(float(c).is_integer() for c in x)
            assert (np.asarray(x) @ G).tolist() == json.loads(point)

    def test_rank_and_generators(self, progression_report):
        assert _record(progression_report.parts, "part1_rank").holds is True
        assert _record(progression_report.parts, "part4_generator_norms").holds is True

    def test_cardinality_finding(self, progression_report):
        """Test that the unit constant is reported as too small for the cardinality bound."""
        rec = _record(progression_report.parts, "part1_cardinality")
        assert rec.lhs == 9.0
        assert rec.holds is False
        assert any(f.startswith("part1_cardinality") for f in progression_report.findings)

    def test_larger_constant_clears_finding(self, progression_system, bernoulli):
        report = thm_gap_pipeline(
            progression_system, bernoulli, A=1.0, epsilon=0.5, n_prime=4, samples=2000,
            constants=ConstantsConfig(C_A_d_eps=20.0),
        )
        assert _record(report.parts, "part1_cardinality").holds is True

    def test_constants_echoed(self, progression_report):
        assert progression_report.constants["C"] == 1.0
        assert progression_report.constants["kappa"] > 0


class TestPipelineInputs:
    """Tests for pipeline input validation."""

    def test_needs_body(self, bernoulli):
        with pytest.raises(ValidationError):
            thm_gap_pipeline(VectorSystem(np.ones((4, 1)), 1.0), bernoulli, 1.0, 0.5, 1)

    def test_dimension_limit(self, bernoulli):
        system = VectorSystem(np.eye(3), 1.0, StarBody.lp_ball(2.0, 3))
        with pytest.raises(ValidationError):
            thm_gap_pipeline(system, bernoulli, 1.0, 0.5, 1)

    def test_n_prime(self, progression_system, bernoulli):
        with pytest.raises(ValidationError):
            thm_gap_pipeline(progression_system, bernoulli, 1.0, 0.5, 0)

    def test_supplied_rho(self, progression_system, bernoulli):
        report = thm_gap_pipeline(progression_system, bernoulli, 1.0, 0.5, 4, samples=2000, rho=0.5)
        assert report.rho == 0.5
        assert report.stages[0].details["certificate"] == "supplied"

    def test_unsatisfiable_noise(self, progression_system):
        with pytest.raises(ValidationError):
            thm_gap_pipeline(progression_system, NoiseModel.point_mass(), 1.0, 0.5, 4, samples=2000)


class TestVerifyThmGap:
    """Tests for the four verification records on hand-built GAPs."""

    def test_missing_vertex_dilates(self, bernoulli):
        """Test that a GAP along one axis has no witness in d = 2."""
        body = StarBody.lp_ball(2.0, 2)
        system = VectorSystem(np.array([[1.0, 0.0]]), 1.0, body)
        gap = Gap(np.array([[1.0, 0.0]]), (3,))
        records = verify_thm_gap(system, bernoulli, 1.0, 0.5, 1, gap, k=1, D=2048.0, alpha=2.0, rho=0.5, samples=2000)
        part3 = _record(records, "part3_full_dimension")
        assert part3.holds is False
        assert part3.lhs is None

    def test_needs_body(self, bernoulli):
        gap = Gap(np.array([[1.0]]), (1,))
        with pytest.raises(ValidationError):
            verify_thm_gap(VectorSystem(np.ones((1, 1)), 1.0), bernoulli, 1.0, 0.5, 1, gap, 1, 1024.0, 2.0, 0.5)


@pytest.mark.slow
@pytest.mark.integration
class TestPlanarPipeline:
    """Pipeline on a small planar system."""

    def test_runs_all_stages(self, bernoulli):
        body = StarBody.lp_ball(2.0, 2)
        V = 0.1 * np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        report = thm_gap_pipeline(VectorSystem(V, 1.0, body), bernoulli, A=1.0, epsilon=0.5, n_prime=1, samples=2000)
        assert [r.name for r in report.stages] == STAGES
        assert report.rho == pytest.approx(1.0)
        assert report.D == pytest.approx(2048.0)
        assert _record(report.parts, "part2_approximation").holds is True
        distances = _record(report.parts, "part2_approximation").details["distances"]
        assert max(distances) <= math.sqrt(2) / (2 * 2048) + 1e-12

    def test_unit_scale_system_at_default_budgets(self, bernoulli):
        """Test vectors whose rounded box GAP would hold about 2.4e7 points."""
        V = np.array([[1.0, 0.0], [0.0, math.sqrt(2)], [1.0, 0.0], [0.3, 0.7]])
        report = thm_gap_pipeline(VectorSystem(V, 1.0, StarBody.lp_ball(2.0, 2)), bernoulli, A=1.0, epsilon=0.5, n_prime=1, samples=2000)
        assert [r.name for r in report.stages] == STAGES
        assert [r.name for r in report.parts] == PARTS
        assert _record(report.stages, "fit_gap").holds is None
        assert report.gap is not None
        assert report.gap.box_size <= 1_000_000
        good = _record(report.stages, "bad_vector_split").details["good"]
        distances = _record(report.parts, "part2_approximation").details["distances"]
        bound = math.sqrt(2) / (2 * report.D * report.k)
        assert all(distances[i] <= bound + 1e-12 for i in good)


class TestNonAlignedProgression:
    """Pipeline on eight copies of 0.7, which do not land on the rounding lattice."""

    @pytest.fixture
    def report(self, bernoulli):
        system = VectorSystem(np.full((8, 1), 0.7), 1.0, StarBody.lp_ball(2.0, 1))
        return thm_gap_pipeline(system, bernoulli, A=1.0, epsilon=0.5, n_prime=4, samples=2000)

    def test_records_present(self, report):
        assert [r.name for r in report.stages] == STAGES
        assert [r.name for r in report.parts] == PARTS
        assert all(r.lhs is not None for r in report.parts)

    def test_distances_within_rounding_error(self, report):
        """Test dist(v, Q) <= R / (2 D k) rather than exactly 0."""
        good = _record(report.stages, "bad_vector_split").details["good"]
        distances = _record(report.parts, "part2_approximation").details["distances"]
        assert good
        scale = report.D * report.k
        assert all(distances[i] <= 1.0 / (2 * scale) + 1e-12 for i in good)
        assert distances[good[0]] == pytest.approx(abs(0.7 - np.rint(0.7 * scale) / scale), abs=1e-12)

    def test_fit_budget_exhausted(self, bernoulli):
        """Test that a GAP budget no candidate fits gives a failed fit stage and placeholder parts."""
        system = VectorSystem(np.full((8, 1), 0.7), 1.0, StarBody.lp_ball(2.0, 1))
        report = thm_gap_pipeline(system, bernoulli, A=1.0, epsilon=0.5, n_prime=4, samples=2000, gap_budget=5)
        fit = _record(report.stages, "fit_gap")
        assert fit.holds is False
        assert fit.details["budget"] == 5
        assert [r.name for r in report.parts] == PARTS
        assert all(r.holds is None and r.lhs is None for r in report.parts)
        assert report.gap is None
        assert report.to_dict()["scaled_gap"] is None
        assert any(f.startswith("fit_gap") for f in report.findings)
