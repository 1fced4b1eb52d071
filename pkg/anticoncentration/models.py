"""Data models shared across the toolkit."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Dict, List, Literal, Optional, Tuple

import numpy as np

from .config import GAP_SIZE_BUDGET, MERGE_TOLERANCE
from .exceptions import BudgetExceededError, DimensionMismatchError, ValidationError
from .utils.pointsets import integer_box, unique_points

if TYPE_CHECKING:
    from .geometry import StarBody


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass
class BodyConstants:
    """Measured constants of a star-shaped body."""
    mu: float  # Lebesgue measure
    gamma: float  # standard Gaussian measure
    kappa: float
    se_mu: float
    se_gamma: float
    samples: int
    seed: int
    quasi_constant: float = 1.0
    dimension: int = 1
    mu_method: str = "closed_form"
    gamma_method: str = "closed_form"

    def to_record(self) -> Dict[str, Any]:
        """Flat key-value record."""
        return {
            "mu": self.mu,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "se_mu": self.se_mu,
            "se_gamma": self.se_gamma,
            "samples": self.samples,
            "seed": self.seed,
            "mu_method": self.mu_method,
            "gamma_method": self.gamma_method,
        }

    def to_dict(self) -> Dict[str, Any]:
        record = self.to_record()
        record.update(
            quasi_constant=self.quasi_constant,
            dimension=self.dimension,
        )
        return record


@dataclass
class EmbeddingConstants:
    """omega_p(K) and W_p(K) for one exponent p."""
    p: float
    omega: float
    W: float
    method: Literal["closed_form", "sampled"] = "closed_form"


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------

@dataclass
class GrowthCheck:
    """Result of auditing |E exp(i eta a)| <= exp(-c ||a||_T^2) on a grid."""
    holds: bool
    max_violation: float  # largest lhs/rhs - 1, 0 when the bound holds
    worst_point: float
    c: float
    grid_size: int


@dataclass
class AnticoncentrationAudit:
    """Anti-concentration audit of P(1 <= |eta1 - eta2| <= C) >= 1/2."""
    satisfied: bool
    C_eta_min: Optional[float]
    alpha: Optional[float]
    abs_difference_law: List[Tuple[float, float]]
    mass_at_C: float = 0.0


@dataclass
class LowerExpectationCheck:
    """Grid audit of E||(eta1-eta2) a||_T^2 >= 1/2 ||alpha a||_T^2."""
    holds: bool
    violations: int
    max_violation: float
    worst_point: Optional[float]
    alpha: float


# ---------------------------------------------------------------------------
# smallball
# ---------------------------------------------------------------------------

@dataclass
class VectorSystem:
    """The data V = {v_1..v_n}, radius R and body K defining X_V = sum eta_j v_j."""
    vectors: np.ndarray
    R: float
    body: Optional["StarBody"] = None

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim == 1:
            d = self.body.dimension if self.body is not None else 1
            vectors = vectors.reshape(-1, d)
        if vectors.ndim != 2:
            raise ValidationError("vectors must be a list of d-vectors")
        if self.body is not None and vectors.shape[1] != self.body.dimension:
            raise DimensionMismatchError(self.body.dimension, vectors.shape[1], "system")
        if not self.R > 0:
            raise ValidationError(f"R must be positive, got {self.R}")
        self.vectors = vectors
        self.R = float(self.R)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def rescaled(self) -> "VectorSystem":
        """V_R = {v_j / R} with R = 1."""
        return VectorSystem(self.vectors / self.R, 1.0, self.body)

    def with_vectors(self, vectors: np.ndarray) -> "VectorSystem":
        return VectorSystem(np.asarray(vectors, dtype=float).reshape(-1, self.dimension), self.R, self.body)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "vectors": self.vectors.tolist(),
            "R": self.R,
            "body": self.body.describe() if self.body is not None else None,
        }


@dataclass
class AtomDistribution:
    """Exact finite law of X_V: atoms and probability weights."""
    points: np.ndarray
    weights: np.ndarray
    merge_tolerance: float = MERGE_TOLERANCE

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def translated(self, shift) -> "AtomDistribution":
        return AtomDistribution(self.points + np.asarray(shift, dtype=float), self.weights.copy(), self.merge_tolerance)

    def scaled(self, factor: float) -> "AtomDistribution":
        return AtomDistribution(self.points * factor, self.weights.copy(), self.merge_tolerance)

    def as_dict(self) -> Dict[Tuple[float, ...], float]:
        """Mapping point -> weight (points as tuples)."""
        return {tuple(p): float(w) for p, w in zip(self.points.tolist(), self.weights)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "merge_tolerance": self.merge_tolerance,
        }


@dataclass
class SmallBallResult:
    """Value of the small-ball probability with its certificate and witness center."""
    rho: float
    certificate: Literal["exact", "lower_bound"]
    center: np.ndarray
    method: str
    std_error: float = 0.0
    samples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "rho": self.rho,
            "certificate": self.certificate,
            "center": np.asarray(self.center).tolist(),
            "method": self.method,
        }
        if self.samples:
            out.update(std_error=self.std_error, samples=self.samples)
        return out


@dataclass
class SharpLOReport:
    """Canonical all-ones system compared against 2^-n S(n, floor(R)+1)."""
    n: int
    R: float
    rho: float
    bound: float
    ratio: float
    exact_match: bool
    rho_fraction: Fraction
    bound_fraction: Fraction


# ---------------------------------------------------------------------------
# esseen
# ---------------------------------------------------------------------------

EstimateKind = Literal["I_integral", "esseen_k_bound", "esseen_eta_bound", "euclidean_bound"]


@dataclass
class EsseenEstimate:
    """A Monte Carlo estimate of I(X) or of one of the Esseen-type bounds."""
    kind: EstimateKind
    value: float
    std_error: float
    samples: int
    seed: int
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value <= 0:
            raise ValidationError(f"{self.kind} estimate must be positive and finite, got {self.value}")
        if self.std_error < 0:
            raise ValidationError("std_error must be nonnegative")

    def upper(self, sigmas: float = 4.0) -> float:
        """Estimate plus ``sigmas`` standard errors."""
        return self.value + sigmas * self.std_error

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "kind": self.kind,
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class LemmaTVCheck:
    lam: float
    w: float
    alpha: float
    lhs: float
    rhs: float
    holds: bool
    quadrature_error: float
    points: int


@dataclass
class ScaledBound:
    """Minimizer of kappa(tK)^d I(t/R X_V) over a t-grid."""
    t_star: float
    best: EsseenEstimate
    profile: List[Dict[str, float]]


# ---------------------------------------------------------------------------
# hyperplane
# ---------------------------------------------------------------------------

@dataclass
class HyperplaneReport:
    """A linear hyperplane (by unit normal) and how V sits around it."""
    normal: np.ndarray
    near_count: int
    far_count: int
    distances: np.ndarray  # sorted ascending
    method: Literal["exhaustive", "svd_heuristic"]
    R: float
    k: int
    objective: float  # (k+1)-th largest distance
    candidate: str
    candidates_evaluated: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "normal": self.normal.tolist(),
            "near_count": self.near_count,
            "far_count": self.far_count,
            "distances": self.distances.tolist(),
            "method": self.method,
            "R": self.R,
            "k": self.k,
            "objective": self.objective,
            "candidate": self.candidate,
            "candidates_evaluated": self.candidates_evaluated,
        }


@dataclass
class SeparatedBasis:
    """Greedy basis whose vectors are each >= R away from the span of the previous ones."""
    vectors: np.ndarray
    depth: int
    distances: List[float]
    R: float
    indices: List[int] = field(default_factory=list)

    def verify(self, tol: float = 1e-9) -> bool:
        """Recompute the distance property by Gram-Schmidt."""
        basis: List[np.ndarray] = []
        for w in self.vectors:
            residual = np.array(w, dtype=float)
            for q in basis:
                residual = residual - np.dot(residual, q) * q
            dist = float(np.linalg.norm(residual))
            if dist < self.R - tol:
                return False
            basis.append(residual / dist)
        return True


@dataclass
class PropHyperCheck:
    hypothesis_holds: bool
    objective: float
    I_estimate: Optional[EsseenEstimate]
    rhs: float
    inequality_holds: Optional[bool]
    method: str
    reason: str = ""


@dataclass
class ThmHyperCheck:
    rho: float
    threshold: float
    premise_holds: bool
    conclusion_holds: Optional[bool]
    near_count: int
    required_near: int
    max_k_distance: Optional[float]
    k_distance_bound: float
    contrapositive_rhs: Optional[float] = None
    contrapositive_holds: Optional[bool] = None


# ---------------------------------------------------------------------------
# gap
# ---------------------------------------------------------------------------

@dataclass
class Gap:
    """A generalized arithmetic progression {sum x_j g_j : |x_j| <= L_j}."""
    generators: np.ndarray
    bounds: Tuple[int, ...]
    dimension: int = 0

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=float)
        if gens.size == 0:
            gens = gens.reshape(0, self.dimension or 1)
        elif gens.ndim == 1:
            gens = gens.reshape(-1, self.dimension or 1)
        self.generators = gens
        self.dimension = gens.shape[1]
        self.bounds = tuple(int(b) for b in self.bounds)
        if len(self.bounds) != gens.shape[0]:
            raise ValidationError("one bound per generator is required")
        if any(b < 0 for b in self.bounds):
            raise ValidationError("GAP bounds must be nonnegative integers")

    @property
    def rank(self) -> int:
        return len(self.bounds)

    @property
    def box_size(self) -> int:
        """prod(2 L_j + 1), the size of the coefficient box."""
        size = 1
        for b in self.bounds:
            size *= 2 * b + 1
        return size

    def coefficients(self, budget: int = GAP_SIZE_BUDGET) -> np.ndarray:
        if self.box_size > budget:
            raise BudgetExceededError("GAP enumeration", self.box_size, budget)
        return integer_box(self.bounds)

    def points(self, budget: int = GAP_SIZE_BUDGET) -> np.ndarray:
        """All coefficient combinations, with repetitions."""
        coeffs = self.coefficients(budget)
        if self.rank == 0:
            return np.zeros((1, self.dimension))
        return coeffs @ self.generators

    def enumerate(self, budget: int = GAP_SIZE_BUDGET) -> np.ndarray:
        """Distinct elements of Q (tolerance 1e-9)."""
        return unique_points(self.points(budget))

    def scaled(self, factor: float) -> "Gap":
        return Gap(self.generators * factor, self.bounds, self.dimension)

    def find_representation(self, point, budget: int = GAP_SIZE_BUDGET, tol: float = MERGE_TOLERANCE) -> Optional[np.ndarray]:
        """Integer coefficients x with sum x_j g_j = point, or None."""
        target = np.asarray(point, dtype=float).reshape(1, self.dimension)
        coeffs = self.coefficients(budget)
        pts = coeffs @ self.generators if self.rank else np.zeros((1, self.dimension))
        hits = np.flatnonzero(np.max(np.abs(pts - target), axis=1) <= tol)
        if hits.size == 0:
            return None
        # smallest coefficient box first
        best = hits[np.argmin(np.max(np.abs(coeffs[hits]), axis=1))] if self.rank else hits[0]
        return coeffs[best].copy()

    def to_dict(self) -> Dict[str, Any]:
        return {"generators": self.generators.tolist(), "bounds": list(self.bounds)}


@dataclass
class LevelSetResult:
    m: int
    M: float
    N: int
    S: np.ndarray
    alpha: float
    average_statistic: float
    eta_average: float
    grid_size: int
    required_size: float
    found: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "M": self.M,
            "N": self.N,
            "S_size": int(self.S.shape[0]),
            "alpha": self.alpha,
            "average_statistic": self.average_statistic,
            "eta_average": self.eta_average,
            "grid_size": self.grid_size,
            "required_size": self.required_size,
            "found": self.found,
        }


@dataclass
class BadVectorSplit:
    good: List[int]
    bad: List[int]
    per_vector_average: np.ndarray
    threshold: float
    markov_applicable: bool
    markov_holds: bool
    counterexample: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "good": self.good,
            "bad": self.bad,
            "threshold": self.threshold,
            "markov_applicable": self.markov_applicable,
            "markov_holds": self.markov_holds,
            "counterexample": self.counterexample,
        }


@dataclass
class KChoice:
    k: int
    raw: float
    range_lower: Optional[float]
    range_upper: float
    in_range: Optional[bool]


@dataclass
class DualVolumeCheck:
    lhs_volume: float
    rhs: float
    holds: bool
    sumset_size: int
    resolution: int
    cell_count: int


@dataclass
class LatticeRounding:
    F: np.ndarray  # distinct integer points
    assignment: np.ndarray  # z for each input vector
    max_error: float
    scale: float  # D k

    def to_dict(self) -> Dict[str, Any]:
        return {
            "F": self.F.tolist(),
            "assignment": self.assignment.tolist(),
            "max_error": self.max_error,
            "scale": self.scale,
        }


@dataclass
class GapFit:
    gap: Gap
    cardinality: int
    method: Literal["greedy", "unimodular", "box_fallback", "point_sum"]
    targets: int
    candidates_tried: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gap": self.gap.to_dict(),
            "cardinality": self.cardinality,
            "method": self.method,
            "targets": self.targets,
            "candidates_tried": self.candidates_tried,
        }


@dataclass
class VerificationRecord:
    """One inequality of a verification: both sides, verdict and constants used."""
    name: str
    lhs: Optional[float]
    rhs: Optional[float]
    holds: Optional[bool]
    constants: Dict[str, float] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class GapPipelineReport:
    n_prime: int
    k: int
    D: float
    alpha: float
    rho: float
    F: np.ndarray
    gap: Optional[Gap]
    scaled_gap: Optional[Gap]
    stages: List[VerificationRecord]
    parts: List[VerificationRecord]
    constants: Dict[str, float]
    findings: List[str] = field(default_factory=list)
    properness_convention: str = "injective on the coefficient box: |Q| = prod(2 L_j + 1)"

    def record(self, name: str) -> VerificationRecord:
        for rec in self.stages + self.parts:
            if rec.name == name:
                return rec
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_prime": self.n_prime,
            "k": self.k,
            "D": self.D,
            "alpha": self.alpha,
            "rho": self.rho,
            "F": self.F.tolist(),
            "gap": self.gap.to_dict() if self.gap is not None else None,
            "scaled_gap": self.scaled_gap.to_dict() if self.scaled_gap is not None else None,
            "stages": self.stages,
            "parts": self.parts,
            "constants": self.constants,
            "findings": self.findings,
            "properness_convention": self.properness_convention,
        }
