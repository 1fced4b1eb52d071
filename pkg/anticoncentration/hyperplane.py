"""Near-hyperplane concentration of a vector system."""

import logging
import math
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

from .config import (
    ANGULAR_SWEEP_POINTS,
    DEFAULT_SAMPLES,
    HYPERPLANE_CANDIDATE_BUDGET,
    MEMBERSHIP_TOLERANCE,
    ConstantsConfig,
)
from .esseen import esseen_integral
from .exceptions import ValidationError
from .geometry import estimate_embedding_constants
from .models import (
    BodyConstants,
    HyperplaneReport,
    PropHyperCheck,
    SeparatedBasis,
    ThmHyperCheck,
    VectorSystem,
    VerificationRecord,
)
from .noise import NoiseModel
from .smallball import small_ball

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-12


def dist_to_hyperplane(v, normal) -> float:
    """Euclidean distance from v to the linear hyperplane with the given normal."""
    normal = np.asarray(normal, dtype=float).reshape(-1)
    length = float(np.linalg.norm(normal))
    if length == 0:
        raise ValidationError("normal must be nonzero")
    return abs(float(np.dot(np.asarray(v, dtype=float).reshape(-1), normal))) / length


def extract_separated_basis(vectors, R: float) -> SeparatedBasis:
    """
    Greedy basis with each vector at distance >= R from the span of the previous ones.

    At every step the lowest-index vector meeting the distance condition is
    taken; the search stops when none is left or the basis has d vectors.
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    n, d = V.shape
    chosen: List[int] = []
    distances: List[float] = []
    Q = np.zeros((0, d))
    for _ in range(d):
        residuals = V - (V @ Q.T) @ Q
        dist = np.linalg.norm(residuals, axis=1)
        dist[chosen] = -1.0
        eligible = np.flatnonzero(dist >= R * (1.0 - DEGENERACY_TOLERANCE))
        if eligible.size == 0:
            break
        j = int(eligible[0])
        chosen.append(j)
        distances.append(float(dist[j]))
        Q = np.vstack([Q, residuals[j] / dist[j]])
    return SeparatedBasis(
        vectors=V[chosen].copy(), depth=len(chosen), distances=distances, R=float(R), indices=chosen
    )


def _sign_normalize(normals: np.ndarray) -> np.ndarray:
    """Flip each row so its first nonzero component is positive."""
    out = normals.copy()
    for row in out:
        nz = np.flatnonzero(np.abs(row) > DEGENERACY_TOLERANCE)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out + 0.0


def _kth_largest(D: np.ndarray, k: int) -> np.ndarray:
    """(k+1)-th largest entry of every row; +inf when k >= row length."""
    n = D.shape[1]
    if k >= n:
        return np.full(D.shape[0], math.inf)
    return -np.partition(-D, k, axis=1)[:, k]


def _subset_normals(V: np.ndarray) -> Tuple[np.ndarray, List[str]]:
    n, d = V.shape
    scale = max(1.0, float(np.max(np.abs(V))))
    normals, labels = [], []
    if d == 2:
        for i in range(n):
            u = np.array([-V[i, 1], V[i, 0]])
            if np.linalg.norm(u) > DEGENERACY_TOLERANCE * scale:
                normals.append(u / np.linalg.norm(u))
                labels.append(f"subset({i})")
        for i, j in combinations(range(n), 2):
            for tag, w in (("sum", V[i] + V[j]), ("diff", V[i] - V[j])):
                u = np.array([-w[1], w[0]])
                if np.linalg.norm(u) > DEGENERACY_TOLERANCE * scale:
                    normals.append(u / np.linalg.norm(u))
                    labels.append(f"{tag}({i},{j})")
        return np.array(normals).reshape(-1, d), labels

    for subset in combinations(range(n), d - 1):
        M = V[list(subset)]
        if d == 3:
            u = np.cross(M[0], M[1])
            length = float(np.linalg.norm(u))
            if length <= DEGENERACY_TOLERANCE * scale * scale:
                continue
            u = u / length
        else:
            _, s, vt = np.linalg.svd(M, full_matrices=True)
            if s[-1] <= DEGENERACY_TOLERANCE * scale:
                continue
            u = vt[-1]
        normals.append(u)
        labels.append(f"subset{subset}")
    return np.array(normals).reshape(-1, d), labels


def _exhaustive_size(n: int, d: int) -> int:
    if d == 2:
        return n + n * (n - 1)
    return math.comb(n, d - 1)


def best_hyperplane(
    vectors,
    k: int,
    R: float = 1.0,
    budget: int = HYPERPLANE_CANDIDATE_BUDGET,
) -> HyperplaneReport:
    """
    Linear hyperplane minimizing the (k+1)-th largest distance |<v_j, n>|.

    Candidate normals are the normals of all spans of d-1 vectors and the d-1
    smallest right singular vectors of V. In the plane the normals orthogonal
    to v_i + v_j and v_i - v_j are added, which makes the search exact there.
    Beyond the candidate budget only the singular vectors are used and the
    report is labeled ``svd_heuristic``. The winner is refined once with the
    smallest singular vector of its n-k nearest vectors.

    Args:
        vectors: (n, d) array
        k: Number of vectors allowed far from the hyperplane
        R: Radius defining near vectors (|<v, n>| <= R)
        budget: Maximum number of subset candidates

    Raises:
        ValidationError: If V is all zero or k is negative
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    n, d = V.shape
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")
    if n == 0 or not np.any(V):
        raise ValidationError("best_hyperplane needs at least one nonzero vector")

    if d == 1:
        normals, labels, method = np.ones((1, 1)), ["axis"], "exhaustive"
    else:
        _, _, vt = np.linalg.svd(V, full_matrices=True)
        svd_normals = vt[-(d - 1):][::-1]
        svd_labels = [f"svd[{i}]" for i in range(d - 1)]
        if n >= d and _exhaustive_size(n, d) <= budget:
            subset_normals, subset_labels = _subset_normals(V)
            normals = np.vstack([subset_normals, svd_normals])
            labels = subset_labels + svd_labels
            method = "exhaustive"
        else:
            normals, labels, method = svd_normals, svd_labels, "svd_heuristic"
            logger.info(f"hyperplane search for n={n}, d={d} uses singular vectors only")

    normals = _sign_normalize(normals)
    objectives = _kth_largest(np.abs(normals @ V.T), k)
    best = int(np.lexsort((np.arange(objectives.size), objectives))[0])
    normal, objective, candidate = normals[best], float(objectives[best]), labels[best]

    if d > 1 and k < n:
        order = np.argsort(np.abs(V @ normal), kind="stable")[: n - k]
        _, _, vt = np.linalg.svd(V[order], full_matrices=True)
        refined = _sign_normalize(vt[-1:])[0]
        value = float(_kth_largest(np.abs(refined @ V.T)[None, :], k)[0])
        if value < objective - DEGENERACY_TOLERANCE * max(1.0, objective):
            normal, objective, candidate = refined, value, "refined"

    distances = np.sort(np.abs(V @ normal))
    tol = MEMBERSHIP_TOLERANCE * max(1.0, float(np.max(np.linalg.norm(V, axis=1))))
    near = int(np.count_nonzero(distances <= R + tol))
    return HyperplaneReport(
        normal=normal,
        near_count=near,
        far_count=n - near,
        distances=distances,
        method=method,
        R=float(R),
        k=int(k),
        objective=objective,
        candidate=candidate,
        candidates_evaluated=int(normals.shape[0]),
    )


def angular_certificate(vectors, k: int, points: int = ANGULAR_SWEEP_POINTS) -> Tuple[float, np.ndarray]:
    """Minimum of the (k+1)-th largest distance over a uniform grid of planar normals."""
    V = np.asarray(vectors, dtype=float)
    if V.shape[1] != 2:
        raise ValidationError("angular_certificate is defined in the plane only")
    theta = np.linspace(0.0, math.pi, points, endpoint=False)
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    values = _kth_largest(np.abs(normals @ V.T), k)
    best = int(np.argmin(values))
    return float(values[best]), normals[best]


# ---------------------------------------------------------------------------
# displayed bounds
# ---------------------------------------------------------------------------

def prop_hyper_rhs(d: int, R: float, c_eta: float, k: float) -> float:
    """(80 (R+1)/R sqrt(d / (d + c_eta k)))^d."""
    if not (R > 0 and c_eta > 0 and k >= 0 and d >= 1):
        raise ValidationError("need R > 0, c_eta > 0, k >= 0, d >= 1")
    return (80.0 * (R + 1.0) / R * math.sqrt(d / (d + c_eta * k))) ** d


def thm_hyper_threshold(d: int, kappa: float, c_eta: float, k: float, constant: float = 80.0) -> float:
    """(constant kappa)^d (d / (d + c_eta k))^(d/2)."""
    return (constant * kappa) ** d * (d / (d + c_eta * k)) ** (d / 2.0)


def corollary_k_bound(d: int, kappa: float, c_eta: float, A: float, n: int, constant: float = 80.0) -> float:
    """
    The k at which the threshold equals n^-A: d ((constant kappa)^2 n^(2A/d) - 1) / c_eta, clamped at 0.
    """
    if n < 2 or not A > 0:
        raise ValidationError("need n >= 2 and A > 0")
    k = d * ((constant * kappa) ** 2 * float(n) ** (2.0 * A / d) - 1.0) / c_eta
    k = max(0.0, k)
    if k >= n:
        logger.info(f"k bound {k:.4g} is vacuous for n={n}")
    return k


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _require_c_eta(model: NoiseModel) -> float:
    if model.c_eta is None:
        raise ValidationError(f"noise model {model.name!r} has no c_eta")
    return model.c_eta


def verify_prop_hyper(
    system: VectorSystem,
    model: NoiseModel,
    k: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    **kwargs,
) -> PropHyperCheck:
    """
    Check I(X_V) <= prop_hyper_rhs when every hyperplane leaves n-k vectors at distance >= R.

    The quantifier over hyperplanes is replaced by the minimum over the
    candidate family of ``best_hyperplane``; in d >= 3 the caveat is recorded.
    """
    c_eta = _require_c_eta(model)
    d, R = system.dimension, system.R
    report = best_hyperplane(system.vectors, k, R)
    rhs = prop_hyper_rhs(d, R, c_eta, k)
    hypothesis = report.objective >= R * (1.0 - DEGENERACY_TOLERANCE)
    caveat = "" if d <= 2 else "hyperplanes limited to the candidate family"
    if not hypothesis:
        return PropHyperCheck(
            hypothesis_holds=False,
            objective=report.objective,
            I_estimate=None,
            rhs=rhs,
            inequality_holds=None,
            method=report.method,
            reason=f"a hyperplane leaves more than k={k} vectors within distance R (objective {report.objective:.6g})",
        )

    estimate = esseen_integral(system, model, samples, seed, **kwargs)
    holds = estimate.value <= rhs + 4.0 * estimate.std_error
    if not holds:
        logger.warning(f"I(X_V)={estimate.value:.6g} exceeds {rhs:.6g}")
    return PropHyperCheck(
        hypothesis_holds=True,
        objective=report.objective,
        I_estimate=estimate,
        rhs=rhs,
        inequality_holds=holds,
        method=report.method,
        reason=caveat,
    )


def contrapositive_check(
    system: VectorSystem,
    model: NoiseModel,
    body_constants: BodyConstants,
    k: int,
    rho: Optional[float] = None,
) -> VerificationRecord:
    """
    rho <= kappa^d prop_hyper_rhs(d, 1, c_eta, k) on V_R when V_R satisfies the distance hypothesis with R = 1.
    """
    c_eta = _require_c_eta(model)
    d = system.dimension
    rescaled = system.rescaled()
    report = best_hyperplane(rescaled.vectors, k, 1.0)
    rhs = body_constants.kappa**d * prop_hyper_rhs(d, 1.0, c_eta, k)
    constants = {"kappa": body_constants.kappa, "c_eta": c_eta}
    if report.objective < 1.0 - DEGENERACY_TOLERANCE:
        return VerificationRecord(
            "contrapositive", lhs=rho, rhs=rhs, holds=None, constants=constants,
            details={"reason": "distance hypothesis fails", "objective": report.objective},
        )
    if rho is None:
        rho = small_ball(system, model).rho
    return VerificationRecord(
        "contrapositive", lhs=rho, rhs=rhs, holds=rho <= rhs, constants=constants,
        details={"objective": report.objective},
    )


def verify_thm_hyper(
    system: VectorSystem,
    model: NoiseModel,
    body_constants: BodyConstants,
    k: int,
    constants: Optional[ConstantsConfig] = None,
    rho: Optional[float] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> ThmHyperCheck:
    """
    Compare rho with the concentration threshold and, above it, check that a
    hyperplane holds n-k vectors within distance R.

    The K-distance of a near vector is bounded by ||v - P_H v||_K and compared
    with omega_2(K) R.
    """
    if system.body is None:
        raise ValidationError("verify_thm_hyper needs a system with a body")
    c_eta = _require_c_eta(model)
    constant = (constants or ConstantsConfig()).hyper_constant
    d, n, R = system.dimension, system.n, system.R
    if rho is None:
        rho = small_ball(system, model).rho
    threshold = thm_hyper_threshold(d, body_constants.kappa, c_eta, k, constant)
    omega_2 = estimate_embedding_constants(system.body, 2.0, samples, seed).omega
    contra = contrapositive_check(system, model, body_constants, k, rho)

    premise = rho >= threshold
    required = max(0, n - k)
    report = best_hyperplane(system.vectors, k, R)
    conclusion = None
    max_k = None
    if premise:
        conclusion = report.near_count >= required
        near = np.abs(system.vectors @ report.normal) <= R + MEMBERSHIP_TOLERANCE
        if np.any(near):
            residual = np.outer(system.vectors[near] @ report.normal, report.normal)
            max_k = float(np.max(system.body.norms(residual)))
        if not conclusion:
            logger.warning(f"rho={rho:.6g} is above the threshold but only {report.near_count} vectors are near")
    return ThmHyperCheck(
        rho=rho,
        threshold=threshold,
        premise_holds=premise,
        conclusion_holds=conclusion,
        near_count=report.near_count,
        required_near=required,
        max_k_distance=max_k,
        k_distance_bound=omega_2 * R,
        contrapositive_rhs=contra.rhs,
        contrapositive_holds=contra.holds,
    )
