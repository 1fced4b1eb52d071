"""
Small-ball probabilities of X_V = sum eta_j v_j.

The law of X_V is enumerated exactly for finite-support coefficients and the
supremum over translates of RK is computed by an exact kernel when one exists
for the body (intervals, boxes, the l1 diamond and the disk in the plane).
Other bodies get a certified lower bound from a candidate-center search.
"""

import logging
import math
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .config import (
    DEFAULT_SAMPLES,
    ENUMERATION_BUDGET,
    LATTICE_CANDIDATE_BUDGET,
    MEMBERSHIP_TOLERANCE,
    MERGE_TOLERANCE,
)
from .exceptions import BudgetExceededError, ValidationError
from .geometry import BodyKind, StarBody
from .models import AtomDistribution, SharpLOReport, SmallBallResult, VectorSystem
from .noise import NoiseModel
from .utils.pointsets import as_points, merge_points
from .utils.sampling import binomial_std_error, block_map

logger = logging.getLogger(__name__)

# Kernels search with a slightly inflated radius that stays inside the
# membership tolerance, so every counted atom is also counted on recomputation.
SWEEP_SLACK = 1e-13

MAX_SHARP_LO_N = 24


def atoms(
    system: VectorSystem,
    model: NoiseModel,
    budget: int = ENUMERATION_BUDGET,
    tol: float = MERGE_TOLERANCE,
) -> AtomDistribution:
    """
    Exact law of X_V by iterated convolution.

    Raises:
        BudgetExceededError: If |support|^n exceeds the budget
    """
    n, d = system.n, system.dimension
    requested = float(model.support_size) ** n
    if requested > budget:
        raise BudgetExceededError("atom enumeration", requested, budget)

    points = np.zeros((1, d))
    weights = np.ones(1)
    for v in system.vectors:
        shifted = points[:, None, :] + model.values[None, :, None] * v[None, None, :]
        points = shifted.reshape(-1, d)
        weights = (weights[:, None] * model.probabilities[None, :]).reshape(-1)
        points, weights = merge_points(points, weights, tol)
        keep = weights > 0
        points, weights = points[keep], weights[keep]
    logger.debug(f"enumerated {points.shape[0]} atoms for n={n}, d={d}")
    return AtomDistribution(points=points, weights=weights, merge_tolerance=tol)


def mass_in_translate(atoms: AtomDistribution, body: StarBody, R: float, center) -> float:
    """P(X in center + RK) with closed membership ||X - center||_K <= R."""
    center = np.asarray(center, dtype=float).reshape(1, -1)
    inside = body.contains(atoms.points - center, R, MEMBERSHIP_TOLERANCE)
    return float(np.sum(atoms.weights[inside]))


# ---------------------------------------------------------------------------
# exact kernels
# ---------------------------------------------------------------------------

def _window_1d(coords: np.ndarray, weights: np.ndarray, a: float, b: float, R: float) -> Tuple[float, float]:
    """
    Heaviest translate of R[-a, b] over weighted points on a line.

    Returns:
        (mass, center)
    """
    order = np.argsort(coords, kind="stable")
    s = coords[order]
    cum = np.concatenate([[0.0], np.cumsum(weights[order])])
    Rs = R * (1.0 + SWEEP_SLACK) + SWEEP_SLACK
    centers = s + a * R
    lo = np.searchsorted(s, centers - a * Rs, side="left")
    hi = np.searchsorted(s, centers + b * Rs, side="right")
    mass = cum[hi] - cum[lo]
    best = int(np.argmax(mass))
    return float(mass[best]), float(centers[best])


def _box_sweep(points: np.ndarray, weights: np.ndarray, lower: np.ndarray, upper: np.ndarray, R: float,
               floor: float = -1.0) -> Tuple[float, Optional[np.ndarray]]:
    """
    Heaviest translate of the box R * prod[-lower_i, upper_i].

    Recursive strip sweep: an optimal box can be pushed until its lower face
    touches an atom along every axis.
    """
    d = points.shape[1]
    if d == 1:
        mass, c = _window_1d(points[:, 0], weights, lower[0], upper[0], R)
        return mass, np.array([c])

    Rs = R * (1.0 + SWEEP_SLACK) + SWEEP_SLACK
    best_mass, best_center = floor, None
    coords = points[:, 0]
    for c in np.unique(coords):
        center0 = c + lower[0] * R
        strip = (coords >= center0 - lower[0] * Rs) & (coords <= center0 + upper[0] * Rs)
        if np.sum(weights[strip]) <= best_mass:
            continue
        mass, rest = _box_sweep(points[strip, 1:], weights[strip], lower[1:], upper[1:], R, best_mass)
        if rest is not None and mass > best_mass:
            best_mass, best_center = mass, np.concatenate([[center0], rest])
    return best_mass, best_center


def _disk_sweep(points: np.ndarray, weights: np.ndarray, r: float) -> Tuple[float, np.ndarray]:
    """
    Heaviest closed disk of radius r in the plane.

    Angular sweep: an optimal disk can be moved until an atom lies on its
    boundary, so for each anchor atom the center runs over the circle of
    radius r around it and each other atom is covered on an arc of angles.
    """
    rs = r * (1.0 + SWEEP_SLACK) + SWEEP_SLACK
    best_mass, best_center = -1.0, points[0].copy()
    two_pi = 2.0 * math.pi
    for i in range(points.shape[0]):
        diff = points - points[i]
        dist = np.hypot(diff[:, 0], diff[:, 1])
        near = (dist <= 2.0 * rs) & (dist > 0)
        base = float(np.sum(weights[dist == 0]))
        if not np.any(near):
            if base > best_mass:
                best_mass, best_center = base, points[i].copy()
            continue
        phi = np.arctan2(diff[near, 1], diff[near, 0])
        delta = np.arccos(np.clip(dist[near] / (2.0 * rs), -1.0, 1.0))
        w = weights[near]
        start = np.mod(phi - delta, two_pi)
        end = start + 2.0 * delta
        wraps = end >= two_pi

        # events: (angle, kind, weight) with starts (kind 0) before ends (kind 1)
        angles = np.concatenate([start, np.where(wraps, end - two_pi, end)])
        kinds = np.concatenate([np.zeros(w.size), np.ones(w.size)])
        signed = np.concatenate([w, -w])
        order = np.lexsort((kinds, angles))
        running = base + float(np.sum(w[wraps])) + np.cumsum(signed[order])
        initial = base + float(np.sum(w[wraps]))

        k = int(np.argmax(running))
        if running[k] >= initial:
            mass, theta = float(running[k]), float(angles[order][k])
        else:
            mass, theta = initial, 0.0
        if mass > best_mass:
            best_mass = mass
            best_center = points[i] + r * np.array([math.cos(theta), math.sin(theta)])
    return best_mass, best_center


def _lattice_search(atoms: AtomDistribution, body: StarBody, R: float,
                    budget: int = LATTICE_CANDIDATE_BUDGET) -> Tuple[float, np.ndarray]:
    """Best center among the atoms and a regular lattice over their bounding box."""
    pts = atoms.points
    m, d = pts.shape
    per_axis = max(2, int((max(budget - m, 2 ** d)) ** (1.0 / d)))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    axes = [np.linspace(lo[j], hi[j], per_axis) for j in range(d)]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    candidates = np.vstack([pts, lattice])[: max(budget, m)]

    best_mass, best_center = -1.0, candidates[0]
    chunk = max(1, 2_000_000 // max(m, 1))
    for start in range(0, candidates.shape[0], chunk):
        block = candidates[start:start + chunk]
        diff = (pts[None, :, :] - block[:, None, :]).reshape(-1, d)
        inside = body.contains(diff, R, MEMBERSHIP_TOLERANCE).reshape(block.shape[0], m)
        masses = inside.astype(float) @ atoms.weights
        k = int(np.argmax(masses))
        if masses[k] > best_mass:
            best_mass, best_center = float(masses[k]), block[k].copy()
    return best_mass, best_center


def _box_bounds(body: StarBody) -> Optional[np.ndarray]:
    if body.kind == BodyKind.BOX:
        return body.half_widths * body.scale
    if body.kind == BodyKind.LP and math.isinf(body.p):
        return np.full(body.dimension, body.scale)
    return None


def rho_exact(atoms: AtomDistribution, body: StarBody, R: float) -> SmallBallResult:
    """
    sup over x of P(X in x + RK) for an enumerated law.

    Dispatch:
        d = 1: sliding window over the sorted atoms (exact)
        boxes and B_inf: recursive strip sweep (exact)
        B_1 in the plane: rotation to a square, then the strip sweep (exact)
        B_2 in the plane: angular sweep around each atom (exact)
        otherwise: atoms plus a lattice of candidate centers (lower bound)

    The returned rho is always recomputed at the witness center.

    Raises:
        ValidationError: If the law is empty or R is not positive
    """
    if atoms.size == 0:
        raise ValidationError("rho_exact needs at least one atom")
    if not R > 0:
        raise ValidationError(f"R must be positive, got {R}")
    if atoms.dimension != body.dimension:
        raise ValidationError(f"atoms live in R^{atoms.dimension}, body in R^{body.dimension}")

    pts, w, d = atoms.points, atoms.weights, atoms.dimension
    certificate = "exact"
    box = _box_bounds(body)
    if d == 1:
        a, b = body.interval()
        _, c = _window_1d(pts[:, 0], w, a, b, R)
        center, method = np.array([c]), "interval_window"
    elif box is not None:
        _, center = _box_sweep(pts, w, box, box, R)
        method = "box_sweep"
    elif body.kind == BodyKind.LP and body.p == 1.0 and d == 2:
        rotated = np.column_stack([pts[:, 0] + pts[:, 1], pts[:, 0] - pts[:, 1]])
        half = np.full(2, body.scale)
        _, c = _box_sweep(rotated, w, half, half, R)
        center, method = np.array([(c[0] + c[1]) / 2.0, (c[0] - c[1]) / 2.0]), "l1_rotation"
    elif body.kind == BodyKind.LP and body.p == 2.0 and d == 2:
        _, center = _disk_sweep(pts, w, R * body.scale)
        method = "disk_sweep"
    else:
        _, center = _lattice_search(atoms, body, R)
        method, certificate = "lattice_search", "lower_bound"
        logger.info(f"no exact kernel for {body!r}; reporting a lower bound")

    rho = mass_in_translate(atoms, body, R, center)
    return SmallBallResult(rho=rho, certificate=certificate, center=np.asarray(center, dtype=float), method=method)


def small_ball(system: VectorSystem, model: NoiseModel, body: Optional[StarBody] = None,
               budget: int = ENUMERATION_BUDGET) -> SmallBallResult:
    """rho_R^K(X_V) for a system, enumerating its law first."""
    body = body or system.body
    if body is None:
        raise ValidationError("a body is required")
    return rho_exact(atoms(system, model, budget), body, system.R)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def rho_mc(
    system: VectorSystem,
    model: NoiseModel,
    body: StarBody,
    R: float,
    samples: int = DEFAULT_SAMPLES,
    centers=None,
    seed: int = 0,
    **kwargs,
) -> SmallBallResult:
    """
    Sampled max over the given centers of P(X in x + RK).

    The result is a lower bound on rho with a binomial standard error.
    """
    d = system.dimension
    C = as_points(centers if centers is not None else np.zeros((1, d)), d)
    if C.shape[0] == 0:
        raise ValidationError("rho_mc needs at least one center")
    V = system.vectors

    def hits(rng: np.random.Generator, size: int) -> np.ndarray:
        eta = model.sample(rng, (size, system.n))
        X = eta @ V if system.n else np.zeros((size, d))
        counts = np.empty(C.shape[0])
        for j, c in enumerate(C):
            counts[j] = np.count_nonzero(body.contains(X - c, R, MEMBERSHIP_TOLERANCE))
        return counts[None, :]

    totals = np.sum(np.vstack(block_map(hits, samples, seed, **kwargs)), axis=0)
    best = int(np.argmax(totals))
    estimate = float(totals[best]) / samples
    return SmallBallResult(
        rho=estimate,
        certificate="lower_bound",
        center=C[best].copy(),
        method="monte_carlo",
        std_error=binomial_std_error(estimate, samples),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# sharp Littlewood-Offord
# ---------------------------------------------------------------------------

def binomial_sum_S(n: int, m: int) -> int:
    """Sum of the m largest binomial coefficients C(n, 0..n), exact."""
    if n < 0 or not 1 <= m <= n + 1:
        raise ValidationError(f"need 1 <= m <= n+1, got n={n}, m={m}")
    coefficients = sorted((math.comb(n, j) for j in range(n + 1)), reverse=True)
    return sum(coefficients[:m])


def sharp_lo_report(n: int, R: float) -> SharpLOReport:
    """
    Compare the all-ones system in R^1 with 2^-n S(n, floor(R) + 1).

    Atom weights are dyadic with denominator 2^n, so the float rho converts to
    an exact Fraction for the comparison.
    """
    if not 1 <= n <= MAX_SHARP_LO_N:
        raise ValidationError(f"n must be in [1, {MAX_SHARP_LO_N}] for exact enumeration, got {n}")
    if not R > 0:
        raise ValidationError(f"R must be positive, got {R}")
    body = StarBody.lp_ball(2.0, 1)
    system = VectorSystem(np.ones((n, 1)), R, body)
    result = rho_exact(atoms(system, NoiseModel.bernoulli()), body, R)

    m = min(int(math.floor(R)) + 1, n + 1)
    bound_fraction = Fraction(binomial_sum_S(n, m), 2**n)
    rho_fraction = Fraction(result.rho)
    bound = float(bound_fraction)
    return SharpLOReport(
        n=n,
        R=float(R),
        rho=result.rho,
        bound=bound,
        ratio=result.rho / bound,
        exact_match=rho_fraction == bound_fraction,
        rho_fraction=rho_fraction,
        bound_fraction=bound_fraction,
    )
