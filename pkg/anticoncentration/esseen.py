"""
Characteristic-function bounds on small-ball probabilities.

I(X) = integral of |E exp(i<X, xi>)| exp(-|xi|^2 / 2) is evaluated as
(2 pi)^(d/2) times a Gaussian expectation, which keeps the domain bounded and
gives a standard error for free.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .config import (
    DEFAULT_SAMPLES,
    LEMMA_TV_GRID,
    LEMMA_TV_QUAD_POINTS,
    LEMMA_TV_TRUNCATION,
    MIN_SAMPLES,
    ConstantsConfig,
)
from .exceptions import ValidationError
from .geometry import kappa_scaling_profile
from .models import BodyConstants, EsseenEstimate, LemmaTVCheck, ScaledBound, VectorSystem
from .noise import NoiseModel, char_abs, eta_norm_squared, t_norm
from .utils.sampling import block_mean

logger = logging.getLogger(__name__)

MIN_QUAD_POINTS = 1_000


def _check_samples(samples: int) -> None:
    if samples < MIN_SAMPLES:
        raise ValidationError(f"samples must be >= {MIN_SAMPLES}, got {samples}")


def _char_product(vectors: np.ndarray, model: NoiseModel, xi: np.ndarray) -> np.ndarray:
    """prod_j |phi_eta(<v_j, xi>)| for each row of xi."""
    if vectors.shape[0] == 0:
        return np.ones(xi.shape[0])
    return np.prod(char_abs(model, xi @ vectors.T), axis=1)


def char_system_abs(system: VectorSystem, model: NoiseModel, xi) -> float:
    """|E exp(i<X_V, xi>)| = prod_j |E exp(i eta <v_j, xi>)|."""
    xi = np.asarray(xi, dtype=float).reshape(1, -1)
    if xi.shape[1] != system.dimension:
        raise ValidationError(f"xi has dimension {xi.shape[1]}, expected {system.dimension}")
    return float(_char_product(system.vectors, model, xi)[0])


def esseen_integral(
    system: VectorSystem,
    model: NoiseModel,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    **kwargs,
) -> EsseenEstimate:
    """
    I(X_V) = (2 pi)^(d/2) E |phi_{X_V}(g)| for g ~ N(0, I_d).

    The vectors are used as given; callers rescale by 1/R themselves.
    """
    _check_samples(samples)
    d = system.dimension
    weight = (2.0 * math.pi) ** (d / 2.0)
    vectors = system.vectors

    def integrand(rng: np.random.Generator, size: int) -> np.ndarray:
        g = rng.standard_normal((size, d))
        return weight * _char_product(vectors, model, g)

    result = block_mean(integrand, samples, seed, **kwargs)
    return EsseenEstimate(
        kind="I_integral",
        value=result.mean,
        std_error=result.std_error,
        samples=result.samples,
        seed=seed,
    )


def esseen_bound(
    system: VectorSystem,
    model: NoiseModel,
    body_constants: BodyConstants,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    **kwargs,
) -> EsseenEstimate:
    """
    kappa(K)^d I(X_{V_R}) with V_R = {v_j / R}.

    The raw estimate and its standard error are reported; no error margin is
    subtracted.
    """
    d = system.dimension
    integral = esseen_integral(system.rescaled(), model, samples, seed, **kwargs)
    factor = body_constants.kappa**d
    return EsseenEstimate(
        kind="esseen_k_bound",
        value=factor * integral.value,
        std_error=factor * integral.std_error,
        samples=integral.samples,
        seed=seed,
        details={"kappa": body_constants.kappa, "I": integral.value, "I_std_error": integral.std_error, "R": system.R},
    )


def esseen_eta_bound(
    system: VectorSystem,
    model: NoiseModel,
    body_constants: BodyConstants,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    **kwargs,
) -> EsseenEstimate:
    """kappa^d (2 pi)^(d/2) E exp(-1/2 sum_{v in V_R} ||<v, g>||_eta^2)."""
    _check_samples(samples)
    d = system.dimension
    vectors = system.rescaled().vectors
    deltas, weights = model.difference_law()
    factor = body_constants.kappa**d * (2.0 * math.pi) ** (d / 2.0)

    def integrand(rng: np.random.Generator, size: int) -> np.ndarray:
        g = rng.standard_normal((size, d))
        if vectors.shape[0] == 0:
            return np.full(size, factor)
        exponent = np.sum(eta_norm_squared(model, g @ vectors.T, deltas, weights), axis=1)
        return factor * np.exp(-0.5 * exponent)

    result = block_mean(integrand, samples, seed, **kwargs)
    return EsseenEstimate(
        kind="esseen_eta_bound",
        value=result.mean,
        std_error=result.std_error,
        samples=result.samples,
        seed=seed,
        details={"kappa": body_constants.kappa, "R": system.R},
    )


def esseen_euclidean_bound(
    system: VectorSystem,
    epsilon: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    model: Optional[NoiseModel] = None,
    constants: Optional[ConstantsConfig] = None,
    **kwargs,
) -> EsseenEstimate:
    """
    C^d (R/sqrt(d) + sqrt(d)/eps)^d times the integral of |phi_X| over eps B_2.

    The integral is a uniform-ball Monte Carlo mean times the ball volume. C is
    ``constants.C_euclidean`` (default 1), so the result is for comparison only
    and may fall below rho.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    _check_samples(samples)
    model = model or NoiseModel.bernoulli()
    C = (constants or ConstantsConfig()).C_euclidean
    d, R = system.dimension, system.R
    vectors = system.vectors
    log_volume = (d / 2.0) * math.log(math.pi) - special.gammaln(d / 2.0 + 1.0) + d * math.log(epsilon)
    volume = math.exp(log_volume)
    prefactor = (C * (R / math.sqrt(d) + math.sqrt(d) / epsilon)) ** d

    def integrand(rng: np.random.Generator, size: int) -> np.ndarray:
        g = rng.standard_normal((size, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        xi = g * (epsilon * rng.uniform(size=(size, 1)) ** (1.0 / d))
        return prefactor * volume * _char_product(vectors, model, xi)

    result = block_mean(integrand, samples, seed, **kwargs)
    return EsseenEstimate(
        kind="euclidean_bound",
        value=result.mean,
        std_error=result.std_error,
        samples=result.samples,
        seed=seed,
        details={"epsilon": epsilon, "C": C, "ball_volume": volume, "prefactor": prefactor},
    )


# ---------------------------------------------------------------------------
# one-dimensional torus integral
# ---------------------------------------------------------------------------

def _piecewise_gauss_legendre(f, breaks: np.ndarray, order: int) -> float:
    nodes, weights = leggauss(order)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * f(x)))


def lemma_tv_check(
    lam: float,
    w: float,
    alpha: float,
    quad_points: int = LEMMA_TV_QUAD_POINTS,
    truncation: float = LEMMA_TV_TRUNCATION,
) -> LemmaTVCheck:
    """
    Check the integral of exp(-lam ||xi w + alpha||_T^2 - xi^2/2) against
    40 (|w| + 1) / (|w| sqrt(1 + lam)).

    The integrand is smooth between the points where xi w + alpha is a multiple
    of pi/2, so those points split [-truncation, truncation] into pieces that
    each get a Gauss-Legendre rule. The reported quadrature error is the gap to
    the same rule at half the order.

    Raises:
        ValidationError: If lam <= 0, w == 0 or quad_points < 1000
    """
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    if w == 0:
        raise ValidationError("w must be nonzero")
    if quad_points < MIN_QUAD_POINTS:
        raise ValidationError(f"quad_points must be >= {MIN_QUAD_POINTS}, got {quad_points}")

    def integrand(xi: np.ndarray) -> np.ndarray:
        t = t_norm(xi * w + alpha)
        return np.exp(-lam * t * t - 0.5 * xi * xi)

    L = truncation
    k_lo, k_hi = sorted(((-L * w + alpha) / (math.pi / 2), (L * w + alpha) / (math.pi / 2)))
    ks = np.arange(math.ceil(k_lo), math.floor(k_hi) + 1)
    kinks = (ks * (math.pi / 2) - alpha) / w
    breaks = np.unique(np.concatenate([[-L, L], kinks[(kinks > -L) & (kinks < L)]]))
    pieces = breaks.size - 1
    order = max(8, quad_points // pieces)

    lhs = _piecewise_gauss_legendre(integrand, breaks, order)
    coarse = _piecewise_gauss_legendre(integrand, breaks, max(4, order // 2))
    rhs = 40.0 * (abs(w) + 1.0) / (abs(w) * math.sqrt(1.0 + lam))
    holds = lhs <= rhs
    if not holds:
        logger.warning(f"torus integral bound fails at lam={lam}, w={w}, alpha={alpha}: {lhs} > {rhs}")
    return LemmaTVCheck(
        lam=float(lam),
        w=float(w),
        alpha=float(alpha),
        lhs=lhs,
        rhs=rhs,
        holds=holds,
        quadrature_error=abs(lhs - coarse),
        points=pieces * order,
    )


def lemma_tv_sweep(grid: Optional[Dict[str, Sequence[float]]] = None,
                   quad_points: int = LEMMA_TV_QUAD_POINTS) -> List[LemmaTVCheck]:
    """lemma_tv_check over the product grid lambda x w x alpha."""
    grid = grid or LEMMA_TV_GRID
    return [
        lemma_tv_check(lam, w, alpha, quad_points)
        for lam in grid["lambda"]
        for w in grid["w"]
        for alpha in grid["alpha"]
    ]


# ---------------------------------------------------------------------------
# scaled bound
# ---------------------------------------------------------------------------

def optimize_scaled_bound(
    system: VectorSystem,
    model: NoiseModel,
    t_grid: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "auto",
    **kwargs,
) -> ScaledBound:
    """
    Minimize kappa(tK)^d I((t/R) X_V) over a grid of t.

    Every t uses the same seed, so t = 1 reproduces ``esseen_bound`` with
    constants from ``estimate_constants(body, samples, seed)``.
    """
    if system.body is None:
        raise ValidationError("optimize_scaled_bound needs a system with a body")
    grid = [float(t) for t in t_grid]
    if not grid or any(not t > 0 for t in grid):
        raise ValidationError("t_grid must be nonempty and positive")

    d = system.dimension
    profile_rows = []
    best: Optional[EsseenEstimate] = None
    t_star = grid[0]
    for t, kappa_t in kappa_scaling_profile(system.body, grid, samples, seed, method, **kwargs):
        scaled = system.with_vectors(system.vectors * t / system.R)
        integral = esseen_integral(scaled, model, samples, seed, **kwargs)
        factor = kappa_t**d
        estimate = EsseenEstimate(
            kind="esseen_k_bound",
            value=factor * integral.value,
            std_error=factor * integral.std_error,
            samples=integral.samples,
            seed=seed,
            details={"t": t, "kappa": kappa_t, "I": integral.value, "R": system.R},
        )
        profile_rows.append({"t": t, "kappa": kappa_t, "I": integral.value, "bound": estimate.value})
        if best is None or estimate.value < best.value:
            best, t_star = estimate, t
    logger.debug(f"scaled bound minimized at t={t_star} over {len(grid)} grid points")
    return ScaledBound(t_star=t_star, best=best, profile=profile_rows)
