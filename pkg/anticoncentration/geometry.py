"""Star-shaped bodies, quasi-norms and body constants."""

import logging
import math
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from .config import DEFAULT_SAMPLES, MIN_SAMPLES
from .exceptions import DimensionMismatchError, InvalidBodyError, ValidationError
from .models import BodyConstants, EmbeddingConstants
from .utils.pointsets import as_points
from .utils.sampling import binomial_std_error, block_map

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class BodyKind(str, Enum):
    """Supported body families."""
    LP = "lp"
    BOX = "box"
    RADIAL = "radial"


def _validate_exponent(p: float, name: str = "p") -> float:
    p = float(p)
    if not (p > 0):
        raise ValidationError(f"{name} must lie in (0, inf], got {p}")
    return p


def _inverse(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    """|x|_p along the last axis, for any p in (0, inf]."""
    a = np.abs(np.asarray(x, dtype=float))
    if math.isinf(p):
        return np.max(a, axis=-1)
    if p == 1.0:
        return np.sum(a, axis=-1)
    if p == 2.0:
        return np.sqrt(np.sum(a * a, axis=-1))
    return np.sum(a**p, axis=-1) ** (1.0 / p)


class StarBody:
    """
    A star-shaped body K in R^d given through its Minkowski functional.

    Three families are supported: unit lp balls (0 < p <= inf), axis-aligned
    boxes with given half widths, and radial bodies described by a function
    mapping a unit direction to the boundary radius in that direction. Every
    body carries a dilation factor ``scale`` so that tK is represented without
    touching the underlying description.
    """

    def __init__(
        self,
        dimension: int,
        kind: BodyKind,
        p: Optional[float] = None,
        half_widths: Optional[Sequence[float]] = None,
        radius_fn: Optional[Callable[[np.ndarray], float]] = None,
        quasi_constant: Optional[float] = None,
        max_radius: Optional[float] = None,
        scale: float = 1.0,
        name: Optional[str] = None,
    ):
        if int(dimension) < 1:
            raise InvalidBodyError(f"dimension must be a positive integer, got {dimension}")
        if not (scale > 0 and math.isfinite(scale)):
            raise InvalidBodyError(f"scale must be positive and finite, got {scale}")
        self.dimension = int(dimension)
        self.kind = BodyKind(kind)
        self.scale = float(scale)
        self.name = name
        self.p: Optional[float] = None
        self.half_widths: Optional[np.ndarray] = None
        self.radius_fn = radius_fn
        self.max_radius = max_radius

        if self.kind == BodyKind.LP:
            self.p = _validate_exponent(p)
            self.quasi_constant = 2.0 ** (1.0 / self.p - 1.0) if self.p < 1 else 1.0
        elif self.kind == BodyKind.BOX:
            h = np.asarray(half_widths, dtype=float).reshape(-1)
            if h.shape[0] != self.dimension:
                raise DimensionMismatchError(self.dimension, h.shape[0], "half_widths")
            if not np.all(np.isfinite(h)) or np.any(h <= 0):
                raise InvalidBodyError("box half widths must be positive and finite")
            self.half_widths = h
            self.quasi_constant = 1.0
        else:
            if radius_fn is None:
                raise InvalidBodyError("radial bodies need a boundary-radius function")
            if quasi_constant is None or quasi_constant < 1:
                raise InvalidBodyError("radial bodies need a user-supplied quasi_constant >= 1")
            self.quasi_constant = float(quasi_constant)

    # -- constructors -----------------------------------------------------

    @classmethod
    def lp_ball(cls, p: float, d: int) -> "StarBody":
        return cls(d, BodyKind.LP, p=p)

    @classmethod
    def box(cls, half_widths: Sequence[float]) -> "StarBody":
        h = list(np.atleast_1d(np.asarray(half_widths, dtype=float)))
        return cls(len(h), BodyKind.BOX, half_widths=h)

    @classmethod
    def radial(
        cls,
        d: int,
        radius_fn: Callable[[np.ndarray], float],
        quasi_constant: float,
        max_radius: Optional[float] = None,
        name: Optional[str] = None,
    ) -> "StarBody":
        return cls(
            d, BodyKind.RADIAL, radius_fn=radius_fn,
            quasi_constant=quasi_constant, max_radius=max_radius, name=name,
        )

    @classmethod
    def from_spec(cls, spec: Dict[str, Any]) -> "StarBody":
        """
        Build a body from a structured description.

        Accepted forms: {"kind": "lp", "p": 0.5, "d": 3} and
        {"kind": "box", "half_widths": [...]}, each with an optional "scale".
        """
        kind = str(spec.get("kind", "")).lower()
        scale = float(spec.get("scale", 1.0))
        if kind == BodyKind.LP.value:
            if "p" not in spec or "d" not in spec:
                raise InvalidBodyError("lp body needs 'p' and 'd'")
            body = cls.lp_ball(float(spec["p"]), int(spec["d"]))
        elif kind == BodyKind.BOX.value:
            if "half_widths" not in spec:
                raise InvalidBodyError("box body needs 'half_widths'")
            body = cls.box(spec["half_widths"])
        elif kind == BodyKind.RADIAL.value:
            raise InvalidBodyError("radial bodies cannot be described as text; build them in code")
        else:
            raise InvalidBodyError(f"unknown body kind: {spec.get('kind')!r}")
        return body.scaled(scale) if scale != 1.0 else body

    def scaled(self, t: float) -> "StarBody":
        """The dilate tK (||x||_{tK} = ||x||_K / t)."""
        if not (t > 0 and math.isfinite(t)):
            raise ValidationError(f"scale factor must be positive, got {t}")
        return StarBody(
            self.dimension,
            self.kind,
            p=self.p,
            half_widths=self.half_widths,
            radius_fn=self.radius_fn,
            quasi_constant=self.quasi_constant,
            max_radius=self.max_radius,
            scale=self.scale * t,
            name=self.name,
        )

    # -- evaluation -------------------------------------------------------

    def norms(self, points) -> np.ndarray:
        """Quasi-norms of the rows of an (m, d) array."""
        x = as_points(points, self.dimension)
        if x.shape[1] != self.dimension:
            raise DimensionMismatchError(self.dimension, x.shape[1])
        if self.kind == BodyKind.LP:
            values = lp_norm(x, self.p)
        elif self.kind == BodyKind.BOX:
            values = np.max(np.abs(x) / self.half_widths, axis=1)
        else:
            values = self._radial_norms(x)
        return values / self.scale

    def norm(self, x) -> float:
        """||x||_K = inf{t > 0 : x in tK}."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dimension:
            raise DimensionMismatchError(self.dimension, x.shape[0])
        return float(self.norms(x.reshape(1, -1))[0])

    def _radial_norms(self, x: np.ndarray) -> np.ndarray:
        lengths = np.sqrt(np.sum(x * x, axis=1))
        out = np.zeros(x.shape[0])
        for i in np.flatnonzero(lengths > 0):
            direction = x[i] / lengths[i]
            radius = float(self.radius_fn(direction))
            if not (math.isfinite(radius) and radius > 0):
                raise InvalidBodyError(
                    f"boundary radius must be finite and positive, got {radius} at {direction}"
                )
            out[i] = lengths[i] / radius
        return out

    def contains(self, points, R: float = 1.0, tol: float = 0.0) -> np.ndarray:
        """Closed membership in RK."""
        return self.norms(points) <= R * (1.0 + tol) + tol

    # -- geometry helpers -------------------------------------------------

    def interval(self) -> Tuple[float, float]:
        """For d = 1, the endpoints (a, b) with K = [-a, b]."""
        if self.dimension != 1:
            raise InvalidBodyError("interval() is defined for one-dimensional bodies only")
        return 1.0 / self.norm([-1.0]), 1.0 / self.norm([1.0])

    def extent(self) -> Optional[float]:
        """Half side of an axis box [-e, e]^d containing K, if known."""
        if self.kind == BodyKind.LP:
            return self.scale
        if self.kind == BodyKind.BOX:
            return float(np.max(self.half_widths)) * self.scale
        if self.max_radius is None:
            return None
        return float(self.max_radius) * self.scale

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind.value, "d": self.dimension}
        if self.kind == BodyKind.LP:
            out["p"] = self.p if math.isfinite(self.p) else "inf"
        elif self.kind == BodyKind.BOX:
            out["half_widths"] = self.half_widths.tolist()
        else:
            out["name"] = self.name
            out["quasi_constant"] = self.quasi_constant
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out

    def __repr__(self) -> str:
        return f"StarBody({self.describe()})"


def norm(body: StarBody, x) -> float:
    return body.norm(x)


def dist_to_set(body: StarBody, v, points) -> float:
    """
    dist_K(v, S) = min over s in S of ||v - s||_K.

    The argument order is v - s; bodies need not be symmetric.
    """
    pts = as_points(points, body.dimension)
    if pts.shape[0] == 0:
        raise ValidationError("dist_to_set needs a nonempty point set")
    v = np.asarray(v, dtype=float).reshape(1, -1)
    if v.shape[1] != body.dimension:
        raise DimensionMismatchError(body.dimension, v.shape[1])
    return float(np.min(body.norms(v - pts)))


def lp_embedding_constants(p: float, q: float, d: int) -> Tuple[float, float]:
    """
    omega_p(B_q^d) and W_p(B_q^d).

    Args:
        p: Exponent of the reference ball B_p
        q: Exponent of the body B_q
        d: Dimension

    Returns:
        (omega, W) with (1/W)|x|_p <= ||x||_{B_q} <= omega |x|_p
    """
    p = _validate_exponent(p, "p")
    q = _validate_exponent(q, "q")
    if int(d) < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    omega = max(1.0, float(d) ** (_inverse(q) - _inverse(p)))
    W = max(1.0, float(d) ** (_inverse(p) - _inverse(q)))
    return omega, W


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def kappa_from(mu: float, gamma: float, dimension: int, quasi_constant: float) -> float:
    """kappa(K) = C_K sqrt(2/pi) (mu/gamma)^(1/d)."""
    return quasi_constant * SQRT_2_OVER_PI * (mu / gamma) ** (1.0 / dimension)


def _closed_form_volume(body: StarBody) -> Optional[float]:
    d, t = body.dimension, body.scale
    if body.kind == BodyKind.LP:
        if math.isinf(body.p):
            return (2.0 * t) ** d
        log_mu = d * (math.log(2.0) + special.gammaln(1.0 / body.p + 1.0)) - special.gammaln(d / body.p + 1.0)
        return float(t**d * math.exp(log_mu))
    if body.kind == BodyKind.BOX:
        return float(np.prod(2.0 * body.half_widths * t))
    if d == 1:
        a, b = body.interval()
        return a + b
    return None


def _closed_form_gaussian(body: StarBody) -> Optional[float]:
    d, t = body.dimension, body.scale
    if d == 1:
        a, b = body.interval()
        return float(stats.norm.cdf(b) - stats.norm.cdf(-a))
    if body.kind == BodyKind.BOX:
        return float(np.prod(special.erf(body.half_widths * t / math.sqrt(2.0))))
    if body.kind == BodyKind.LP and math.isinf(body.p):
        return float(special.erf(t / math.sqrt(2.0)) ** d)
    if body.kind == BodyKind.LP and body.p == 2.0:
        return float(stats.chi2.cdf(t * t, d))
    return None


def _sampled_volume(body: StarBody, samples: int, seed: int, **kwargs) -> Tuple[float, float]:
    e = body.extent()
    if e is None:
        raise InvalidBodyError("radial body has no finite bounding box; pass max_radius")
    d = body.dimension
    box_volume = (2.0 * e) ** d

    def hits(rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.uniform(-e, e, size=(size, d))
        return body.contains(x).astype(float)

    values = np.concatenate(block_map(hits, samples, seed, **kwargs))
    rate = float(np.mean(values))
    return box_volume * rate, box_volume * binomial_std_error(rate, samples)


def _sampled_gaussian(body: StarBody, samples: int, seed: int, **kwargs) -> Tuple[float, float]:
    d = body.dimension

    def hits(rng: np.random.Generator, size: int) -> np.ndarray:
        return body.contains(rng.standard_normal((size, d))).astype(float)

    values = np.concatenate(block_map(hits, samples, seed, **kwargs))
    rate = float(np.mean(values))
    return rate, binomial_std_error(rate, samples)


def gaussian_measure(
    body: StarBody,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "auto",
    **kwargs,
) -> Tuple[float, float, str]:
    """gamma_d(K) with its standard error and the method used."""
    if method != "monte_carlo":
        exact = _closed_form_gaussian(body)
        if exact is not None:
            return exact, 0.0, "closed_form"
    value, se = _sampled_gaussian(body, samples, seed, **kwargs)
    return value, se, "monte_carlo"


def lebesgue_measure(
    body: StarBody,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "auto",
    **kwargs,
) -> Tuple[float, float, str]:
    """mu_d(K) with its standard error and the method used."""
    if method != "monte_carlo":
        exact = _closed_form_volume(body)
        if exact is not None:
            return exact, 0.0, "closed_form"
    value, se = _sampled_volume(body, samples, seed, **kwargs)
    return value, se, "monte_carlo"


def estimate_constants(
    body: StarBody,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "auto",
    **kwargs,
) -> BodyConstants:
    """
    Measure mu_d(K), gamma_d(K) and assemble kappa(K).

    Closed forms are used where they exist (lp balls and boxes for mu; boxes,
    B_2 dilates and every interval for gamma). ``method="monte_carlo"`` forces
    hit-or-miss sampling for both measures. The Lebesgue estimate samples the
    bounding box [-e, e]^d, the Gaussian one counts standard normal draws
    falling in K.

    Args:
        body: Body to measure
        samples: Monte Carlo sample count (>= MIN_SAMPLES)
        seed: Root seed; the Gaussian stream uses ``seed``, the volume stream ``seed + 1``
        method: "auto" or "monte_carlo"

    Raises:
        ValidationError: If samples is below MIN_SAMPLES
        InvalidBodyError: If a radial body has no bounding box and needs sampling
    """
    if samples < MIN_SAMPLES:
        raise ValidationError(f"samples must be >= {MIN_SAMPLES}, got {samples}")
    if method not in ("auto", "monte_carlo"):
        raise ValidationError(f"unknown method: {method}")

    mu, se_mu, mu_method = lebesgue_measure(body, samples, seed + 1, method, **kwargs)
    gamma, se_gamma, gamma_method = gaussian_measure(body, samples, seed, method, **kwargs)
    if mu <= 0 or gamma <= 0:
        raise InvalidBodyError(
            f"measured mu={mu}, gamma={gamma}; increase samples or check the body"
        )
    kappa = kappa_from(mu, gamma, body.dimension, body.quasi_constant)
    logger.debug(
        f"constants for {body!r}: mu={mu:.6g} ({mu_method}), gamma={gamma:.6g} ({gamma_method}), kappa={kappa:.6g}"
    )
    return BodyConstants(
        mu=mu,
        gamma=gamma,
        kappa=kappa,
        se_mu=se_mu,
        se_gamma=se_gamma,
        samples=samples,
        seed=seed,
        quasi_constant=body.quasi_constant,
        dimension=body.dimension,
        mu_method=mu_method,
        gamma_method=gamma_method,
    )


def quasi_triangle_check(body: StarBody, trials: int = 1000, seed: int = 0) -> float:
    """
    Largest observed ||x+y|| / (||x|| + ||y||).

    Probes the pairs (e_i, e_j), including x = y, before ``trials`` random
    Gaussian pairs.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    d = body.dimension
    eye = np.eye(d)
    ii, jj = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    xs = [eye[ii.ravel()], eye[ii.ravel()]]
    ys = [eye[jj.ravel()], -eye[jj.ravel()]]
    rng = np.random.default_rng(seed)
    xs.append(rng.standard_normal((trials, d)))
    ys.append(rng.standard_normal((trials, d)))
    x = np.vstack(xs)
    y = np.vstack(ys)

    denom = body.norms(x) + body.norms(y)
    keep = denom > 0
    ratios = body.norms(x[keep] + y[keep]) / denom[keep]
    worst = float(np.max(ratios))
    if worst > body.quasi_constant * (1 + 1e-12):
        logger.warning(f"quasi-triangle ratio {worst:.6g} exceeds C_K={body.quasi_constant:.6g}")
    return worst


def kappa_scaling_profile(
    body: StarBody,
    t_grid: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "auto",
    **kwargs,
) -> List[Tuple[float, float]]:
    """
    kappa(tK) on a grid of dilation factors.

    mu_d(tK) = t^d mu_d(K) exactly; gamma_d(tK) is measured per t with the same
    random stream, so t = 1 reproduces ``estimate_constants`` exactly.
    """
    grid = [float(t) for t in t_grid]
    if not grid:
        raise ValidationError("t_grid must be nonempty")
    if any(not (t > 0) for t in grid):
        raise ValidationError("t_grid values must be positive")

    base = estimate_constants(body, samples, seed, method, **kwargs)
    d = body.dimension
    profile = []
    for t in grid:
        if t == 1.0:
            profile.append((t, base.kappa))
            continue
        gamma, _, _ = gaussian_measure(body.scaled(t), samples, seed, method, **kwargs)
        if gamma <= 0:
            raise InvalidBodyError(f"gamma(tK) measured as 0 at t={t}; increase samples")
        profile.append((t, kappa_from(t**d * base.mu, gamma, d, body.quasi_constant)))
    return profile


# ---------------------------------------------------------------------------
# embedding constants
# ---------------------------------------------------------------------------

def estimate_embedding_constants(
    body: StarBody,
    p: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> EmbeddingConstants:
    """
    omega_p(K) = sup ||x||_K / |x|_p and W_p(K) = sup |x|_p / ||x||_K.

    Exact for lp balls and boxes; for radial bodies the suprema are taken over
    the coordinate directions and ``samples`` random directions, which gives
    lower bounds.
    """
    p = _validate_exponent(p)
    d, t = body.dimension, body.scale
    if body.kind == BodyKind.LP:
        omega, W = lp_embedding_constants(p, body.p, d)
        return EmbeddingConstants(p=p, omega=omega / t, W=W * t)
    if body.kind == BodyKind.BOX:
        h = body.half_widths * t
        return EmbeddingConstants(p=p, omega=1.0 / float(np.min(h)), W=float(lp_norm(h, p)))

    rng = np.random.default_rng(seed)
    directions = np.vstack([np.eye(d), -np.eye(d), rng.standard_normal((samples, d))])
    ratio = body.norms(directions) / lp_norm(directions, p)
    return EmbeddingConstants(
        p=p, omega=float(np.max(ratio)), W=float(np.max(1.0 / ratio)), method="sampled"
    )


def euclidean_transfer_comparison(
    body: StarBody,
    R: float,
    k: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> Dict[str, float]:
    """
    Direct K-distance bounds versus bounds obtained through B_2^d.

    Returns the hyperplane bounds omega_2 R (direct) and omega_2 W_2 R
    (through the Euclidean ball), and the GAP approximation bounds
    omega_inf R / (d k) and omega_2 W_2 R / (sqrt(d) k).
    """
    if R <= 0 or k < 1:
        raise ValidationError("R must be positive and k >= 1")
    d = body.dimension
    e2 = estimate_embedding_constants(body, 2.0, samples, seed)
    einf = estimate_embedding_constants(body, math.inf, samples, seed)
    return {
        "omega_2": e2.omega,
        "W_2": e2.W,
        "omega_inf": einf.omega,
        "hyperplane_direct": e2.omega * R,
        "hyperplane_via_euclidean": e2.omega * e2.W * R,
        "gap_direct": einf.omega * R / (d * k),
        "gap_via_euclidean": e2.omega * e2.W * R / (math.sqrt(d) * k),
    }
