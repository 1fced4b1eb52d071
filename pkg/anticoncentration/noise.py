"""Coefficient laws, the torus norm and the eta-norm."""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import BERNOULLI_ALPHA, BERNOULLI_C_ETA, BERNOULLI_CAP_C_ETA, MERGE_TOLERANCE
from .exceptions import InvalidNoiseModelError, ValidationError
from .models import AnticoncentrationAudit, GrowthCheck, LowerExpectationCheck
from .utils.pointsets import merge_points

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

PROBABILITY_TOLERANCE = 1e-12


@dataclass
class NoiseModel:
    """
    A finite-support law for the i.i.d. coefficients eta_j.

    ``c_eta`` is the growth constant in |E exp(i eta a)| <= exp(-c ||a||_T^2),
    ``C_eta`` the anti-concentration constant in P(1 <= |eta1 - eta2| <= C) >= 1/2
    and ``alpha`` the scale in E||(eta1 - eta2) a||_T^2 >= 1/2 ||alpha a||_T^2.
    """
    values: np.ndarray
    probabilities: np.ndarray
    c_eta: Optional[float] = None
    C_eta: Optional[float] = None
    alpha: Optional[float] = None
    name: str = "finite"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        self.probabilities = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if self.values.shape != self.probabilities.shape or self.values.size == 0:
            raise InvalidNoiseModelError("support needs one probability per value")
        if not np.all(np.isfinite(self.values)):
            raise InvalidNoiseModelError("support values must be finite")
        if np.any(self.probabilities < 0):
            raise InvalidNoiseModelError("probabilities must be nonnegative")
        total = float(np.sum(self.probabilities))
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidNoiseModelError(f"probabilities sum to {total!r}, not 1")
        if self.c_eta is not None and not self.c_eta > 0:
            raise InvalidNoiseModelError("c_eta must be positive")
        if self.C_eta is not None and not self.C_eta >= 1:
            raise InvalidNoiseModelError("C_eta must be >= 1")
        if self.alpha is not None:
            upper = self.C_eta if self.C_eta is not None else math.inf
            if not 1 <= self.alpha <= upper:
                raise InvalidNoiseModelError(f"alpha must lie in [1, C_eta], got {self.alpha}")

    @classmethod
    def bernoulli(cls) -> "NoiseModel":
        """Symmetric Bernoulli (Rademacher) coefficients."""
        return cls(
            values=np.array([-1.0, 1.0]),
            probabilities=np.array([0.5, 0.5]),
            c_eta=BERNOULLI_C_ETA,
            C_eta=BERNOULLI_CAP_C_ETA,
            alpha=BERNOULLI_ALPHA,
            name="bernoulli",
        )

    @classmethod
    def finite(cls, atoms: Sequence[Sequence[float]], **constants) -> "NoiseModel":
        """Build a law from [(value, probability), ...]."""
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim != 2 or atoms.shape[1] != 2:
            raise InvalidNoiseModelError("atoms must be a list of [value, probability] pairs")
        return cls(values=atoms[:, 0], probabilities=atoms[:, 1], **constants)

    @classmethod
    def point_mass(cls, value: float = 0.0) -> "NoiseModel":
        return cls(values=np.array([value]), probabilities=np.array([1.0]), name="point_mass")

    @classmethod
    def from_spec(cls, spec: Dict[str, Any]) -> "NoiseModel":
        """Parse {"kind": "bernoulli"} or {"kind": "finite", "atoms": [[v, p], ...]}."""
        kind = str(spec.get("kind", "")).lower()
        if kind in ("bernoulli", "bernoulli_symmetric"):
            return cls.bernoulli()
        if kind == "finite":
            if "atoms" not in spec:
                raise InvalidNoiseModelError("finite noise needs 'atoms'")
            constants = {k: spec[k] for k in ("c_eta", "C_eta", "alpha") if spec.get(k) is not None}
            return cls.finite(spec["atoms"], **constants)
        raise InvalidNoiseModelError(f"unknown noise kind: {spec.get('kind')!r}")

    @property
    def support_size(self) -> int:
        return self.values.shape[0]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. coefficients of the given shape."""
        return rng.choice(self.values, size=size, p=self.probabilities)

    def difference_law(self) -> Tuple[np.ndarray, np.ndarray]:
        """Exact law of eta1 - eta2: (values, probabilities)."""
        deltas = (self.values[:, None] - self.values[None, :]).reshape(-1, 1)
        weights = (self.probabilities[:, None] * self.probabilities[None, :]).reshape(-1)
        points, merged = merge_points(deltas, weights, MERGE_TOLERANCE)
        keep = merged > 0
        return points[keep, 0], merged[keep]

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "atoms": [[float(v), float(p)] for v, p in zip(self.values, self.probabilities)],
            "c_eta": self.c_eta,
            "C_eta": self.C_eta,
            "alpha": self.alpha,
        }


def _scalar_or_array(values: np.ndarray, original) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(original) == 0 else values


def t_norm(a: ArrayLike) -> Union[float, np.ndarray]:
    """||a||_T = distance from a to the lattice pi Z, in [0, pi/2]."""
    arr = np.asarray(a, dtype=float)
    r = np.mod(arr, math.pi)
    return _scalar_or_array(np.minimum(r, math.pi - r), a)


def char_abs(model: NoiseModel, a: ArrayLike) -> Union[float, np.ndarray]:
    """|E exp(i eta a)|, exact from the support."""
    arr = np.asarray(a, dtype=float)
    phases = arr[..., None] * model.values
    re = np.sum(model.probabilities * np.cos(phases), axis=-1)
    im = np.sum(model.probabilities * np.sin(phases), axis=-1)
    values = np.clip(np.hypot(re, im), 0.0, 1.0)
    values = np.where(arr == 0.0, 1.0, values)
    return _scalar_or_array(values, a)


def difference_char(model: NoiseModel, a: ArrayLike) -> Union[float, np.ndarray]:
    """E cos(a (eta1 - eta2)), which equals |E exp(i eta a)|^2."""
    deltas, weights = model.difference_law()
    arr = np.asarray(a, dtype=float)
    values = np.sum(weights * np.cos(arr[..., None] * deltas), axis=-1)
    return _scalar_or_array(values, a)


def eta_norm_squared(model: NoiseModel, a: ArrayLike, deltas=None, weights=None) -> Union[float, np.ndarray]:
    """||a||_eta^2, vectorized over ``a``; pass a precomputed difference law in hot loops."""
    if deltas is None:
        deltas, weights = model.difference_law()
    arr = np.asarray(a, dtype=float)
    t = t_norm(arr[..., None] * deltas)
    values = (4.0 / math.pi**2) * np.sum(weights * t * t, axis=-1)
    return _scalar_or_array(values, a)


def eta_norm(model: NoiseModel, a: ArrayLike) -> Union[float, np.ndarray]:
    """||a||_eta = (2/pi) (E ||a (eta1 - eta2)||_T^2)^(1/2), by full pair enumeration."""
    values = np.sqrt(np.asarray(eta_norm_squared(model, a)))
    return _scalar_or_array(values, a)


def growth_check(model: NoiseModel, c: float, grid: Sequence[float]) -> GrowthCheck:
    """
    Check |E exp(i eta a)| <= exp(-c ||a||_T^2) at every grid point.

    Raises:
        ValidationError: If c <= 0 or the grid is empty
    """
    if not c > 0:
        raise ValidationError(f"c must be positive, got {c}")
    a = np.asarray(grid, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValidationError("growth_check needs a nonempty grid")

    lhs = np.asarray(char_abs(model, a))
    t = np.asarray(t_norm(a))
    rhs = np.exp(-c * t * t)
    ratio = lhs / rhs
    worst = int(np.argmax(ratio))
    max_violation = max(0.0, float(ratio[worst]) - 1.0)
    holds = max_violation <= 1e-12
    if not holds:
        logger.info(f"growth bound with c={c:.6g} fails at a={a[worst]:.6g}: {lhs[worst]:.6g} > {rhs[worst]:.6g}")
    return GrowthCheck(
        holds=holds,
        max_violation=max_violation,
        worst_point=float(a[worst]),
        c=float(c),
        grid_size=int(a.size),
    )


def abs_difference_law(model: NoiseModel) -> List[Tuple[float, float]]:
    """Law of |eta1 - eta2| as sorted (value, probability) pairs."""
    deltas, weights = model.difference_law()
    points, merged = merge_points(np.abs(deltas).reshape(-1, 1), weights, MERGE_TOLERANCE)
    order = np.argsort(points[:, 0])
    return [(float(points[i, 0]), float(merged[i])) for i in order]


def anticoncentration_audit(model: NoiseModel) -> AnticoncentrationAudit:
    """
    Smallest C with P(1 <= |eta1 - eta2| <= C) >= 1/2, and the scale alpha.

    alpha is the support point of |eta1 - eta2| in [1, C] with the largest
    mass (smallest such point on ties). Unsatisfiable laws are reported, not
    raised.
    """
    law = abs_difference_law(model)
    cumulative = 0.0
    C_min = None
    for value, mass in law:
        if value < 1.0 - MERGE_TOLERANCE:
            continue
        cumulative += mass
        if cumulative >= 0.5 - PROBABILITY_TOLERANCE:
            C_min = value
            break

    if C_min is None:
        logger.info(f"anti-concentration condition unsatisfiable for {model.name}")
        return AnticoncentrationAudit(
            satisfied=False, C_eta_min=None, alpha=None, abs_difference_law=law, mass_at_C=cumulative
        )

    window = [(v, m) for v, m in law if 1.0 - MERGE_TOLERANCE <= v <= C_min]
    best_mass = max(m for _, m in window)
    alpha = min(v for v, m in window if m == best_mass)
    return AnticoncentrationAudit(
        satisfied=True,
        C_eta_min=float(C_min),
        alpha=float(max(alpha, 1.0)),
        abs_difference_law=law,
        mass_at_C=cumulative,
    )


def lower_expectation_check(model: NoiseModel, alpha: float, grid: Sequence[float]) -> LowerExpectationCheck:
    """Grid audit of E||(eta1 - eta2) a||_T^2 >= 1/2 ||alpha a||_T^2; violations are reported."""
    a = np.asarray(grid, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValidationError("lower_expectation_check needs a nonempty grid")
    deltas, weights = model.difference_law()
    t = np.asarray(t_norm(a[:, None] * deltas))
    lhs = np.sum(weights * t * t, axis=1)
    ta = np.asarray(t_norm(alpha * a))
    rhs = 0.5 * ta * ta
    gap = rhs - lhs
    bad = gap > 1e-12
    worst = int(np.argmax(gap))
    if np.any(bad):
        logger.warning(
            f"lower expectation bound fails at {int(np.sum(bad))} of {a.size} grid points (alpha={alpha})"
        )
    return LowerExpectationCheck(
        holds=not bool(np.any(bad)),
        violations=int(np.sum(bad)),
        max_violation=max(0.0, float(gap[worst])),
        worst_point=float(a[worst]) if np.any(bad) else None,
        alpha=float(alpha),
    )
