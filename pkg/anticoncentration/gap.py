"""
Generalized arithmetic progressions and the GAP approximation pipeline.

The pipeline follows the structure argument stage by stage: a level set of
the eta-norm statistic on a dual grid, removal of bad vectors, the choice of
k, rounding to a fine lattice, the dual volume bound, a heuristic GAP fit for
the rounded set and verification of the four conclusions. Stages whose
numerical outcome contradicts an existence claim are recorded as findings and
the pipeline carries on.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import (
    DEFAULT_DILATION_BASE,
    DEFAULT_GRID_N,
    DEFAULT_SAMPLES,
    GAP_BEAM_WIDTH,
    GAP_MAX_RANK,
    GAP_POOL_SIZE,
    GAP_SEARCH_BUDGET,
    GAP_SIZE_BUDGET,
    GRID_BUDGET,
    SUMSET_BUDGET,
    ConstantsConfig,
)
from .exceptions import BudgetExceededError, ValidationError
from .geometry import estimate_constants, estimate_embedding_constants
from .models import (
    BadVectorSplit,
    BodyConstants,
    DualVolumeCheck,
    Gap,
    GapFit,
    GapPipelineReport,
    KChoice,
    LatticeRounding,
    LevelSetResult,
    VectorSystem,
    VerificationRecord,
)
from .noise import NoiseModel, anticoncentration_audit, eta_norm_squared, t_norm
from .smallball import small_ball
from .utils.pointsets import as_points, integer_box, sign_vertices, unique_points

logger = logging.getLogger(__name__)

PI2 = math.pi**2
PART_NAMES = (
    "part1_rank",
    "part1_cardinality",
    "part2_approximation",
    "part3_full_dimension",
    "part4_generator_norms",
)


# ---------------------------------------------------------------------------
# GAP calculus
# ---------------------------------------------------------------------------

def enumerate_gap(gap: Gap, budget: int = GAP_SIZE_BUDGET) -> np.ndarray:
    """Distinct elements of the GAP."""
    return gap.enumerate(budget)


def is_proper(gap: Gap, budget: int = GAP_SIZE_BUDGET) -> bool:
    """True iff x -> sum x_j g_j is injective on the coefficient box, i.e. |Q| = prod(2 L_j + 1)."""
    return enumerate_gap(gap, budget).shape[0] == gap.box_size


def kfold_sumset(points, k: int, budget: int = SUMSET_BUDGET) -> np.ndarray:
    """
    kF = {f_1 + ... + f_k : f_j in F}, by k-1 Minkowski additions with deduplication.

    Raises:
        BudgetExceededError: If an intermediate pairwise sum exceeds the budget
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    base = unique_points(as_points(points))
    result = base
    for _ in range(k - 1):
        requested = result.shape[0] * base.shape[0]
        if requested > budget:
            raise BudgetExceededError("sumset", requested, budget)
        sums = (result[:, None, :] + base[None, :, :]).reshape(-1, base.shape[1])
        result = unique_points(sums)
    return result


def dilate(points, alpha: float) -> np.ndarray:
    """alpha F = {alpha f : f in F}."""
    return as_points(points) * float(alpha)


def doubling_ratio(points, k: int, budget: int = SUMSET_BUDGET) -> float:
    """|kX| / |X|."""
    base = unique_points(as_points(points))
    return kfold_sumset(base, k, budget).shape[0] / base.shape[0]


# ---------------------------------------------------------------------------
# level set and bad vectors
# ---------------------------------------------------------------------------

def _alpha_for(model: NoiseModel) -> float:
    if model.alpha is not None:
        return model.alpha
    audit = anticoncentration_audit(model)
    if not audit.satisfied:
        raise ValidationError(f"noise model {model.name!r} fails the anti-concentration condition")
    return audit.alpha


def level_set_radius(n: int, A: float, d: int, kappa: float) -> float:
    """
    M = sqrt(-4 log(n^-A (2 pi)^(d/2) / (2 kappa^d))), capped by 10 sqrt(d log(kappa n^A)).
    """
    log_cap_arg = math.log(kappa) + A * math.log(n)
    cap = 10.0 * math.sqrt(d * log_cap_arg) if log_cap_arg > 0 else 0.0
    log_arg = -A * math.log(n) + (d / 2.0) * math.log(2.0 * math.pi) - math.log(2.0) - d * math.log(kappa)
    if log_arg < 0:
        M = math.sqrt(-4.0 * log_arg)
        return min(M, cap) if cap > 0 else M
    return cap


def _dual_grid(N: int, d: int) -> np.ndarray:
    """The points k/N with k in [-2N, 2N]^d."""
    return integer_box([2 * N] * d).astype(float) / N


def level_set_search(
    system: VectorSystem,
    model: NoiseModel,
    A: float,
    N: int = DEFAULT_GRID_N,
    grid_budget: int = GRID_BUDGET,
    rho: Optional[float] = None,
    body_constants: Optional[BodyConstants] = None,
    alpha: Optional[float] = None,
) -> LevelSetResult:
    """
    Scan the dual grid for a set S where sum_v ||alpha <v, s>||_T^2 <= 16 m.

    m runs over 0..max(1, floor(M)); the first m whose S reaches the size
    (N / (2 sqrt(d) kappa))^d rho (or is nonempty, when rho is not given) is
    returned. G(s) = sum_v ||<v, s>||_eta^2 is evaluated exactly on S and its
    average reported next to the torus statistic.

    Raises:
        ValidationError: If d > 2
        BudgetExceededError: If (4N+1)^d exceeds the grid budget
    """
    d, n = system.dimension, system.n
    if d > 2:
        raise ValidationError("grid stages support d <= 2")
    size = (4 * N + 1) ** d
    if size > grid_budget:
        raise BudgetExceededError("level-set grid", size, grid_budget)
    if body_constants is None:
        if system.body is None:
            raise ValidationError("level_set_search needs body constants or a system body")
        body_constants = estimate_constants(system.body)
    kappa = body_constants.kappa
    alpha = alpha if alpha is not None else _alpha_for(model)
    M = level_set_radius(max(n, 2), A, d, kappa)

    grid = _dual_grid(N, d)
    V = system.rescaled().vectors
    proj = grid @ V.T
    torus = np.sum(np.asarray(t_norm(alpha * proj)) ** 2, axis=1) if n else np.zeros(size)
    deltas, weights = model.difference_law()
    G = np.sum(eta_norm_squared(model, proj, deltas, weights), axis=1) if n else np.zeros(size)

    required = (N / (2.0 * math.sqrt(d) * kappa)) ** d * rho if rho is not None else 0.0
    m_max = max(1, int(math.floor(M)))
    found = False
    for m in range(0, m_max + 1):
        mask = torus <= 16.0 * m + 1e-12
        if np.count_nonzero(mask) >= max(1.0, required):
            found = True
            break
    if not found:
        logger.warning(f"no m <= {m_max} gives a level set of size {required:.4g}")
    S = grid[mask]
    average = float(np.mean(torus[mask])) if S.shape[0] else math.inf
    eta_average = float(np.mean(G[mask])) if S.shape[0] else math.inf
    logger.debug(f"level set: m={m}, |S|={S.shape[0]} of {size}, M={M:.4g}")
    return LevelSetResult(
        m=m,
        M=M,
        N=N,
        S=S,
        alpha=float(alpha),
        average_statistic=average,
        eta_average=eta_average,
        grid_size=size,
        required_size=required,
        found=found,
    )


def bad_vector_split(
    system: VectorSystem,
    model: NoiseModel,
    S: np.ndarray,
    m: int,
    n_prime: int,
    alpha: Optional[float] = None,
) -> BadVectorSplit:
    """
    Split V_R into good and bad vectors.

    v is bad iff (1/|S|) sum_s ||alpha <v, s>||_T^2 >= 8 pi^2 m / n'. When the
    total over all v is at most 8 pi^2 m, Markov's inequality gives
    |bad| <= n'; the check is recorded with a counterexample dump if it fails.
    m = 0 is treated as m = 1.
    """
    S = np.asarray(S, dtype=float)
    if S.size == 0:
        raise ValidationError("bad_vector_split needs a nonempty S")
    if n_prime < 1:
        raise ValidationError(f"n' must be >= 1, got {n_prime}")
    alpha = alpha if alpha is not None else _alpha_for(model)
    m_eff = max(int(m), 1)
    V = system.rescaled().vectors
    S = S.reshape(-1, system.dimension)

    per_vector = np.mean(np.asarray(t_norm(alpha * (S @ V.T))) ** 2, axis=0) if system.n else np.zeros(0)
    threshold = 8.0 * PI2 * m_eff / n_prime
    bad_mask = per_vector >= threshold
    bad = [int(i) for i in np.flatnonzero(bad_mask)]
    good = [int(i) for i in np.flatnonzero(~bad_mask)]

    total = float(np.sum(per_vector))
    applicable = total <= 8.0 * PI2 * m_eff
    markov_holds = len(bad) <= n_prime
    counterexample = None
    if applicable and not markov_holds:
        counterexample = {"bad": bad, "per_vector_average": per_vector.tolist(), "threshold": threshold}
        logger.warning(f"Markov bound violated: {len(bad)} bad vectors with n'={n_prime}")
    return BadVectorSplit(
        good=good,
        bad=bad,
        per_vector_average=per_vector,
        threshold=threshold,
        markov_applicable=applicable,
        markov_holds=markov_holds,
        counterexample=counterexample,
    )


def choose_k(
    n_prime: float,
    m: int,
    d: Optional[int] = None,
    A: Optional[float] = None,
    kappa: Optional[float] = None,
    n: Optional[int] = None,
) -> KChoice:
    """
    k = floor(sqrt(n' / (64 pi^2 m))), at least 1.

    With (d, A, kappa, n) given the range sqrt(n' / (640 pi^2 sqrt(d log(n^A kappa)))) <= k <= sqrt(n')
    is reported as well.
    """
    if n_prime < 1 or m < 1:
        raise ValidationError(f"need n' >= 1 and m >= 1, got n'={n_prime}, m={m}")
    raw = math.sqrt(n_prime / (64.0 * PI2 * m))
    k = max(1, int(math.floor(raw)))
    upper = math.sqrt(n_prime)
    lower = None
    if None not in (d, A, kappa, n):
        log_arg = A * math.log(n) + math.log(kappa)
        if log_arg > 0:
            lower = math.sqrt(n_prime / (640.0 * PI2 * math.sqrt(d * log_arg)))
    in_range = (lower <= k <= upper) if lower is not None else None
    return KChoice(k=k, raw=raw, range_lower=lower, range_upper=upper, in_range=in_range)


# ---------------------------------------------------------------------------
# dual volume and rounding
# ---------------------------------------------------------------------------

def _outer_cell_count(points: np.ndarray, r: float, resolution: int, budget: int) -> int:
    """Number of grid cells of side 1/resolution meeting the union of l_inf balls of radius r."""
    h = 1.0 / resolution
    lo = np.floor((points - r) / h + 1e-9).astype(np.int64)
    hi = np.ceil((points + r) / h - 1e-9).astype(np.int64) - 1
    widths = hi - lo + 1
    per_point = int(np.prod(np.max(widths, axis=0)))
    requested = per_point * points.shape[0]
    if requested > budget:
        raise BudgetExceededError("dual volume cells", requested, budget)
    cells = []
    for a, b in zip(lo, hi):
        axes = [np.arange(a[j], b[j] + 1) for j in range(points.shape[1])]
        cells.append(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, points.shape[1]))
    return int(np.unique(np.vstack(cells), axis=0).shape[0])


def dual_volume_check(
    V_prime,
    k: int,
    alpha: float,
    body_constants: BodyConstants,
    rho: float,
    grid_resolution: Optional[int] = None,
    budget: int = SUMSET_BUDGET,
) -> DualVolumeCheck:
    """
    mu(k(V' u {0}) + B_inf(0, 1/(256 d alpha))) against 36 pi^2 (2 sqrt(d) kappa / alpha)^d / rho.

    The volume is an outer measure: grid cells of side 1/grid_resolution that
    meet the union of boxes are counted. The default resolution puts four
    cells across each box radius.
    """
    if not rho > 0:
        raise ValidationError(f"rho must be positive, got {rho}")
    d = body_constants.dimension
    V_prime = as_points(V_prime, d).reshape(-1, d)
    base = np.vstack([np.zeros((1, d)), V_prime])
    sumset = kfold_sumset(base, k, budget)
    r = 1.0 / (256.0 * d * alpha)
    resolution = grid_resolution or int(math.ceil(4.0 * 256.0 * d * alpha))
    cells = _outer_cell_count(sumset, r, resolution, budget)
    volume = cells * (1.0 / resolution) ** d
    rhs = 36.0 * PI2 * (2.0 * math.sqrt(d) * body_constants.kappa / alpha) ** d / rho
    if volume > rhs:
        logger.warning(f"dual volume {volume:.6g} exceeds {rhs:.6g}")
    return DualVolumeCheck(
        lhs_volume=volume,
        rhs=rhs,
        holds=volume <= rhs,
        sumset_size=int(sumset.shape[0]),
        resolution=resolution,
        cell_count=cells,
    )


def round_to_lattice(V_prime, D: float, k: int, zero_shortcut: bool = False) -> LatticeRounding:
    """
    z = round(D k v') componentwise (ties to even), so ||v' - z/(Dk)||_inf <= 1/(2Dk).

    With ``zero_shortcut`` vectors with ||v'||_inf <= 1/(Dk) map to z = 0. The
    rounding set F always contains 0.
    """
    scale = float(D) * k
    if not scale > 0:
        raise ValidationError("D k must be positive")
    V_prime = np.asarray(V_prime, dtype=float)
    if V_prime.ndim == 1:
        V_prime = V_prime.reshape(-1, 1)
    Z = np.rint(scale * V_prime).astype(np.int64)
    if zero_shortcut and Z.shape[0]:
        small = np.max(np.abs(V_prime), axis=1) <= 1.0 / scale
        Z[small] = 0
    d = V_prime.shape[1]
    F = np.unique(np.vstack([np.zeros((1, d), dtype=np.int64), Z]), axis=0)
    max_error = float(np.max(np.abs(V_prime - Z / scale))) if Z.shape[0] else 0.0
    return LatticeRounding(F=F, assignment=Z, max_error=max_error, scale=scale)


# ---------------------------------------------------------------------------
# GAP fitting
# ---------------------------------------------------------------------------

def _generator_pool(F: np.ndarray, pool_size: int) -> np.ndarray:
    """Unit vectors plus sign-normalized differences of F u {0}, shortest first."""
    d = F.shape[1]
    points = np.unique(np.vstack([np.zeros((1, d), dtype=np.int64), F]), axis=0)
    diffs = (points[:, None, :] - points[None, :, :]).reshape(-1, d)
    diffs = diffs[np.any(diffs != 0, axis=1)]
    if diffs.size:
        first = np.argmax(diffs != 0, axis=1)
        signs = np.sign(diffs[np.arange(diffs.shape[0]), first])
        diffs = diffs * signs[:, None]
    units = np.eye(d, dtype=np.int64)
    candidates = np.unique(np.vstack([units, diffs]), axis=0)
    norms = np.max(np.abs(candidates), axis=1)
    order = np.lexsort(tuple(candidates[:, j] for j in reversed(range(d))) + (norms,))
    return candidates[order][:pool_size]


def _box_representations(G: np.ndarray, search_budget: int) -> Dict[Tuple[int, ...], np.ndarray]:
    """Cheapest coefficient vector for every point reachable inside a capped coefficient box."""
    r = G.shape[0]
    B = max(1, int((search_budget ** (1.0 / r) - 1) // 2))
    coeffs = integer_box([B] * r)
    cost = np.max(np.abs(coeffs), axis=1) * (r * B + 1) + np.sum(np.abs(coeffs), axis=1)
    order = np.argsort(cost, kind="stable")
    coeffs = coeffs[order]
    points = coeffs @ G
    _, first = np.unique(points, axis=0, return_index=True)
    return {tuple(points[i].tolist()): coeffs[i] for i in first}


def _represent(G: np.ndarray, targets: np.ndarray, search_budget: int) -> List[Optional[np.ndarray]]:
    """Integer coefficients x with x @ G = t for each target, None where none was found."""
    r = G.shape[0]
    if np.linalg.matrix_rank(G.astype(float)) == r:
        # independent generators: the real solution is unique
        X, *_ = np.linalg.lstsq(G.T.astype(float), targets.T.astype(float), rcond=None)
        X = X.T
        Xi = np.rint(X).astype(np.int64)
        exact = (np.max(np.abs(X - Xi), axis=1) <= 1e-9) & np.all(Xi @ G == targets, axis=1)
        return [x if ok else None for x, ok in zip(Xi, exact)]
    table = _box_representations(G, search_budget)
    return [table.get(tuple(t.tolist())) for t in targets]


def _coverage_score(G: np.ndarray, targets: np.ndarray, search_budget: int) -> Tuple[float, Optional[Gap]]:
    """Covered targets per unit coefficient-box size, and the GAP if every target is covered."""
    rows = _represent(G, targets, search_budget)
    hits = [x for x in rows if x is not None]
    if not hits:
        return 0.0, None
    bounds = tuple(int(b) for b in np.max(np.abs(np.array(hits)), axis=0))
    gap = Gap(G.astype(float), bounds, G.shape[1])
    score = len(hits) / float(gap.box_size)
    return score, gap if len(hits) == len(rows) else None


def _contains(gap: Gap, targets: np.ndarray, budget: int) -> Tuple[bool, int]:
    points = np.rint(gap.enumerate(budget)).astype(np.int64)
    present = {tuple(p) for p in points.tolist()}
    return all(tuple(t) in present for t in targets.tolist()), points.shape[0]


def _point_sum_gap(F: np.ndarray) -> Gap:
    """Unit vectors and every nonzero point of F as generators, all bounds 1."""
    d = F.shape[1]
    points = F[np.any(F != 0, axis=1)]
    G = np.vstack([np.eye(d, dtype=np.int64), points])
    return Gap(G.astype(float), (1,) * G.shape[0], d)


def fit_gap(
    F,
    r_max: int = GAP_MAX_RANK,
    size_budget: int = GAP_SIZE_BUDGET,
    pool_size: int = GAP_POOL_SIZE,
    beam_width: int = GAP_BEAM_WIDTH,
    search_budget: int = GAP_SEARCH_BUDGET,
) -> GapFit:
    """
    Heuristic GAP containing F and F + {-1, 1}^d.

    The generator pool holds the unit vectors and the shortest differences of
    F u {0}. A beam search over ranks 1..r_max ranks generator sets by the
    number of covered targets per unit of coefficient-box size. Coefficients
    come from exact solving when the generators are independent and from the
    cheapest representation in a capped coefficient box otherwise. Two
    fallbacks are candidates whenever they fit the size budget: the box GAP
    with generators e_1..e_d and L_j = max |target_j|, and the point-sum GAP
    whose generators are e_1..e_d plus the nonzero points of F, all with
    bound 1. The smallest GAP whose containment is confirmed by enumeration
    wins.

    Raises:
        BudgetExceededError: If no candidate fits the size budget
    """
    F = np.asarray(F, dtype=np.int64)
    if F.ndim == 1:
        F = F.reshape(-1, 1)
    d = F.shape[1]
    shifted = (F[:, None, :] + sign_vertices(d)[None, :, :]).reshape(-1, d)
    targets = np.unique(np.vstack([F, shifted]), axis=0)

    best: Optional[Gap] = None
    best_size, method = math.inf, "box_fallback"
    box = Gap(np.eye(d), tuple(int(b) for b in np.max(np.abs(targets), axis=0)), d)
    if box.box_size <= size_budget:
        _, best_size = _contains(box, targets, size_budget)
        best = box

    pool = _generator_pool(F, pool_size)
    tried = 0
    beam: List[Tuple[int, ...]] = [()]
    for rank in range(1, r_max + 1):
        scored = []
        seen = set()
        for prefix in beam:
            start = prefix[-1] + 1 if prefix else 0
            for j in range(start, pool.shape[0]):
                combo = prefix + (j,)
                if combo in seen:
                    continue
                seen.add(combo)
                G = pool[list(combo)]
                tried += 1
                score, gap = _coverage_score(G, targets, search_budget)
                if gap is not None and gap.box_size <= size_budget:
                    contained, size = _contains(gap, targets, size_budget)
                    if contained and size < best_size:
                        best, best_size = gap, size
                        method = "unimodular" if rank == d and abs(round(np.linalg.det(G.astype(float)))) == 1 else "greedy"
                scored.append((-score, combo))
        scored.sort()
        beam = [combo for _, combo in scored[:beam_width]]
        if not beam:
            break

    point_sum = _point_sum_gap(F)
    if point_sum.rank > d and point_sum.box_size <= size_budget:
        tried += 1
        contained, size = _contains(point_sum, targets, size_budget)
        if contained and size < best_size:
            best, best_size, method = point_sum, size, "point_sum"

    if best is None:
        raise BudgetExceededError("GAP size", min(box.box_size, point_sum.box_size), size_budget)
    logger.debug(f"fit_gap: {tried} generator sets tried, best |Q|={best_size} ({method})")
    return GapFit(gap=best, cardinality=int(best_size), method=method, targets=int(targets.shape[0]), candidates_tried=tried)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _representation_index(gap: Gap, budget: int) -> Dict[Tuple[int, ...], np.ndarray]:
    """Integer point -> coefficient witness, for an integer GAP."""
    coeffs = gap.coefficients(budget)
    points = np.rint(coeffs @ gap.generators).astype(np.int64) if gap.rank else np.zeros((1, gap.dimension), dtype=np.int64)
    index: Dict[Tuple[int, ...], np.ndarray] = {}
    for p, x in zip(points.tolist(), coeffs):
        index.setdefault(tuple(p), x)
    return index


def verify_thm_gap(
    system: VectorSystem,
    model: NoiseModel,
    A: float,
    epsilon: float,
    n_prime: int,
    gap: Gap,
    k: int,
    D: float,
    alpha: float,
    rho: float,
    constants: Optional[ConstantsConfig] = None,
    body_constants: Optional[BodyConstants] = None,
    budget: int = GAP_SIZE_BUDGET,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> List[VerificationRecord]:
    """
    Check the four conclusions for the integer GAP Q' and Q = (R/(Dk)) Q'.

    Part 1 compares rank and cardinality with C (d + A/eps) and
    C(A,d,eps) (n')^((d - rank)/2) / rho. Part 2 counts the v with
    dist_K(v, Q) <= C(eta) omega_inf R / (d k) and reports the smallest
    constant that would have sufficed. Part 3 finds the largest integer s with
    s u in Q' for every vertex u of {-1, 1}^d, so C' = D/s, and keeps integer
    witnesses. Part 4 bounds the generator norms.
    """
    if system.body is None:
        raise ValidationError("verify_thm_gap needs a system with a body")
    constants = constants or ConstantsConfig()
    body = system.body
    d, n, R = system.dimension, system.n, system.R
    scaled = gap.scaled(R / (D * k))
    records: List[VerificationRecord] = []

    # Part 1
    rank_bound = constants.C * (d + A / epsilon)
    records.append(VerificationRecord(
        "part1_rank", lhs=float(gap.rank), rhs=rank_bound, holds=gap.rank <= rank_bound,
        constants={"C": constants.C},
    ))
    cardinality = int(gap.enumerate(budget).shape[0])
    card_bound = constants.C_A_d_eps * float(n_prime) ** ((d - gap.rank) / 2.0) / rho
    records.append(VerificationRecord(
        "part1_cardinality", lhs=float(cardinality), rhs=card_bound, holds=cardinality <= card_bound,
        constants={"C_A_d_eps": constants.C_A_d_eps},
        details={"proper": cardinality == gap.box_size, "box_size": gap.box_size},
    ))

    # Part 2
    omega_inf = estimate_embedding_constants(body, math.inf, samples, seed).omega
    unit = omega_inf * R / (d * k)
    bound = constants.C_eta * unit
    Q = scaled.enumerate(budget)
    distances = np.array([float(np.min(body.norms(v[None, :] - Q))) for v in system.vectors])
    close = int(np.count_nonzero(distances <= bound * (1.0 + 1e-9) + 1e-9))
    needed = max(0, n - n_prime)
    effective = float(np.sort(distances)[needed - 1] / unit) if needed else 0.0
    records.append(VerificationRecord(
        "part2_approximation", lhs=float(close), rhs=float(needed), holds=close >= needed,
        constants={"C_eta": constants.C_eta, "omega_inf": omega_inf},
        details={"distances": distances.tolist(), "bound": bound, "effective_constant": effective},
    ))

    # Part 3
    index = _representation_index(gap, budget)
    vertices = sign_vertices(d)
    s_max = max(abs(c) for p in index for c in p) if index else 0
    best_s, witnesses = 0, {}
    for s in range(1, s_max + 1):
        found = [index.get(tuple((s * u).tolist())) for u in vertices]
        if all(x is not None for x in found):
            best_s = s
            witnesses = {str((s * u).tolist()): x.tolist() for u, x in zip(vertices, found)}
    c_bound = constants.C_part3 * d * alpha
    if best_s:
        c_prime = D / best_s
        records.append(VerificationRecord(
            "part3_full_dimension", lhs=c_prime, rhs=c_bound, holds=c_prime <= c_bound,
            constants={"C_part3": constants.C_part3, "D": D},
            details={"s": best_s, "witnesses": witnesses},
        ))
    else:
        records.append(VerificationRecord(
            "part3_full_dimension", lhs=None, rhs=c_bound, holds=False,
            constants={"C_part3": constants.C_part3, "D": D},
            details={"reason": "no vertex dilate of {-1,1}^d lies in Q'"},
        ))

    # Part 4
    max_generator = float(np.max(body.norms(scaled.generators))) if gap.rank else 0.0
    max_v = float(np.max(body.norms(system.vectors))) if n else 0.0
    gen_bound = constants.C_A_d_eps * body.quasi_constant ** (k + 1) * (d * alpha * k / R * max_v + omega_inf)
    records.append(VerificationRecord(
        "part4_generator_norms", lhs=max_generator, rhs=gen_bound, holds=max_generator <= gen_bound,
        constants={"C_A_d_eps": constants.C_A_d_eps, "C_K": body.quasi_constant, "omega_inf": omega_inf},
    ))

    for rec in records:
        if rec.holds is False:
            logger.info(f"{rec.name}: lhs={rec.lhs} rhs={rec.rhs} with constants {rec.constants}")
    return records


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def thm_gap_pipeline(
    system: VectorSystem,
    model: NoiseModel,
    A: float,
    epsilon: float,
    n_prime: int,
    N: int = DEFAULT_GRID_N,
    grid_budget: int = GRID_BUDGET,
    sumset_budget: int = SUMSET_BUDGET,
    gap_budget: int = GAP_SIZE_BUDGET,
    seed: int = 0,
    samples: int = DEFAULT_SAMPLES,
    constants: Optional[ConstantsConfig] = None,
    rho: Optional[float] = None,
    body_constants: Optional[BodyConstants] = None,
) -> GapPipelineReport:
    """
    Run every stage of the GAP approximation and verify the result.

    Stages: precondition rho >= n^-A, anti-concentration audit, body
    constants, level set, bad-vector split, choice of k, rounding with
    D = 512 d alpha, dual volume, GAP fit, rescaling by R/(Dk) and the four
    verification records.

    Raises:
        ValidationError: If the inputs are unusable (d > 2, no body, bad law)
        BudgetExceededError: If a stage before the GAP fit exceeds its budget
    """
    if system.body is None:
        raise ValidationError("the pipeline needs a system with a body")
    if system.dimension > 2:
        raise ValidationError("grid stages support d <= 2")
    if n_prime < 1 or system.n < 1:
        raise ValidationError("need n >= 1 and n' >= 1")
    constants = constants or ConstantsConfig()
    d, n = system.dimension, system.n
    stages: List[VerificationRecord] = []

    logger.info(f"GAP pipeline: n={n}, d={d}, A={A}, eps={epsilon}, n'={n_prime}")
    if rho is None:
        result = small_ball(system, model)
        rho, certificate = result.rho, result.certificate
    else:
        certificate = "supplied"
    level = float(n) ** (-A)
    stages.append(VerificationRecord(
        "precondition", lhs=rho, rhs=level, holds=rho >= level,
        details={"certificate": certificate, "n_prime_range": [float(n) ** epsilon, n]},
    ))

    audit = anticoncentration_audit(model)
    if model.alpha is None and not audit.satisfied:
        raise ValidationError(f"noise model {model.name!r} fails the anti-concentration condition")
    alpha = model.alpha if model.alpha is not None else audit.alpha
    stages.append(VerificationRecord(
        "anticoncentration_audit", lhs=audit.mass_at_C, rhs=0.5, holds=audit.satisfied,
        details={"C_eta_min": audit.C_eta_min, "alpha": alpha},
    ))

    if body_constants is None:
        body_constants = estimate_constants(system.body, samples, seed)
    stages.append(VerificationRecord(
        "body_constants", lhs=body_constants.kappa, rhs=None, holds=None, details=body_constants.to_dict(),
    ))

    level_set = level_set_search(system, model, A, N, grid_budget, rho, body_constants, alpha)
    stages.append(VerificationRecord(
        "level_set", lhs=level_set.average_statistic, rhs=8.0 * PI2 * level_set.m,
        holds=level_set.found and level_set.average_statistic <= 8.0 * PI2 * level_set.m,
        details=level_set.to_dict(),
    ))

    split = bad_vector_split(system, model, level_set.S, level_set.m, n_prime, alpha)
    stages.append(VerificationRecord(
        "bad_vector_split", lhs=float(len(split.bad)), rhs=float(n_prime), holds=split.markov_holds,
        details=split.to_dict(),
    ))

    m_eff = max(level_set.m, 1)
    kc = choose_k(n_prime, m_eff, d, A, body_constants.kappa, n)
    k = kc.k
    stages.append(VerificationRecord(
        "choose_k", lhs=float(k), rhs=kc.range_upper, holds=kc.in_range,
        details={"raw": kc.raw, "range_lower": kc.range_lower},
    ))

    D = float(DEFAULT_DILATION_BASE * d * alpha)
    V_prime = system.rescaled().vectors[split.good]
    rounding = round_to_lattice(V_prime, D, k)
    stages.append(VerificationRecord(
        "rounding", lhs=rounding.max_error, rhs=1.0 / (D * k), holds=rounding.max_error <= 1.0 / (D * k),
        details={"F_size": int(rounding.F.shape[0])},
    ))

    dual = dual_volume_check(V_prime, k, alpha, body_constants, rho, budget=sumset_budget)
    stages.append(VerificationRecord(
        "dual_volume", lhs=dual.lhs_volume, rhs=dual.rhs, holds=dual.holds,
        constants={"kappa": body_constants.kappa},
        details={"sumset_size": dual.sumset_size, "resolution": dual.resolution},
    ))

    gap: Optional[Gap] = None
    scaled: Optional[Gap] = None
    try:
        fit = fit_gap(rounding.F, size_budget=gap_budget)
    except BudgetExceededError as e:
        logger.warning(f"fit_gap: no GAP within budget for |F|={rounding.F.shape[0]}: {e}")
        stages.append(VerificationRecord(
            "fit_gap", lhs=None, rhs=float(gap_budget), holds=False,
            details={"reason": str(e), "requested": e.requested, "budget": e.budget},
        ))
        parts = [
            VerificationRecord(name, lhs=None, rhs=None, holds=None, details={"reason": "no GAP was fitted"})
            for name in PART_NAMES
        ]
    else:
        gap = fit.gap
        stages.append(VerificationRecord(
            "fit_gap", lhs=float(fit.cardinality), rhs=None, holds=None, details=fit.to_dict(),
        ))
        scaled = gap.scaled(system.R / (D * k))
        parts = verify_thm_gap(
            system, model, A, epsilon, n_prime, gap, k, D, alpha, rho,
            constants, body_constants, gap_budget, samples, seed,
        )

    findings = [
        f"{rec.name}: lhs={rec.lhs} rhs={rec.rhs}"
        for rec in stages + parts
        if rec.holds is False
    ]
    for finding in findings:
        logger.warning(f"finding: {finding}")
    used = constants.model_dump()
    used["kappa"] = body_constants.kappa
    return GapPipelineReport(
        n_prime=n_prime,
        k=k,
        D=D,
        alpha=alpha,
        rho=rho,
        F=rounding.F,
        gap=gap,
        scaled_gap=scaled,
        stages=stages,
        parts=parts,
        constants=used,
        findings=findings,
    )
