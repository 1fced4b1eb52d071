"""
Experiment runner: configuration documents, dispatch and result files.

A run takes one ``ExperimentConfig``, calls the operations of the named
experiment and produces a ``RunRecord`` holding the config echo, the full
outputs and a table of headline numbers. Records are written as sorted-key
JSON plus a CSV with a fixed header per experiment.
"""

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, model_validator

from .config import (
    BODY_PRESETS,
    DEFAULT_GRID_N,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    ENUMERATION_BUDGET,
    GAP_SIZE_BUDGET,
    GRID_BUDGET,
    HYPERPLANE_CANDIDATE_BUDGET,
    LEMMA_TV_GRID,
    LEMMA_TV_QUAD_POINTS,
    MIN_SAMPLES,
    SUMSET_BUDGET,
    ConstantsConfig,
)
from .esseen import esseen_bound, esseen_eta_bound, esseen_euclidean_bound, lemma_tv_sweep, optimize_scaled_bound
from .exceptions import AntiConcentrationError, ConfigurationError
from .gap import thm_gap_pipeline
from .geometry import StarBody, estimate_constants, estimate_embedding_constants, kappa_scaling_profile
from .hyperplane import best_hyperplane, verify_prop_hyper, verify_thm_hyper
from .models import VectorSystem
from .noise import NoiseModel, anticoncentration_audit
from .smallball import sharp_lo_report, small_ball
from .utils.serialization import to_builtin, write_csv, write_json

logger = logging.getLogger(__name__)


class Experiment(str, Enum):
    """Experiments the harness can dispatch."""
    SHARP_LO = "sharp-lo"
    ESSEEN_AUDIT = "esseen-audit"
    LEMMA_TV = "lemma-tv"
    HYPERPLANE = "hyperplane"
    GAP_PIPELINE = "gap-pipeline"
    BODY_CONSTANTS = "body-constants"


# ---------------------------------------------------------------------------
# configuration documents
# ---------------------------------------------------------------------------

class BodySpec(BaseModel):
    """A body by kind ("lp", "box") or by preset name (B1, B2, Binf, Bhalf)."""
    kind: Literal["lp", "box"] = "lp"
    p: Optional[float] = None
    d: Optional[int] = Field(None, ge=1)
    half_widths: Optional[List[float]] = None
    preset: Optional[str] = None
    scale: float = Field(1.0, gt=0)

    model_config = {"extra": "forbid", "ser_json_inf_nan": "strings"}

    @model_validator(mode="after")
    def _check_kind(self) -> "BodySpec":
        if self.preset is not None:
            if self.preset not in BODY_PRESETS:
                raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(BODY_PRESETS)}")
        elif self.kind == "lp" and self.p is None:
            raise ValueError("lp body needs 'p'")
        elif self.kind == "box" and not self.half_widths:
            raise ValueError("box body needs 'half_widths'")
        return self

    def to_body(self, dimension: Optional[int] = None) -> StarBody:
        if self.preset is not None:
            spec = dict(BODY_PRESETS[self.preset])
        else:
            spec = {"kind": self.kind, "p": self.p, "half_widths": self.half_widths}
        spec["d"] = self.d or dimension or 1
        spec["scale"] = self.scale
        return StarBody.from_spec(spec)


class NoiseSpec(BaseModel):
    kind: Literal["bernoulli", "finite"] = "bernoulli"
    atoms: Optional[List[Tuple[float, float]]] = None
    c_eta: Optional[float] = None
    C_eta: Optional[float] = None
    alpha: Optional[float] = None

    model_config = {"extra": "forbid"}

    def to_model(self) -> NoiseModel:
        return NoiseModel.from_spec(self.model_dump())


class SystemSpec(BaseModel):
    """An explicit vector list with its radius R."""
    vectors: List[List[float]] = Field(..., min_length=1)
    R: float = Field(..., gt=0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _rectangular(self) -> "SystemSpec":
        lengths = {len(v) for v in self.vectors}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError("vectors must be nonempty and share one dimension")
        return self


class GeneratorSpec(BaseModel):
    """
    A seeded random system: n Gaussian vectors in R^d times ``scale``, or
    ``kind="ones"`` for n copies of (1, ..., 1) times ``scale``.
    """
    seed: int = DEFAULT_SEED
    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    R: float = Field(..., gt=0)
    kind: Literal["gaussian", "ones"] = "gaussian"
    scale: float = Field(1.0, gt=0)

    model_config = {"extra": "forbid"}

    def vectors(self) -> np.ndarray:
        if self.kind == "ones":
            return np.full((self.n, self.d), self.scale)
        rng = np.random.default_rng(self.seed)
        return self.scale * rng.standard_normal((self.n, self.d))


class Budgets(BaseModel):
    samples: int = Field(DEFAULT_SAMPLES, ge=MIN_SAMPLES)
    enumeration: int = Field(ENUMERATION_BUDGET, gt=0)
    grid_n: int = Field(DEFAULT_GRID_N, gt=0)
    grid: int = Field(GRID_BUDGET, gt=0)
    sumset: int = Field(SUMSET_BUDGET, gt=0)
    gap_size: int = Field(GAP_SIZE_BUDGET, gt=0)
    hyperplane_candidates: int = Field(HYPERPLANE_CANDIDATE_BUDGET, gt=0)
    quad_points: int = Field(LEMMA_TV_QUAD_POINTS, ge=1000)
    workers: int = Field(DEFAULT_WORKERS, ge=1)

    model_config = {"extra": "forbid"}


class SharpLOParams(BaseModel):
    n: List[int] = Field(default_factory=lambda: [10])
    R: List[float] = Field(default_factory=lambda: [0.5])


class EsseenAuditParams(BaseModel):
    epsilon: Optional[float] = Field(None, gt=0)
    t_grid: Optional[List[float]] = None
    eta_bound: bool = True


class LemmaTVParams(BaseModel):
    lam: List[float] = Field(default_factory=lambda: list(LEMMA_TV_GRID["lambda"]))
    w: List[float] = Field(default_factory=lambda: list(LEMMA_TV_GRID["w"]))
    alpha: List[float] = Field(default_factory=lambda: list(LEMMA_TV_GRID["alpha"]))


class HyperplaneParams(BaseModel):
    k: int = Field(0, ge=0)
    verify: bool = True


class GapPipelineParams(BaseModel):
    A: float = Field(1.0, gt=0)
    epsilon: float = Field(0.5, gt=0, le=1)
    n_prime: int = Field(1, ge=1)


class BodyConstantsParams(BaseModel):
    method: str = "auto"
    t_grid: Optional[List[float]] = None
    embedding_p: List[float] = Field(default_factory=lambda: [2.0, math.inf])

    model_config = {"ser_json_inf_nan": "strings"}


class ExperimentConfig(BaseModel):
    """One experiment run; only the parameter block of ``experiment`` is used."""
    experiment: Experiment
    name: Optional[str] = None
    seed: int = DEFAULT_SEED
    body: Optional[BodySpec] = None
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    system: Optional[SystemSpec] = None
    generator: Optional[GeneratorSpec] = None
    budgets: Budgets = Field(default_factory=Budgets)
    constants: ConstantsConfig = Field(default_factory=ConstantsConfig)
    out: Optional[str] = None

    sharp_lo: SharpLOParams = Field(default_factory=SharpLOParams)
    esseen_audit: EsseenAuditParams = Field(default_factory=EsseenAuditParams)
    lemma_tv: LemmaTVParams = Field(default_factory=LemmaTVParams)
    hyperplane: HyperplaneParams = Field(default_factory=HyperplaneParams)
    gap_pipeline: GapPipelineParams = Field(default_factory=GapPipelineParams)
    body_constants: BodyConstantsParams = Field(default_factory=BodyConstantsParams)

    model_config = {"extra": "forbid", "ser_json_inf_nan": "strings"}

    @model_validator(mode="after")
    def _check_inputs(self) -> "ExperimentConfig":
        needs_system = self.experiment in (Experiment.ESSEEN_AUDIT, Experiment.HYPERPLANE, Experiment.GAP_PIPELINE)
        if needs_system and (self.system is None) == (self.generator is None):
            raise ValueError(f"{self.experiment.value} needs exactly one of 'system' or 'generator'")
        needs_body = needs_system and self.experiment != Experiment.HYPERPLANE
        if (needs_body or self.experiment == Experiment.BODY_CONSTANTS) and self.body is None:
            raise ValueError(f"{self.experiment.value} needs a 'body'")
        return self

    @property
    def run_name(self) -> str:
        return self.name or f"{self.experiment.value}-seed{self.seed}"

    def build_system(self) -> VectorSystem:
        if self.system is not None:
            vectors, R = np.asarray(self.system.vectors, dtype=float), self.system.R
        else:
            vectors, R = self.generator.vectors(), self.generator.R
        body = self.body.to_body(vectors.shape[1]) if self.body is not None else None
        return VectorSystem(vectors, R, body)


def load_config(data: Union[Dict[str, Any], ExperimentConfig]) -> ExperimentConfig:
    """
    Validate a configuration document.

    Raises:
        ConfigurationError: With the dotted location of the offending field
    """
    if isinstance(data, ExperimentConfig):
        return data
    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first.get("loc", ())) or None
        raise ConfigurationError(first.get("msg", str(e)), field=location) from e


def load_config_file(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from e
    return load_config(data)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Everything one run produced; ``wall_time`` is the only non-deterministic field."""
    name: str
    experiment: str
    config: Dict[str, Any]
    outputs: Dict[str, Any]
    headline: List[Dict[str, Any]]
    columns: List[str]
    seed: int
    version: str
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "experiment": self.experiment,
            "config": self.config,
            "outputs": to_builtin(self.outputs),
            "headline": to_builtin(self.headline),
            "columns": self.columns,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
        }

    def deterministic_dict(self) -> Dict[str, Any]:
        document = self.to_dict()
        document.pop("wall_time")
        return document


@dataclass
class BatchError:
    """A config that failed inside a batch."""
    index: int
    source: str
    error_type: str
    message: str
    field: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "source": self.source,
            "error_type": self.error_type,
            "message": self.message,
            "field": self.field,
        }


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

ExperimentResult = Tuple[Dict[str, Any], List[Dict[str, Any]]]

HEADLINE_COLUMNS: Dict[Experiment, List[str]] = {
    Experiment.SHARP_LO: ["n", "R", "rho", "bound", "ratio", "exact_match"],
    Experiment.ESSEEN_AUDIT: [
        "rho", "certificate", "kappa", "esseen_bound", "esseen_std_error", "esseen_holds",
        "eta_bound", "eta_std_error", "eta_holds",
    ],
    Experiment.LEMMA_TV: ["lam", "w", "alpha", "lhs", "rhs", "holds", "quadrature_error"],
    Experiment.HYPERPLANE: ["k", "method", "objective", "near_count", "far_count", "prop_holds", "thm_conclusion"],
    Experiment.GAP_PIPELINE: ["record", "lhs", "rhs", "holds"],
    Experiment.BODY_CONSTANTS: ["mu", "gamma", "kappa", "se_mu", "se_gamma", "mu_method", "gamma_method"],
}


def _run_sharp_lo(config: ExperimentConfig) -> ExperimentResult:
    reports = [sharp_lo_report(n, R) for n in config.sharp_lo.n for R in config.sharp_lo.R]
    rows = [
        {"n": r.n, "R": r.R, "rho": r.rho, "bound": r.bound, "ratio": r.ratio, "exact_match": r.exact_match}
        for r in reports
    ]
    return {"reports": reports}, rows


def _run_esseen_audit(config: ExperimentConfig) -> ExperimentResult:
    system = config.build_system()
    model = config.noise.to_model()
    b = config.budgets
    constants = estimate_constants(system.body, b.samples, config.seed, max_workers=b.workers)
    rho = small_ball(system, model, budget=b.enumeration)
    bound = esseen_bound(system, model, constants, b.samples, config.seed, max_workers=b.workers)
    outputs: Dict[str, Any] = {
        "body_constants": constants,
        "small_ball": rho,
        "esseen_bound": bound,
        "audit": anticoncentration_audit(model),
    }
    row: Dict[str, Any] = {
        "rho": rho.rho,
        "certificate": rho.certificate,
        "kappa": constants.kappa,
        "esseen_bound": bound.value,
        "esseen_std_error": bound.std_error,
        "esseen_holds": rho.rho <= bound.upper(),
        "eta_bound": None,
        "eta_std_error": None,
        "eta_holds": None,
    }
    params = config.esseen_audit
    if params.eta_bound:
        eta = esseen_eta_bound(system, model, constants, b.samples, config.seed, max_workers=b.workers)
        outputs["eta_bound"] = eta
        row.update(eta_bound=eta.value, eta_std_error=eta.std_error, eta_holds=rho.rho <= eta.upper())
    if params.epsilon is not None:
        outputs["euclidean_bound"] = esseen_euclidean_bound(
            system, params.epsilon, b.samples, config.seed, model, config.constants, max_workers=b.workers
        )
    if params.t_grid:
        outputs["scaled_bound"] = optimize_scaled_bound(
            system, model, params.t_grid, b.samples, config.seed, max_workers=b.workers
        )
    if row["esseen_holds"] is False:
        logger.warning(f"rho={rho.rho:.6g} exceeds the Esseen bound {bound.value:.6g} + 4 SE")
    return outputs, [row]


def _run_lemma_tv(config: ExperimentConfig) -> ExperimentResult:
    params = config.lemma_tv
    grid = {"lambda": params.lam, "w": params.w, "alpha": params.alpha}
    checks = lemma_tv_sweep(grid, config.budgets.quad_points)
    rows = [
        {
            "lam": c.lam, "w": c.w, "alpha": c.alpha, "lhs": c.lhs, "rhs": c.rhs,
            "holds": c.holds, "quadrature_error": c.quadrature_error,
        }
        for c in checks
    ]
    return {"checks": checks}, rows


def _run_hyperplane(config: ExperimentConfig) -> ExperimentResult:
    system = config.build_system()
    model = config.noise.to_model()
    b, k = config.budgets, config.hyperplane.k
    report = best_hyperplane(system.vectors, k, system.R, b.hyperplane_candidates)
    outputs: Dict[str, Any] = {"hyperplane": report}
    row = {
        "k": k,
        "method": report.method,
        "objective": report.objective,
        "near_count": report.near_count,
        "far_count": report.far_count,
        "prop_holds": None,
        "thm_conclusion": None,
    }
    if config.hyperplane.verify and model.c_eta is not None:
        prop = verify_prop_hyper(system, model, k, b.samples, config.seed, max_workers=b.workers)
        outputs["prop_hyper"] = prop
        row["prop_holds"] = prop.inequality_holds
        if system.body is not None:
            constants = estimate_constants(system.body, b.samples, config.seed, max_workers=b.workers)
            thm = verify_thm_hyper(system, model, constants, k, config.constants, samples=b.samples, seed=config.seed)
            outputs["thm_hyper"] = thm
            row["thm_conclusion"] = thm.conclusion_holds
    return outputs, [row]


def _run_gap_pipeline(config: ExperimentConfig) -> ExperimentResult:
    system = config.build_system()
    model = config.noise.to_model()
    b, params = config.budgets, config.gap_pipeline
    report = thm_gap_pipeline(
        system,
        model,
        params.A,
        params.epsilon,
        params.n_prime,
        N=b.grid_n,
        grid_budget=b.grid,
        sumset_budget=b.sumset,
        gap_budget=b.gap_size,
        seed=config.seed,
        samples=b.samples,
        constants=config.constants,
    )
    rows = [
        {"record": rec.name, "lhs": rec.lhs, "rhs": rec.rhs, "holds": rec.holds}
        for rec in report.stages + report.parts
    ]
    return {"pipeline": report}, rows


def _run_body_constants(config: ExperimentConfig) -> ExperimentResult:
    body = config.body.to_body()
    b, params = config.budgets, config.body_constants
    constants = estimate_constants(body, b.samples, config.seed, params.method, max_workers=b.workers)
    outputs: Dict[str, Any] = {
        "body": body.describe(),
        "constants": constants,
        "embedding": [estimate_embedding_constants(body, p, b.samples, config.seed) for p in params.embedding_p],
    }
    if params.t_grid:
        profile = kappa_scaling_profile(body, params.t_grid, b.samples, config.seed, params.method, max_workers=b.workers)
        outputs["kappa_profile"] = [{"t": t, "kappa": kappa} for t, kappa in profile]
    return outputs, [constants.to_record()]


EXPERIMENTS: Dict[Experiment, Callable[[ExperimentConfig], ExperimentResult]] = {
    Experiment.SHARP_LO: _run_sharp_lo,
    Experiment.ESSEEN_AUDIT: _run_esseen_audit,
    Experiment.LEMMA_TV: _run_lemma_tv,
    Experiment.HYPERPLANE: _run_hyperplane,
    Experiment.GAP_PIPELINE: _run_gap_pipeline,
    Experiment.BODY_CONSTANTS: _run_body_constants,
}


# ---------------------------------------------------------------------------
# run / batch
# ---------------------------------------------------------------------------

def write_record(record: RunRecord, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """Write ``<name>.json`` and ``<name>.csv`` atomically; returns both paths."""
    out_dir = Path(out_dir)
    json_path = out_dir / f"{record.name}.json"
    csv_path = out_dir / f"{record.name}.csv"
    write_json(json_path, record.to_dict())
    write_csv(csv_path, record.headline, record.columns)
    return json_path, csv_path


def run(config: Union[Dict[str, Any], ExperimentConfig], out_dir: Optional[Union[str, Path]] = None) -> RunRecord:
    """
    Run one experiment.

    Files are written when ``out_dir`` (or ``config.out``) is set.

    Raises:
        ConfigurationError: If the configuration is invalid
        ValidationError: If a module rejects its inputs
        BudgetExceededError: If a module exceeds its budget
    """
    from . import __version__

    config = load_config(config)
    logger.info(f"running {config.experiment.value} ({config.run_name})")
    start = time.perf_counter()
    outputs, rows = EXPERIMENTS[config.experiment](config)
    wall_time = time.perf_counter() - start

    record = RunRecord(
        name=config.run_name,
        experiment=config.experiment.value,
        config=json.loads(config.model_dump_json()),
        outputs=outputs,
        headline=rows,
        columns=HEADLINE_COLUMNS[config.experiment],
        seed=config.seed,
        version=__version__,
        wall_time=wall_time,
    )
    target = out_dir or config.out
    if target is not None:
        json_path, _ = write_record(record, target)
        logger.info(f"wrote {json_path}")
    logger.debug(f"{config.run_name} finished in {wall_time:.3f}s")
    return record


def batch(
    configs: Sequence[Union[Dict[str, Any], ExperimentConfig, str, Path]],
    out_dir: Optional[Union[str, Path]] = None,
    max_workers: int = DEFAULT_WORKERS,
) -> List[Union[RunRecord, BatchError]]:
    """
    Run configs independently on a thread pool.

    Entries may be documents, validated configs or paths to JSON files. A
    failing config yields a ``BatchError`` in its slot; the others still run.
    Results keep the input order.
    """

    def one(index: int, item) -> Union[RunRecord, BatchError]:
        source = str(item) if isinstance(item, (str, Path)) else f"config[{index}]"
        try:
            config = load_config_file(item) if isinstance(item, (str, Path)) else load_config(item)
            return run(config, out_dir)
        except AntiConcentrationError as e:
            logger.warning(f"{source} failed: {e}")
            return BatchError(index, source, type(e).__name__, str(e), getattr(e, "field", None))
        except Exception as e:
            logger.exception(f"{source} failed with an unexpected error: {e}")
            return BatchError(index, source, type(e).__name__, str(e), None)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(one, range(len(configs)), configs))
    failed = sum(isinstance(r, BatchError) for r in results)
    logger.info(f"batch finished: {len(results) - failed} records, {failed} errors")
    return results


def load_config_dir(directory: Union[str, Path]) -> List[Path]:
    """The JSON config files of a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"{directory} is not a directory")
    return sorted(directory.glob("*.json"))
