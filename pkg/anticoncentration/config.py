"""Defaults, budgets and theorem constants.

Numerical tolerances and budgets are module-level so every stage agrees on
them. The absolute constants that the theorems leave unspecified are collected
in ``ConstantsConfig`` and echoed next to every inequality that uses them.
"""

import math
from typing import Any, Dict

from pydantic import BaseModel, Field

# Monte Carlo
DEFAULT_SAMPLES: int = 100_000
MIN_SAMPLES: int = 1_000
DEFAULT_BLOCK_SIZE: int = 1 << 15
DEFAULT_WORKERS: int = 4
DEFAULT_SEED: int = 0

# Exact enumeration
ENUMERATION_BUDGET: int = 1 << 24
MERGE_TOLERANCE: float = 1e-9
MEMBERSHIP_TOLERANCE: float = 1e-12
LATTICE_CANDIDATE_BUDGET: int = 20_000

# Hyperplane search
HYPERPLANE_CANDIDATE_BUDGET: int = 100_000
ANGULAR_SWEEP_POINTS: int = 10_000

# GAP stages
DEFAULT_GRID_N: int = 32
GRID_BUDGET: int = 300_000
SUMSET_BUDGET: int = 200_000
GAP_SIZE_BUDGET: int = 1_000_000
GAP_SEARCH_BUDGET: int = 20_000
GAP_POOL_SIZE: int = 16
GAP_BEAM_WIDTH: int = 8
GAP_MAX_RANK: int = 3
DEFAULT_DILATION_BASE: int = 512

# Quadrature
LEMMA_TV_TRUNCATION: float = 12.0
LEMMA_TV_QUAD_POINTS: int = 4_000
LEMMA_TV_GRID: Dict[str, tuple] = {
    "lambda": (0.01, 0.1, 1.0, 10.0, 100.0),
    "w": (0.1, 1.0, 10.0),
    "alpha": (0.0, 1.0, math.pi / 3),
}

# Named bodies used by the harness and the acceptance sweeps
BODY_PRESETS: Dict[str, Dict[str, Any]] = {
    "B1": {"kind": "lp", "p": 1.0},
    "B2": {"kind": "lp", "p": 2.0},
    "Binf": {"kind": "lp", "p": math.inf},
    "Bhalf": {"kind": "lp", "p": 0.5},
}

# Bernoulli anti-concentration constants
BERNOULLI_C_ETA: float = 2.0 / math.pi**2
BERNOULLI_CAP_C_ETA: float = 2.0
BERNOULLI_ALPHA: float = 2.0


class ConstantsConfig(BaseModel):
    """Absolute constants left unspecified by the theorems (defaults 1)."""

    C: float = Field(1.0, gt=0, description="absolute constant C (rank bound, Part 3)")
    C_A_d_eps: float = Field(1.0, gt=0, description="C(A,d,eps) in Parts 1 and 4")
    C_eta: float = Field(1.0, gt=0, description="C(eta) in Part 2")
    C_part3: float = Field(1.0, gt=0, description="C in C' <= C d alpha")
    C_euclidean: float = Field(1.0, gt=0, description="C in Esseen's Euclidean inequality")
    hyper_constant: float = Field(80.0, gt=0, description="constant of the hyperplane bound, 40 or 80")

    model_config = {"extra": "forbid"}
