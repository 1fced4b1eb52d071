"""Deterministic block-parallel Monte Carlo."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from ..config import DEFAULT_BLOCK_SIZE, DEFAULT_WORKERS


@dataclass
class BlockMean:
    """Pooled mean and standard error of per-sample values."""
    mean: float
    std_error: float
    samples: int


def block_sizes(samples: int, block_size: int = DEFAULT_BLOCK_SIZE) -> List[int]:
    """Split ``samples`` into full blocks plus a remainder block."""
    full, rest = divmod(samples, block_size)
    sizes = [block_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def block_map(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    samples: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    max_workers: Optional[int] = None,
) -> List[np.ndarray]:
    """
    Evaluate ``fn(rng, size)`` over sample blocks.

    Block ``i`` always receives the ``i``-th child of ``SeedSequence(seed)``,
    and results come back in block order, so the output depends only on
    (seed, samples, block_size) and not on scheduling.

    Args:
        fn: Callable drawing ``size`` samples from ``rng`` and returning the
            per-sample values (first axis = sample)
        samples: Total number of samples
        seed: Root seed
        block_size: Samples per block
        max_workers: Thread count (default: DEFAULT_WORKERS)

    Returns:
        Per-block value arrays in block order
    """
    sizes = block_sizes(samples, block_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    rngs = [np.random.default_rng(child) for child in children]
    workers = max_workers or DEFAULT_WORKERS

    if workers <= 1 or len(sizes) <= 1:
        return [fn(rng, size) for rng, size in zip(rngs, sizes)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, rngs, sizes))


def block_mean(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    samples: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    max_workers: Optional[int] = None,
) -> BlockMean:
    """Monte Carlo mean of a scalar per-sample quantity with its standard error."""
    values = np.concatenate(block_map(fn, samples, seed, block_size, max_workers))
    n = values.shape[0]
    mean = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return BlockMean(mean=mean, std_error=std_error, samples=n)


def binomial_std_error(p: float, samples: int) -> float:
    """Standard deviation of a hit-rate estimate."""
    if samples <= 0:
        return 0.0
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / samples))
