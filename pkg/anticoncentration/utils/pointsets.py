"""Finite point sets: tolerance merging and small lattice helpers."""

from typing import Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..config import MERGE_TOLERANCE


def as_points(points, dimension: int = None) -> np.ndarray:
    """Coerce scalars, lists or arrays into an (m, d) float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # A flat list is a set of scalars unless a dimension says otherwise
        if dimension is not None and dimension > 1:
            arr = arr.reshape(1, -1)
        else:
            arr = arr.reshape(-1, 1)
    if dimension is not None and arr.size == 0:
        arr = arr.reshape(0, dimension)
    return arr


def merge_points(
    points: np.ndarray,
    weights: np.ndarray = None,
    tol: float = MERGE_TOLERANCE,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Merge points that are within ``tol`` of each other in the l_inf metric.

    Clusters are the connected components of the "closer than tol" graph, so
    representatives of different clusters are always more than ``tol`` apart.
    Each cluster keeps its lowest-index member as representative and the sum
    of its weights.

    Returns:
        (representatives, merged weights), ordered by first occurrence
    """
    points = np.asarray(points, dtype=float)
    m = points.shape[0]
    if weights is None:
        weights = np.ones(m)
    weights = np.asarray(weights, dtype=float)
    if m <= 1:
        return points.copy(), weights.copy()

    tree = cKDTree(points)
    pairs = tree.query_pairs(tol, p=np.inf, output_type="ndarray")
    if pairs.size == 0:
        return points.copy(), weights.copy()

    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)
    )
    _, labels = connected_components(graph, directed=False)
    # First member of each component, in index order
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    reps = first[order]
    relabel = np.empty(len(first), dtype=int)
    relabel[order] = np.arange(len(first))
    merged = np.zeros(len(first))
    np.add.at(merged, relabel[labels], weights)
    return points[reps], merged


def unique_points(points: np.ndarray, tol: float = MERGE_TOLERANCE) -> np.ndarray:
    """Distinct points of a set up to ``tol``."""
    reps, _ = merge_points(points, None, tol)
    return reps


def integer_box(bounds) -> np.ndarray:
    """All integer vectors x with |x_j| <= bounds[j], lexicographic order."""
    bounds = [int(b) for b in bounds]
    if not bounds:
        return np.zeros((1, 0), dtype=np.int64)
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1).reshape(-1, len(bounds))


def sign_vertices(d: int) -> np.ndarray:
    """The 2^d vertices of {-1, 1}^d."""
    grid = np.meshgrid(*([np.array([-1, 1])] * d), indexing="ij")
    return np.stack(grid, axis=-1).reshape(-1, d)
