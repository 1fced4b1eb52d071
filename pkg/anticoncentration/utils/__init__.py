"""Utility modules for the anti-concentration toolkit."""

from .pointsets import merge_points, unique_points, integer_box, sign_vertices
from .sampling import block_map, block_mean, binomial_std_error
from .serialization import dumps, write_json, write_csv

__all__ = [
    "merge_points",
    "unique_points",
    "integer_box",
    "sign_vertices",
    "block_map",
    "block_mean",
    "binomial_std_error",
    "dumps",
    "write_json",
    "write_csv",
]
