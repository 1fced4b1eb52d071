"""anticoncentration CLI package."""

from .anticoncentration_cli import app, main

__all__ = ["app", "main"]
