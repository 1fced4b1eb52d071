"""Setup script for the anticoncentration package.

For backwards compatibility. Modern installation uses pyproject.toml.
"""

from setuptools import setup

# Configuration is in pyproject.toml
setup()
