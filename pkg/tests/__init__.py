"""Test suite for anticoncentration."""
