"""Seeded, block-parallel simulation engine."""
