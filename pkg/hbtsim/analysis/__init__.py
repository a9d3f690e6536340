"""Coherence estimators, block bootstrap and exact oracles."""
