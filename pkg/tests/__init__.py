"""Tests for the hbtsim toolkit."""
