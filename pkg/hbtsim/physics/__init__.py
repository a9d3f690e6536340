"""Photon statistics, pulse envelopes and detector response."""
