"""Time-tag file formats."""
