"""hbtsim - simulation and analysis of click coherence for pulsed light."""

__version__ = "0.1.0"
