#!/usr/bin/env python
"""
hbtsim - Entry point script.

This script provides a convenient way to run the toolkit from the project root.

Usage:
    python run_hbtsim.py simulate --config run.cfg --out clicks.ttg2
    python run_hbtsim.py analyze --config run.cfg clicks.ttg2
    python run_hbtsim.py sweep --config sweep.cfg --out sweep.csv
    python run_hbtsim.py --help
"""

from hbtsim.main import run_cli

if __name__ == "__main__":
    run_cli()
