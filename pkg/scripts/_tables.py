"""Shared helpers for the figure scripts: CSV loading and optional plotting."""

import csv
from pathlib import Path


def load(report_dir, name):
    path = Path(report_dir) / name
    if not path.exists():
        raise SystemExit(f"{path} not found; run scripts/run_all.py first")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        return plt
    except ImportError:
        return None


def dir_arg(default, doc):
    """First positional argument, or ``default``; ``-h`` prints ``doc``."""
    import sys

    if len(sys.argv) > 1 and sys.argv[1] in ("-h", "--help"):
        raise SystemExit(doc)
    return sys.argv[1] if len(sys.argv) > 1 else default
