"""Helpers shared by the demo scripts: output folder and optional plotting."""
from pathlib import Path

OUT = Path(__file__).with_name("output")


def output_dir() -> Path:
    OUT.mkdir(exist_ok=True)
    return OUT


def pyplot():
    """Return matplotlib.pyplot with a file backend, or None when matplotlib is absent."""
    try:
        import matplotlib
    except ImportError:
        print("(matplotlib not installed; skipping plots)")
        return None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt
