"""Figure rendering for the interferometer simulator's CSV/PGM outputs."""

from .plotspec import KINDS, PlotSpec, load_plotspec
from .readers import read_csv, read_pgm, read_sidecar
from .render import render

__version__ = "0.1.0"

__all__ = ["KINDS", "PlotSpec", "load_plotspec", "read_csv", "read_pgm", "read_sidecar", "render"]
