"""Figure rendering for bandit-nav experiment CSVs."""

from .render import PLOT_KINDS, PlotSpec, edge_visit_counts, render, visit_shades

__version__ = "0.1.0"
