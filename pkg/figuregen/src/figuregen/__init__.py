"""Publication-style figures from pulse-cns CSV output."""

from .plots import FIGURE_KINDS, FigureError, FigureSpec, plot, read_csv_columns

__version__ = "0.1.0"
