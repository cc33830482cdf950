"""netfigs: figure regeneration from balnet CSV time series."""

from .render import (EmptyFigure, FigureSpec, LineSpec, MissingColumn, build,
                     read_series, render)

__version__ = "0.1.0"
