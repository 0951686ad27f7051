"""Figure rendering for cavicool output tables.

This package holds no simulation logic: it reads the CSV tables and JSON
sidecars the simulator writes and renders them as images. It can be
installed and used independently of the simulator itself.
"""

from .figures import FigureSpec, render
from .tables import TableError, read_summary, read_table

__version__ = "0.1.0"

__all__ = ["FigureSpec", "render", "TableError", "read_table",
           "read_summary", "__version__"]
