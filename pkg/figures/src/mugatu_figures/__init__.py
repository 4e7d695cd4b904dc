"""Figure rendering for walker experiment outputs.

Consumes the experiment harness CSV contracts (trial telemetry, speed-sweep
and turn-sweep aggregates, yaw midline series) and renders matplotlib
figures. Files store SI units; conversion to cm/s and degrees happens only
at render time.
"""
from .figures import FIGURE_IDS, FigureSpec, MissingColumnError, render

__version__ = "0.1.0"

__all__ = ["FIGURE_IDS", "FigureSpec", "MissingColumnError", "render",
           "__version__"]
