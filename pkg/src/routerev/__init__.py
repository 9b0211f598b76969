"""Route-reversal benchmark toolkit.

Turn-by-turn instruction language, a dead-reckoning path builder, route
similarity metrics, dataset generation on road graphs, and an evaluation
harness for model-written return directions.
"""

from .geo import GeoPoint, Polyline
from .graph import RoadGraph, build_grid, load_graph
from .instructions import parse_instructions, render_instructions
from .metrics import similarity
from .pathbuilder import build

__version__ = "0.1.0"

__all__ = [
    "GeoPoint", "Polyline", "RoadGraph", "__version__", "build", "build_grid", "load_graph",
    "parse_instructions", "render_instructions", "similarity",
]
