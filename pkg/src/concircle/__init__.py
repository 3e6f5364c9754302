"""Concircular curvature diagnostics on pseudo-Riemannian charts."""

from .errors import (ArgumentError, ConcircleError, DegenerateMetricError, DomainError,
                     JetOrderError, ManifestError, ParseError, UnsupportedDimensionError)
from .jets import Jet3, jet_arith, jet_elementary, jet_extract, jet_seed
from .dsl import eval_expr, parse_expr, to_source
from .manifest import Manifest, Structure, load_manifest
from .curvature import PointFrame, build_frame

__all__ = [
    "ArgumentError", "ConcircleError", "DegenerateMetricError", "DomainError", "JetOrderError",
    "ManifestError", "ParseError", "UnsupportedDimensionError", "Jet3", "jet_arith",
    "jet_elementary", "jet_extract", "jet_seed", "eval_expr", "parse_expr", "to_source",
    "Manifest", "Structure", "load_manifest", "PointFrame", "build_frame",
]
