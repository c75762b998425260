"""Discrete harmonic measure, partition functions and extremal length on planar graphs."""

from .domain import (BoundaryArc, DiscreteDomain, Quadrilateral, arc, load_domain, make_domain,
                     save_domain)
from .generators import generate
from .graph_core import EmbeddedGraph, build_graph, load_graph, validate_assumptions

__all__ = [
    "BoundaryArc", "DiscreteDomain", "EmbeddedGraph", "Quadrilateral", "arc", "build_graph",
    "generate", "load_domain", "load_graph", "make_domain", "save_domain", "validate_assumptions",
]
