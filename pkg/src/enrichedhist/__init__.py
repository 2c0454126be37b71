"""Enriched quadratic histopolation on simplices with weighted moments."""

from .geometry import Simplex, AffineMap, GeometryError, reference_simplex, affine_map_between
from .barypoly import BaryPoly
from .moments import WeightSpec, WeightKind, IntegrabilityError
from .bases import BasisBundle, ConstructionError, make_bundle
from .momentsystem import MomentSystem, StabilityReport, UnisolvenceError, assemble, stability, unisolvence

__version__ = "0.1.0"
