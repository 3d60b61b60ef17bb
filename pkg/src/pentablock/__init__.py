"""Operator theory on the pentablock: membership, classification, decompositions and dilations."""

from .block_toeplitz import BlockOp
from .classify import ClassReport, PolySample, Verdict
from .linalg_core import CommutingTriple, Subspace
from .scalar_geometry import GammaPoint, Point3

__all__ = ["BlockOp", "ClassReport", "CommutingTriple", "GammaPoint", "Point3", "PolySample", "Subspace", "Verdict"]
__version__ = "0.1.0"
