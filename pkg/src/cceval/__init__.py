"""Colour constancy evaluation toolkit.

Classical illuminant estimation, CIELAB/CIEDE2000 colour math, the
competitor-axis match procedure and Colour Constancy Index, a perceptual
colour loss, human-agreement statistics, synthetic Mondrian scenes, and a
manifest-driven evaluation harness.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
