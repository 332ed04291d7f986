"""Sampling and reconstruction laboratory on hyperbolic balls."""
from __future__ import annotations

from .geometry import complex_ball, poincare_disk, real_ball

__all__ = ["poincare_disk", "complex_ball", "real_ball"]
__version__ = "0.1.0"
