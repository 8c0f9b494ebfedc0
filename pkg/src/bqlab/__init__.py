"""Numerical laboratory for bilinear L^p bounds of quasimodes at two scales."""

from .exponents import ExponentPair, bilinear_G, same_scale_F, sogge_delta

__version__ = "0.1.0"
