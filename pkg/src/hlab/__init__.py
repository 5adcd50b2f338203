"""Numerical laboratory for Hausdorff-dimension distortion under Sobolev and
Bessel-potential maps: exponent formulas, dyadic covers and Frostman
measures, potential operators, and a lacunary-series counterexample.
"""
__version__ = "0.1.0"

from .errors import DomainError, NumericalError, PrecisionError, PreconditionError, RegimeError  # noqa: E402,F401
