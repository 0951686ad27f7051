"""Semiclassical Monte Carlo simulator for cavity cooling of polarizable particles."""

from .params import DerivedParams, SystemParams, derive

__all__ = ["SystemParams", "DerivedParams", "derive"]
__version__ = "0.1.0"
