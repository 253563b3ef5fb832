"""Densest sum-free subsets of the lattice cube: thresholds, extremal sets, couplings and certificates."""

from __future__ import annotations

__version__ = "0.1.0"

from .lattice import LatticeSet, build_optimal_set, is_sum_free
from .slicevol import optimal_threshold, slab_volume

__all__ = ["LatticeSet", "build_optimal_set", "is_sum_free", "optimal_threshold", "slab_volume", "__version__"]
