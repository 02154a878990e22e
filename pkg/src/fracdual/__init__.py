"""Dual space-time nonlocal operators: Marchaud derivatives, fractional Laplacian, verification harness."""

from .core import FractionalParams, SampledField, SpaceTimeGrid, gamma_fn, make_params

__all__ = ["FractionalParams", "SampledField", "SpaceTimeGrid", "gamma_fn", "make_params"]
