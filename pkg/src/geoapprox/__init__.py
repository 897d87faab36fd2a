"""Geometric approximation in total variation via discrete equilibrium couplings."""

from .pmf import (
    DistanceTriple,
    Pmf,
    bernoulli,
    condition_positive,
    convolve,
    distances,
    geometric,
    mixture,
    moment,
    normalize,
    point_mass,
    uniform,
    yule_simon,
)
from .transforms import (
    equilibrium_nonneg,
    equilibrium_pos,
    mattner_bound,
    shift_overlap_u,
    size_bias,
    smoothness,
)

__version__ = "0.1.0"
