"""Size-bias and discrete equilibrium transforms, and smoothness functionals.

The equilibrium laws are defined through test functions,

    E f(W) - f(0) = E W * E[f(W^e) - f(W^e - 1)]          (W > 0)
    E f(W) - f(0) = E W * E[f(W^e0 + 1) - f(W^e0)]        (W >= 0, P(W=0) > 0)

and summation by parts turns them into ``P(W^e = k) = P(W >= k) / E W`` for
``k >= 1`` and ``P(W^e0 = k) = P(W >= k + 1) / E W`` for ``k >= 0``.  Both are
also obtained by drawing the size-biased value ``s`` and then a uniform point
of ``{1..s}`` (resp. ``{0..s-1}``); :func:`equilibrium_via_size_bias` builds
the laws that way so the two routes can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidDistribution
from .pmf import Pmf

__all__ = [
    "SmoothnessValue",
    "equilibrium",
    "equilibrium_nonneg",
    "equilibrium_pos",
    "equilibrium_via_size_bias",
    "mattner_bound",
    "shift_overlap_u",
    "size_bias",
    "smoothness",
]


@dataclass(frozen=True)
class SmoothnessValue:
    """First and second order smoothness of a law.

    ``s1 = sup |E Δg(W)|`` and ``s2 = sup |E Δ²g(W)|`` over ``|g| <= 1``;
    ``s1`` equals ``2 d_TV(W + 1, W)``.
    """

    s1: float
    s2: float


def _with_tail(offset: int, values: np.ndarray) -> Pmf:
    return Pmf(offset, values, max(0.0, 1.0 - math.fsum(values)))


def size_bias(P: Pmf) -> Pmf:
    """``P^s(k) = k P(k) / E W`` for a law on the non-negative integers."""
    if P.lo < 0:
        raise InvalidDistribution("size bias needs non-negative support")
    mean = P.mean
    if mean <= 0:
        raise InvalidDistribution("size bias of a zero-mean law")
    return _with_tail(P.lo, P.support * P.probs / mean)


def equilibrium_pos(P: Pmf) -> Pmf:
    """Discrete equilibrium law of a positive integer variable.

    If ``P`` carries tail mass the window is extended by one point, which
    holds ``P(W > hi) / E W``.
    """
    if P.lo < 1:
        raise InvalidDistribution("equilibrium_pos needs support in 1, 2, ...")
    mean = P.mean
    hi = P.hi + (1 if P.tail_mass > 0 else 0)
    surv = np.empty(hi)
    surv[: P.lo - 1] = 1.0
    surv[P.lo - 1 : P.hi] = P.survival()
    if hi > P.hi:
        surv[-1] = P.tail_mass
    return _with_tail(1, surv / mean)


def equilibrium_nonneg(P: Pmf) -> Pmf:
    """Discrete equilibrium law (started at 0) of a variable with ``P(0) > 0``."""
    if P.lo != 0:
        raise InvalidDistribution(
            "equilibrium_nonneg needs P(0) > 0 and no negative support; "
            "use equilibrium_pos for positive laws")
    mean = P.mean
    if mean <= 0:
        raise InvalidDistribution("equilibrium of a point mass at 0")
    # P(W >= k + 1) for k = 0..hi; the last entry is the tail alone.
    surv = np.append(P.survival()[1:], P.tail_mass)
    return _with_tail(0, surv / mean)


def equilibrium(P: Pmf) -> Pmf:
    """Dispatch on the support: positive laws get ``W^e``, others ``W^e0``."""
    return equilibrium_pos(P) if P.lo >= 1 else equilibrium_nonneg(P)


def equilibrium_via_size_bias(P: Pmf, start: int = 1) -> Pmf:
    """Equilibrium law as a uniform point below a size-biased draw.

    ``start=1`` mixes ``uniform{1..s}``, ``start=0`` mixes ``uniform{0..s-1}``
    over ``s ~ size_bias(P)``.
    """
    if start not in (0, 1):
        raise InvalidDistribution("start must be 0 or 1")
    if start == 1 and P.lo < 1:
        raise InvalidDistribution("positive route needs support in 1, 2, ...")
    if start == 0 and P.lo != 0:
        raise InvalidDistribution("non-negative route needs P(0) > 0")
    sb = size_bias(P)
    acc = np.zeros(sb.hi)
    for s, w in zip(sb.support, sb.probs):
        acc[:s] += w / s
    return Pmf(start, acc, sb.tail_mass)


def smoothness(P: Pmf) -> SmoothnessValue:
    """Total variation of the first and second difference sequences of ``P``."""
    padded = np.concatenate(([0.0, 0.0], P.probs, [0.0, 0.0]))
    s1 = math.fsum(np.abs(np.diff(padded)))
    s2 = math.fsum(np.abs(np.diff(padded, n=2)))
    return SmoothnessValue(min(s1, 2.0), min(s2, 4.0))


def shift_overlap_u(P: Pmf) -> float:
    """``1 - d_TV(P, P shifted by one)``."""
    return min(1.0, max(0.0, 1.0 - 0.5 * smoothness(P).s1))


def mattner_bound(u_values: Sequence[float]) -> float:
    """Upper bound on ``d_TV(S, S + 1)`` for a sum of independent integer variables.

    ``u_values`` are the per-summand overlaps from :func:`shift_overlap_u`;
    the result is ``min(1, sqrt(2/pi) / sqrt(1/4 + sum(u)))``.
    """
    u = np.asarray(u_values, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("overlap values must lie in [0, 1]")
    return min(1.0, math.sqrt(2.0 / math.pi) / math.sqrt(0.25 + math.fsum(u)))
