"""Solutions of the geometric Stein equation.

For a set ``B`` of positive integers and ``q = 1 - p`` the function
``f = f_{B,p}`` with ``f(0) = 0`` solves

    q f(k) - f(k-1) = 1[k in B] - Ge(p){B},      k >= 1,

and is given in closed form by

    f(k) = sum_{i in B} q**(i-1) - sum_{i in B, i >= k+1} q**(i-k-1).

This module only exists to check that machinery in isolation; the bound
evaluators never call it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import BoundViolation, SupportCapError
from .pmf import DEFAULT_EPS, SUPPORT_CAP

__all__ = ["SteinSolution", "geometric_set_prob", "gradient_bounds", "solve"]


@dataclass(frozen=True, eq=False)
class SteinSolution:
    target: frozenset
    p: float
    values: np.ndarray  # f(0), f(1), ..., f(K)

    @property
    def K(self) -> int:
        return len(self.values) - 1

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def residuals(self) -> np.ndarray:
        """``q f(k) - f(k-1) - (1[k in B] - Ge(p){B})`` for ``k = 1..K``."""
        k = np.arange(1, self.K + 1)
        indicator = np.isin(k, list(self.target)).astype(np.float64)
        rhs = indicator - geometric_set_prob(self.target, self.p, start=1)
        return self.q * self.values[1:] - self.values[:-1] - rhs

    def shifted_residuals(self) -> np.ndarray:
        """``q f(k+1) - f(k) - (1[k in B-1] - Ge0(p){B-1})`` for ``k = 0..K-1``."""
        k = np.arange(0, self.K)
        shifted = {b - 1 for b in self.target}
        indicator = np.isin(k, list(shifted)).astype(np.float64)
        rhs = indicator - geometric_set_prob(shifted, self.p, start=0)
        return self.q * self.values[1:] - self.values[:-1] - rhs


def geometric_set_prob(B: Iterable[int], p: float, start: int = 1) -> float:
    """``P(Z in B)`` for ``Z`` geometric on ``start, start+1, ...``."""
    q = 1.0 - p
    return math.fsum(p * q ** (b - start) for b in B if b >= start)


def default_window(B: Iterable[int], p: float, eps: float = DEFAULT_EPS) -> int:
    top = max(B, default=0)
    if p >= 1.0:
        return top + 1
    return top + math.ceil(math.log(1.0 / eps) / -math.log1p(-p))


def solve(B: Iterable[int], p: float, K: int | None = None,
          eps: float = DEFAULT_EPS) -> SteinSolution:
    """Evaluate the closed-form solution on the window ``0..K``."""
    target = frozenset(int(b) for b in B)
    if any(b < 1 for b in target):
        raise ValueError("B must contain positive integers only")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p={p} outside (0, 1]")
    if K is None:
        K = default_window(target, p, eps)
    if K < 1:
        raise ValueError("empty working window")
    if target and K < max(target):
        raise ValueError("window must reach max(B)")
    if K > SUPPORT_CAP:
        raise SupportCapError(f"Stein window {K} exceeds cap")
    q = 1.0 - p
    b = np.array(sorted(target), dtype=np.int64)
    k = np.arange(K + 1)
    total = math.fsum(q ** (b - 1)) if b.size else 0.0
    values = np.full(K + 1, total)
    if b.size:
        # Only k < max(B) has a non-empty second sum.
        kk = k[k < b[-1]]
        expo = b[None, :] - kk[:, None] - 1
        terms = np.where(expo >= 0, np.power(q, np.maximum(expo, 0)), 0.0)
        values[: kk.size] -= terms.sum(axis=1)
    values[0] = 0.0
    return SteinSolution(target, float(p), values)


def gradient_bounds(sol: SteinSolution, tol: float = 1e-12) -> tuple[float, float | None]:
    """``sup_{k>=1} |f(k) - f(k-1)|`` and, when ``|B| <= 1``, ``sup |f|``.

    Raises :class:`BoundViolation` if either exceeds ``1 + tol``.
    """
    grad = float(np.max(np.abs(np.diff(sol.values))))
    sup_f = float(np.max(np.abs(sol.values))) if len(sol.target) <= 1 else None
    if grad > 1.0 + tol:
        raise BoundViolation(f"sup |grad f| = {grad} exceeds 1")
    if sup_f is not None and sup_f > 1.0 + tol:
        raise BoundViolation(f"sup |f| = {sup_f} exceeds 1 for singleton B")
    return grad, sup_f
