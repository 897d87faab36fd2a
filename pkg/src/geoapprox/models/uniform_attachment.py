"""In-degree of a uniformly chosen vertex in the uniform attachment tree.

Vertex ``m`` attaches to one of ``1..m`` uniformly (itself included), so the
vertex born at time ``n - N + 1`` collects ``X_i ~ Bern(1 / (n - i + 1))`` for
``i = 1..N``, with ``N`` uniform on ``1..n``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..bounds import BoundReport, eq12_rhs
from ..pmf import Pmf, distances, geometric, mixture

__all__ = ["ua_degree_dist", "ua_equilibrium_mixture", "ua_experiment", "ua_partial_sums"]


def ua_partial_sums(n: int) -> list[np.ndarray]:
    """Laws of ``S_m = X_1 + ... + X_m`` for ``m = 0..n`` as dense arrays on ``0..m``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    laws = [np.array([1.0])]
    for i in range(1, n + 1):
        r = 1.0 / (n - i + 1)
        prev = laws[-1]
        nxt = np.zeros(len(prev) + 1)
        nxt[:-1] += (1.0 - r) * prev
        nxt[1:] += r * prev
        laws.append(nxt)
    return laws


def ua_degree_dist(n: int) -> Pmf:
    """Exact law of the in-degree ``W = S_N``."""
    sums = ua_partial_sums(n)
    return mixture(np.full(n, 1.0 / n), [Pmf(0, s) for s in sums[1:]])


def ua_equilibrium_mixture(n: int) -> Pmf:
    """Law of ``S_{N'}`` with ``N' = N`` for ``N < n`` and ``N' = 0`` otherwise.

    This realises ``W^e0`` on the same space as ``W`` with the two differing
    only when ``N = n``.
    """
    sums = ua_partial_sums(n)
    return mixture(np.full(n, 1.0 / n), [Pmf(0, s) for s in sums[:-1]])


def ua_experiment(n_grid: Sequence[int], eps: float = 1e-12) -> list[BoundReport]:
    """Exact tv against ``Ge0(1/2)`` checked against ``1/n`` (hard).

    Each row also records the coupling bound ``2 (1 - p) P(W != W^e0)`` with
    ``P(W != W^e0) <= P(N = n) = 1/n``.
    """
    target = geometric(0.5, 0, eps)
    reports = []
    for n in n_grid:
        law = ua_degree_dist(n)
        dist = distances(law, target)
        params = {"n": n, "mean": law.mean, "coupling_rhs": eq12_rhs(0.5, 1.0 / n)}
        reports.append(BoundReport("ua-indegree", params, "tv", dist.tv,
                                   dist.truncation_slack, 1.0 / n, hard=True))
    return reports
