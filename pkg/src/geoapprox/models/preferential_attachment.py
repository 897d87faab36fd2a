"""Degree of a fixed or uniformly chosen vertex under preferential attachment.

Vertex ``m`` arrives with one edge and attaches to vertex ``i < m`` with
probability ``W_{m-1,i} / (2m - 1)`` and to itself with probability
``1 / (2m - 1)``.  A loop adds two to the degree of its vertex, so
``W_{i,i} = 1 + Bern(1/(2i-1))`` and, for ``j > i``,
``W_{j,i} = W_{j-1,i} + X_{j,i}`` with ``X_{j,i} ~ Bern(W_{j-1,i} / (2j-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from ..bounds import BoundReport
from ..errors import GeoApproxError
from ..pmf import Pmf, distances, geometric, mixture, yule_simon
from ..rng import SeededRng

__all__ = [
    "PaCouplingBatch",
    "pa_coupling_sampler",
    "pa_degree_dist",
    "pa_degree_dists",
    "pa_fixed_vertex_experiment",
    "pa_k_law",
    "pa_mean",
    "pa_mixture_experiment",
    "yule_mixture_check",
]


def _check(n: int, i: int) -> None:
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")


def _chain(n: int, i: int) -> np.ndarray:
    """Dense law of ``W_{n,i}`` on ``0..n-i+2`` (entry 0 is always zero)."""
    r = 1.0 / (2 * i - 1)
    w = np.zeros(n - i + 3)
    w[1], w[2] = 1.0 - r, r
    deg = np.arange(len(w), dtype=np.float64)
    for j in range(i + 1, n + 1):
        move = w * (deg / (2 * j - 1))
        w = w - move
        w[1:] += move[:-1]
    return w


def pa_degree_dist(n: int, i: int) -> Pmf:
    """Exact law of the total degree ``W_{n,i}`` by dynamic programming."""
    _check(n, i)
    return Pmf(0, _chain(n, i))


def pa_degree_dists(n: int) -> list[Pmf]:
    """``[pa_degree_dist(n, i) for i in 1..n]``, advanced jointly.

    All vertices share the step ``j`` transition, so one dense matrix with a
    row per vertex is pushed through ``j = 2..n``; row ``i`` joins at ``j = i``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    width = n + 2
    mat = np.zeros((n, width))
    deg = np.arange(width, dtype=np.float64)
    for j in range(1, n + 1):
        if j > 1:
            move = mat[: j - 1] * (deg / (2 * j - 1))
            mat[: j - 1] -= move
            mat[: j - 1, 1:] += move[:, :-1]
        r = 1.0 / (2 * j - 1)
        mat[j - 1, 1], mat[j - 1, 2] = 1.0 - r, r
    return [Pmf(0, row) for row in mat]


def pa_mean(n: int, i: int) -> float:
    """``E W_{n,i} = prod_{j=i}^n 2j / (2j - 1)``."""
    _check(n, i)
    j = np.arange(i, n + 1, dtype=np.float64)
    return float(np.exp(np.sum(np.log(2 * j) - np.log(2 * j - 1))))


def _mean_path(n: int, i: int) -> np.ndarray:
    """``E W_{j,i}`` for ``j = i-1..n`` with ``W_{i-1,i} = 1``."""
    j = np.arange(i, n + 1, dtype=np.float64)
    return np.concatenate([[1.0], np.cumprod(2 * j / (2 * j - 1))])


def pa_k_law(n: int, i: int) -> Pmf:
    """``P(K = k) = E X_{k,i} / (E W_{n,i} - 1)`` on ``k = i..n``.

    ``E X_{i,i} = 1 / (2i - 1)`` and ``E X_{k,i} = E W_{k-1,i} / (2k - 1)``.
    """
    _check(n, i)
    path = _mean_path(n, i)
    k = np.arange(i, n + 1, dtype=np.float64)
    incr = path[:-1] / (2 * k - 1)  # E W_{i-1,i} = 1 gives the loop atom
    return Pmf(i, incr / incr.sum())


@dataclass(frozen=True, eq=False)
class PaCouplingBatch:
    w_tilde: np.ndarray
    w_k: np.ndarray
    k: np.ndarray

    @property
    def neq(self) -> np.ndarray:
        return self.w_tilde != self.w_k

    def __len__(self) -> int:
        return len(self.k)


def pa_coupling_sampler(n: int, i: int, rng: SeededRng | np.random.Generator,
                        size: int = 1) -> PaCouplingBatch:
    """Shared-uniform coupling of ``W_{n,i}`` with its equilibrium version.

    ``W~`` runs the ordinary chain.  ``W^k`` is the degree of ``i`` in the
    graph conditioned on vertex ``k`` attaching to ``i``, with that edge moved
    to a phantom vertex that competes for later edges: before ``k`` vertex
    ``i`` gains an edge when ``U_j < W^k_{j-1} / (2j)`` (with
    ``W^k_{i-1} = 1``), at ``k`` it gains nothing, and afterwards when
    ``U_j < W^k_{j-1} / (2j - 1)``.  With ``K`` drawn from :func:`pa_k_law`,
    ``W^K - 1`` has the equilibrium law of ``W - 1``.
    """
    _check(n, i)
    gen = rng.generator if isinstance(rng, SeededRng) else rng
    k_law = pa_k_law(n, i)
    k = k_law.support[np.minimum(
        np.searchsorted(np.cumsum(k_law.probs), gen.random(size), side="right"),
        len(k_law.probs) - 1)]
    w_tilde = np.ones(size, dtype=np.int64)
    w_k = np.ones(size, dtype=np.int64)
    for j in range(i, n + 1):
        u = gen.random(size)
        if j == i:
            w_tilde += u < 1.0 / (2 * i - 1)
        else:
            w_tilde += u < w_tilde / (2 * j - 1)
        before = j < k
        step = np.where(before, u < w_k / (2 * j),
                        (j > k) & (u < w_k / (2 * j - 1)))
        w_k += step
    return PaCouplingBatch(w_tilde, w_k, k)


def pa_fixed_vertex_experiment(n: int, i_grid: Sequence[int]) -> list[BoundReport]:
    """Exact ``d_TV(W_{n,i}, Ge(1 / E W_{n,i}))`` with ``i * tv`` as the constant."""
    reports = []
    for i in i_grid:
        law = pa_degree_dist(n, i)
        mean = pa_mean(n, i)
        dist = distances(law, geometric(1.0 / mean, 1))
        reports.append(BoundReport(
            "pa-fixed", {"n": n, "i": i, "mean": mean, "dp_mean": law.mean},
            "tv", dist.tv, dist.truncation_slack, math.nan, 0.0, i * dist.tv))
    return reports


def pa_mixture(n: int) -> Pmf:
    """Law of ``W_{n,I}`` with ``I`` uniform on ``1..n``."""
    return mixture(np.full(n, 1.0 / n), pa_degree_dists(n))


def pa_mixture_experiment(n_grid: Sequence[int], eps: float = 1e-10) -> list[BoundReport]:
    """Exact ``d_TV(W_{n,I}, YuleSimon)`` with ``n tv / log n`` as the constant.

    Each row also carries the averaged fixed-vertex distance, which must
    dominate the mixture distance.
    """
    target = yule_simon(eps=eps)
    reports = []
    for n in n_grid:
        laws = pa_degree_dists(n)
        mix = mixture(np.full(n, 1.0 / n), laws)
        dist = distances(mix, target)
        avg = math.fsum(distances(law, target).tv for law in laws) / n
        c = n * dist.tv / math.log(n) if n > 1 else math.nan
        reports.append(BoundReport(
            "pa-uniform", {"n": n, "mean_fixed_tv": avg, "p1": mix(1)},
            "tv", dist.tv, dist.truncation_slack, math.nan, 0.0, c))
    return reports


def yule_mixture_check(K: int = 100, quadrature_tol: float = 1e-12) -> float:
    """Max over ``k <= K`` of ``|int_0^1 (1 - sqrt u)^(k-1) sqrt u du - 4/(k(k+1)(k+2))|``.

    The integrand is the ``Ge(sqrt U)`` mass at ``k`` averaged over ``U``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    worst = 0.0
    for k in range(1, K + 1):
        val, err = integrate.quad(lambda u: (1.0 - math.sqrt(u)) ** (k - 1) * math.sqrt(u),
                                  0.0, 1.0, epsabs=quadrature_tol, epsrel=quadrature_tol,
                                  limit=200)
        if err > max(1e-8, 100 * quadrature_tol):
            raise GeoApproxError(f"quadrature did not converge at k={k} (error {err:.3g})")
        worst = max(worst, abs(val - 4.0 / (k * (k + 1) * (k + 2))))
    return worst
