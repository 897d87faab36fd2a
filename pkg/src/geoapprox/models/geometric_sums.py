"""Sums of a geometric number of independent integer summands.

``start=1``: ``N ~ Ge(a)`` on ``1, 2, ...`` and positive summands, compared
with ``Ge(a / mu)``.  ``start=0``: ``M ~ Ge0(a)`` and non-negative summands,
compared with ``Ge0(a / (a + mu (1 - a))``.  Summand ``i`` has law
``laws[(i - 1) % len(laws)]``; all laws must share the mean ``mu``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..bounds import (BoundReport, SampleBatch, gsum_bounds, gsum_parameter,
                      thm1_rhs, thm2_rhs)
from ..errors import InvalidDistribution, TruncationError
from ..pmf import DEFAULT_EPS, Pmf, convolve, distances, geometric, moment
from ..rng import SeededRng
from ..transforms import equilibrium_nonneg, equilibrium_pos, shift_overlap_u

__all__ = [
    "common_mean",
    "gsum_coupling_expectation",
    "gsum_coupling_sampler",
    "gsum_exact",
    "gsum_experiment",
    "gsum_grid_point",
    "shard_sizes",
]


def _as_laws(X) -> list[Pmf]:
    laws = [X] if isinstance(X, Pmf) else list(X)
    if not laws:
        raise InvalidDistribution("need at least one summand law")
    return laws


def common_mean(laws: Sequence[Pmf], tol: float = 1e-9) -> float:
    means = [law.mean for law in laws]
    if max(means) - min(means) > tol:
        raise InvalidDistribution(f"summand means differ: {means}")
    return means[0]


def _check_support(laws: Sequence[Pmf], start: int) -> None:
    if start not in (0, 1):
        raise InvalidDistribution("start must be 0 or 1")
    for law in laws:
        if start == 1 and law.lo < 1:
            raise InvalidDistribution("positive geometric sums need summands >= 1")
        if start == 0 and law.lo < 0:
            raise InvalidDistribution("summands must be non-negative")


def gsum_exact(X, a: float, start: int = 1, eps: float = DEFAULT_EPS) -> Pmf:
    """Exact law of ``sum_{i <= N} X_i`` as a truncated mixture of convolutions.

    Partial sums are built incrementally.  The count is truncated once its
    tail drops below ``eps / 2``; the result's tail mass (count tail plus the
    summands' own tails) must stay within ``eps``.
    """
    laws = _as_laws(X)
    _check_support(laws, start)
    count = geometric(a, start, eps / 2)
    weights = count.window(start, count.hi)
    partial = Pmf(0, [1.0])
    n_max = count.hi
    lo_acc, acc = 0, np.zeros(1)
    for n in range(0, n_max + 1):
        if n > 0:
            partial = convolve(partial, laws[(n - 1) % len(laws)])
        if n < start:
            continue
        w = weights[n - start]
        top = partial.hi
        if top - lo_acc + 1 > len(acc):
            acc = np.concatenate([acc, np.zeros(top - lo_acc + 1 - len(acc))])
        acc[partial.lo - lo_acc : top - lo_acc + 1] += w * partial.probs
    result = Pmf(lo_acc, acc, max(0.0, 1.0 - math.fsum(acc)))
    if result.tail_mass > eps:
        raise TruncationError(
            f"tail mass {result.tail_mass:.3g} exceeds budget {eps:.3g}; "
            "use summand laws with smaller tails or a larger eps")
    return result


def _law_tables(laws: Sequence[Pmf], start: int):
    """Per-law sampling tables: values, cdf, equilibrium values/cdf, overlap."""
    tables = []
    for law in laws:
        eq = equilibrium_pos(law) if start == 1 else equilibrium_nonneg(law)
        tables.append((law.support, np.cumsum(law.probs) / law.probs.sum(),
                       eq.support, np.cumsum(eq.probs) / eq.probs.sum(),
                       shift_overlap_u(law)))
    return tables


def _draw(values: np.ndarray, cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return values[np.minimum(np.searchsorted(cdf, u, side="right"), len(values) - 1)]


def _smoothness_given_count(n_terms: np.ndarray, u_cycle: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on ``S_1`` and ``S_2`` of the sum of the first ``n_terms`` summands.

    ``S_1 = 2 d_TV(S, S + 1)`` is bounded by twice :func:`mattner_bound`;
    ``S_2`` by ``S_1(first half) * S_1(second half)`` and by ``2 S_1``.
    """
    L = len(u_cycle)
    cum = np.concatenate([[0.0], np.cumsum(u_cycle)])

    def u_sum(lo, hi):  # sum of overlaps for summand indices lo+1..hi
        def prefix(m):
            return (m // L) * cum[-1] + cum[m % L]
        return prefix(hi) - prefix(lo)

    def tv_bound(total_u):
        return np.minimum(1.0, math.sqrt(2.0 / math.pi) / np.sqrt(0.25 + total_u))

    s1 = np.minimum(2.0, 2.0 * tv_bound(u_sum(0, n_terms)))
    half = n_terms // 2
    s2_split = 4.0 * tv_bound(u_sum(0, half)) * tv_bound(u_sum(half, n_terms))
    s2 = np.minimum(np.minimum(4.0, 2.0 * s1), s2_split)
    return s1, s2


def gsum_coupling_sampler(X_laws, a: float, rng: SeededRng | np.random.Generator,
                          size: int, start: int = 1) -> SampleBatch:
    """Draw ``size`` samples of the equilibrium coupling for a geometric sum.

    ``start=1``: ``W^e = X_1 + ... + X_{N-1} + X_N^e``, so ``D = X_N - X_N^e``.
    ``start=0``: ``W^e0 = X_1 + ... + X_M + X_{M+1}^e0``, so ``D = -X_{M+1}^e0``.
    ``X_N`` and ``X_N^e`` share one uniform through their quantile functions,
    which minimises ``E|D|`` and gives ``D = 0`` for geometric summands.  The
    smoothness columns bound the conditional smoothness of the shared
    partial sum via the Mattner-Roos inequality.
    """
    laws = _as_laws(X_laws)
    _check_support(laws, start)
    common_mean(laws)
    if not 0.0 < a <= 1.0:
        raise InvalidDistribution(f"a={a} outside (0, 1]")
    gen = rng.generator if isinstance(rng, SeededRng) else rng
    tables = _law_tables(laws, start)
    L = len(laws)
    u_cycle = np.array([t[4] for t in tables])

    counts = gen.geometric(a, size=size).astype(np.int64) - (1 - start)
    # Shared partial sum X_1 + ... + X_{n_shared}.
    n_shared = counts - 1 if start == 1 else counts
    shared = np.zeros(size, dtype=np.int64)
    max_n = int(n_shared.max()) if size else 0
    for i in range(1, max_n + 1):
        active = n_shared >= i
        k = int(active.sum())
        if k == 0:
            break
        values, cdf = tables[(i - 1) % L][0], tables[(i - 1) % L][1]
        shared[active] += _draw(values, cdf, gen.random(k))

    # The summand whose equilibrium version is swapped in.
    special = n_shared  # zero-based law index of summand n_shared + 1
    x_special = np.zeros(size, dtype=np.int64)
    x_eq = np.zeros(size, dtype=np.int64)
    for j in range(L):
        mask = (special % L) == j
        k = int(mask.sum())
        if k == 0:
            continue
        values, cdf, eq_values, eq_cdf, _ = tables[j]
        u = gen.random(k)  # quantile coupling of X and X^e
        x_special[mask] = _draw(values, cdf, u)
        x_eq[mask] = _draw(eq_values, eq_cdf, u)

    if start == 1:
        w = shared + x_special
    else:
        w = shared
    w_eq = shared + x_eq
    s1, s2 = _smoothness_given_count(n_shared, u_cycle)
    return SampleBatch(w, w_eq, s1, s2, np.ones(size, dtype=bool))


def gsum_coupling_expectation(X_laws, a: float, start: int = 1, l: int = 1,
                              eps: float = 1e-14) -> float:
    """Exact ``E{|D| S_l}`` for the sampler's coupling, by summing over the count."""
    laws = _as_laws(X_laws)
    _check_support(laws, start)
    L = len(laws)
    abs_d = []
    for law in laws:
        eq = equilibrium_pos(law) if start == 1 else equilibrium_nonneg(law)
        if start == 1:
            # E|F^-1(U) - G^-1(U)| = sum_k |F(k) - G(k)| for integer laws
            lo, hi = min(law.lo, eq.lo), max(law.hi, eq.hi)
            gap = np.cumsum(law.window(lo, hi)) - np.cumsum(eq.window(lo, hi))
            abs_d.append(math.fsum(np.abs(gap)))
        else:
            abs_d.append(moment(eq, 1))
    u_cycle = np.array([shift_overlap_u(law) for law in laws])
    count = geometric(a, start, eps)
    n = count.support
    n_shared = n - 1 if start == 1 else n
    s1, s2 = _smoothness_given_count(n_shared, u_cycle)
    s = s1 if l == 1 else s2
    term = np.array([abs_d[m % L] for m in n_shared])
    return math.fsum(count.probs * s * term)


def gsum_experiment(X_laws, a_grid: Sequence[float], start: int = 1,
                    reps: int = 0, seed: int = 0, shards: int = 1,
                    eps: float = 1e-10) -> list[BoundReport]:
    """Exact distances of geometric sums against the closed-form bounds.

    Hard rows compare exact tv/local distances with ``C_l`` times the moment
    factor.  With ``reps > 0`` soft rows add the Monte Carlo coupling bound;
    grid point ``idx`` draws from ``SeededRng(seed).child(idx)``.
    """
    reports = []
    for idx, a in enumerate(a_grid):
        reports.extend(gsum_grid_point(X_laws, a, idx, start, reps, seed, shards, eps))
    return reports


def gsum_grid_point(X_laws, a: float, idx: int = 0, start: int = 1, reps: int = 0,
                    seed: int = 0, shards: int = 1, eps: float = 1e-10) -> list[BoundReport]:
    """Rows of :func:`gsum_experiment` for a single ``a``."""
    laws = _as_laws(X_laws)
    _check_support(laws, start)
    mu = common_mean(laws)
    mu2 = max(moment(law, 2) for law in laws)
    u = min(shift_overlap_u(law) for law in laws)
    positive = start == 1
    p = gsum_parameter(a, mu, positive)
    law_w = gsum_exact(laws, a, start, eps)
    dist = distances(law_w, geometric(p, start, eps))
    rhs_tv, rhs_loc = gsum_bounds(a, u, mu, mu2, positive)
    params = {"a": a, "p": p, "mu": mu, "mu2": mu2, "u": u, "start": start}
    tag = "gsum-pos" if positive else "gsum-nonneg"
    reports = [
        BoundReport(f"{tag}-tv", dict(params), "tv", dist.tv,
                    dist.truncation_slack, rhs_tv, hard=True),
        BoundReport(f"{tag}-local", dict(params), "local", dist.local,
                    2 * dist.truncation_slack, rhs_loc, hard=True),
    ]
    if reps > 0:
        rng = SeededRng(seed).child(idx)
        batch = SampleBatch.concat([
            gsum_coupling_sampler(laws, a, r, n, start)
            for r, n in zip(rng.split(shards), shard_sizes(reps, shards))])
        for l, metric, lhs in ((1, "tv", dist.tv), (2, "local", dist.local)):
            est = thm1_rhs(batch, l) if positive else thm2_rhs(batch, l, p)
            mc_tag = f"{tag}-coupling-l{l}"
            reports.append(BoundReport(mc_tag, dict(params, reps=reps), metric, lhs,
                                       dist.truncation_slack, est.value, est.std_error))
    return reports


def shard_sizes(reps: int, shards: int) -> list[int]:
    base, extra = divmod(reps, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]
