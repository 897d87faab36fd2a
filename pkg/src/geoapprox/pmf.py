"""Finite-window probability mass functions on the integers.

A :class:`Pmf` stores the probabilities of consecutive integers starting at
``offset`` together with ``tail_mass``, the probability that was deliberately
left out of the window because the law has unbounded support.  Every
operation in this module propagates that unallocated mass conservatively so
that distances can be reported as a value plus a worst-case slack.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import signal

from .errors import InvalidDistribution, SupportCapError, TruncationError

__all__ = [
    "DEFAULT_EPS",
    "MASS_TOL",
    "SUPPORT_CAP",
    "DistanceTriple",
    "Pmf",
    "bernoulli",
    "condition_positive",
    "convolve",
    "distances",
    "from_samples",
    "geometric",
    "mixture",
    "moment",
    "moment_tail_bound",
    "normalize",
    "point_mass",
    "truncate_above",
    "tv",
    "uniform",
    "yule_simon",
]

DEFAULT_EPS = 1e-12
MASS_TOL = 1e-12
SUPPORT_CAP = 10**6

# np.convolve is exact to rounding; above this many multiply-adds switch to FFT.
_DIRECT_CONV_WORK = 50_000_000


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function on ``offset, offset + 1, ...``.

    ``probs`` is copied, trimmed of zero margins and made read-only, so the
    first and last stored entries are always positive.  ``tail_mass`` is
    mass not represented in the window; by convention it sits above the
    window.
    """

    offset: int
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64).ravel()
        tail = float(self.tail_mass)
        if probs.size == 0:
            raise InvalidDistribution("empty probability vector")
        if not np.all(np.isfinite(probs)) or not math.isfinite(tail):
            raise InvalidDistribution("non-finite probability")
        if np.any(probs < 0) or tail < 0:
            raise InvalidDistribution("negative probability")
        nonzero = np.flatnonzero(probs)
        if nonzero.size == 0:
            raise InvalidDistribution("no mass inside the window")
        first, last = int(nonzero[0]), int(nonzero[-1])
        probs = probs[first : last + 1].copy()
        total = math.fsum(probs) + tail
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidDistribution(f"total mass {total!r} differs from 1")
        probs.setflags(write=False)
        object.__setattr__(self, "offset", int(self.offset) + first)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail)

    # -- basic accessors ---------------------------------------------------

    @property
    def lo(self) -> int:
        """Smallest support point."""
        return self.offset

    @property
    def hi(self) -> int:
        """Largest point of the stored window."""
        return self.offset + len(self.probs) - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def is_exact(self) -> bool:
        return self.tail_mass == 0.0

    def __len__(self) -> int:
        return len(self.probs)

    def __call__(self, k):
        """Probability of ``k`` (scalar or array); zero outside the window."""
        k_arr = np.asarray(k)
        idx = k_arr - self.offset
        inside = (idx >= 0) & (idx < len(self.probs))
        out = np.where(inside, self.probs[np.clip(idx, 0, len(self.probs) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Probabilities on ``lo..hi`` inclusive, zero-padded as needed."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.lo : b - self.lo + 1]
        return out

    def survival(self) -> np.ndarray:
        """``P(X >= k)`` for ``k`` in the window, counting the tail mass."""
        return np.cumsum(self.probs[::-1])[::-1] + self.tail_mass

    def shift(self, k: int) -> "Pmf":
        """Law of ``X + k``."""
        return Pmf(self.offset + k, self.probs, self.tail_mass)

    @property
    def mean(self) -> float:
        """First moment; any tail mass is extrapolated with geometric decay.

        This is exact for geometric tails and is what the transforms use as
        the normalizing constant.
        """
        return moment(self, 1) + moment_tail_bound(self, 1)

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.support, self.probs)}

    def __repr__(self) -> str:
        head = ", ".join(f"{k}: {p:.6g}" for k, p in list(self.as_dict().items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"Pmf({{{head}{more}}}, tail_mass={self.tail_mass:.3g})"

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"offset": self.offset, "probs": [float(p) for p in self.probs],
                "tail_mass": self.tail_mass}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Pmf":
        try:
            return cls(int(obj["offset"]), obj["probs"], float(obj.get("tail_mass", 0.0)))
        except (KeyError, TypeError) as exc:
            raise InvalidDistribution(f"malformed pmf object: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Pmf":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Two-column ``k,p`` table with a header row."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["k", "p"])
        for k, p in zip(self.support, self.probs):
            writer.writerow([int(k), repr(float(p))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Pmf":
        """Inverse of :meth:`to_csv`; missing mass becomes tail mass."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["k", "p"]:
            raise InvalidDistribution("CSV must start with a 'k,p' header")
        table = {}
        for row in rows[1:]:
            if not row:
                continue
            k, p = int(row[0]), float(row[1])
            table[k] = table.get(k, 0.0) + p
        if not table:
            raise InvalidDistribution("CSV has no rows")
        lo, hi = min(table), max(table)
        probs = np.zeros(hi - lo + 1)
        for k, p in table.items():
            probs[k - lo] = p
        tail = 1.0 - math.fsum(probs)
        return cls(lo, probs, max(tail, 0.0))


@dataclass(frozen=True)
class DistanceTriple:
    """Distances between two pmfs computed on the union of their windows.

    Each reported value is within ``truncation_slack`` of the distance
    between the full laws for ``tv``; ``kolmogorov`` and ``local`` are within
    twice that.
    """

    tv: float
    kolmogorov: float
    local: float
    truncation_slack: float

    @property
    def tv_interval(self) -> tuple[float, float]:
        return (max(0.0, self.tv - self.truncation_slack),
                min(1.0, self.tv + self.truncation_slack))


# -- constructors ---------------------------------------------------------


def normalize(raw: Sequence[float], offset: int = 0) -> Pmf:
    """Scale non-negative weights on ``offset, offset+1, ...`` to sum to one."""
    arr = np.asarray(raw, dtype=np.float64)
    if arr.size == 0 or np.any(arr < 0):
        raise InvalidDistribution("weights must be non-negative")
    total = math.fsum(arr)
    if total <= 0:
        raise InvalidDistribution("weights are all zero")
    return Pmf(offset, arr / total)


def point_mass(m: int) -> Pmf:
    return Pmf(m, [1.0])


def bernoulli(mu: float) -> Pmf:
    if not 0.0 <= mu <= 1.0:
        raise InvalidDistribution(f"Bernoulli parameter {mu} outside [0, 1]")
    return Pmf(0, [1.0 - mu, mu])


def uniform(lo: int, hi: int) -> Pmf:
    """Uniform law on the integers ``lo..hi``."""
    if hi < lo:
        raise InvalidDistribution("empty range")
    n = hi - lo + 1
    return Pmf(lo, np.full(n, 1.0 / n))


def geometric(p: float, start: int = 1, eps: float = DEFAULT_EPS) -> Pmf:
    """Geometric law with success probability ``p`` on ``start, start+1, ...``.

    ``start=1`` counts trials up to the first success, ``start=0`` counts
    failures.  The window stops once the remaining tail drops below ``eps``.
    """
    if not 0.0 < p <= 1.0:
        raise InvalidDistribution(f"geometric parameter {p} outside (0, 1]")
    if start not in (0, 1):
        raise InvalidDistribution("start must be 0 or 1")
    if p == 1.0:
        return point_mass(start)
    q = 1.0 - p
    n = max(1, math.ceil(math.log(eps) / math.log(q)))
    if n > SUPPORT_CAP:
        raise SupportCapError(f"geometric({p}) needs {n} points for eps={eps}")
    powers = np.power(q, np.arange(n + 1, dtype=np.float64))
    return Pmf(start, p * powers[:-1], float(powers[-1]))


def yule_simon(K: int | None = None, eps: float = 1e-10) -> Pmf:
    """Yule-Simon law ``4 / (k (k+1) (k+2))`` on ``1..K`` plus its exact tail.

    The tail beyond ``K`` telescopes to ``2 / ((K+1)(K+2))``.  If ``K`` is
    omitted it is the smallest window whose tail is at most ``eps``.
    """
    if K is None:
        K = max(1, math.ceil(math.sqrt(2.0 / eps) - 1.5))
        while 2.0 / ((K + 1) * (K + 2)) > eps:
            K += 1
    if K < 1:
        raise InvalidDistribution("K must be at least 1")
    if K > SUPPORT_CAP:
        raise SupportCapError(f"Yule-Simon window {K} exceeds cap")
    k = np.arange(1, K + 1, dtype=np.float64)
    probs = 4.0 / (k * (k + 1.0) * (k + 2.0))
    return Pmf(1, probs, 2.0 / ((K + 1.0) * (K + 2.0)))


# -- arithmetic -------------------------------------------------------------


def convolve(P: Pmf, Q: Pmf, cap: int = SUPPORT_CAP) -> Pmf:
    """Law of ``X + Y`` for independent ``X ~ P`` and ``Y ~ Q``.

    Outcomes where either summand falls in its tail are unallocated, so the
    result carries ``tP + tQ - tP tQ`` as tail mass.
    """
    size = len(P) + len(Q) - 1
    if size > cap:
        raise SupportCapError(f"convolution support {size} exceeds cap {cap}")
    if len(P) * len(Q) <= _DIRECT_CONV_WORK:
        probs = np.convolve(P.probs, Q.probs)
    else:
        probs = np.clip(signal.fftconvolve(P.probs, Q.probs), 0.0, None)
    tail = P.tail_mass + Q.tail_mass - P.tail_mass * Q.tail_mass
    return Pmf(P.offset + Q.offset, probs, tail)


def mixture(weights: Sequence[float], components: Sequence[Pmf]) -> Pmf:
    """Pointwise weighted sum of component pmfs."""
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != len(components):
        raise InvalidDistribution("weights and components differ in length")
    if len(w) == 0:
        raise InvalidDistribution("empty mixture")
    if np.any(w < 0):
        raise InvalidDistribution("negative mixture weight")
    if abs(math.fsum(w) - 1.0) > MASS_TOL:
        raise InvalidDistribution("mixture weights do not sum to 1")
    lo = min(c.lo for c in components)
    hi = max(c.hi for c in components)
    if hi - lo + 1 > SUPPORT_CAP:
        raise SupportCapError("mixture window exceeds cap")
    acc = np.zeros(hi - lo + 1)
    tail = 0.0
    for wi, c in zip(w, components):
        if wi == 0.0:
            continue
        acc[c.lo - lo : c.hi - lo + 1] += wi * c.probs
        tail += wi * c.tail_mass
    return Pmf(lo, acc, tail)


def condition_positive(P: Pmf) -> Pmf:
    """Law of ``X`` given ``X > 0``; tail mass counts as positive."""
    positive = P.window(1, P.hi) if P.hi >= 1 else np.zeros(0)
    mass = math.fsum(positive) + P.tail_mass
    if positive.size == 0 or math.fsum(positive) <= 0:
        raise InvalidDistribution("no window mass above 0")
    return Pmf(1, positive / mass, P.tail_mass / mass)


def truncate_above(P: Pmf, K: int) -> Pmf:
    """Move the mass of points above ``K`` into the tail."""
    if K >= P.hi:
        return P
    if K < P.lo:
        raise TruncationError("truncation point below the support")
    kept = P.probs[: K - P.lo + 1]
    return Pmf(P.offset, kept, max(0.0, 1.0 - math.fsum(kept)))


# -- moments ----------------------------------------------------------------


def moment(P: Pmf, r: int = 1) -> float:
    """``sum k**r P(k)`` over the stored window."""
    if r < 0:
        raise ValueError("moment order must be non-negative")
    k = P.support.astype(np.float64)
    return math.fsum(k**r * P.probs)


def _tail_ratio(P: Pmf) -> float:
    if len(P) < 2:
        raise TruncationError("cannot extrapolate a tail from a one-point window")
    rho = P.probs[-1] / P.probs[-2]
    if not rho < 1.0:
        raise TruncationError("window does not end in a decaying tail")
    return float(rho)


def moment_tail_bound(P: Pmf, r: int = 1) -> float:
    """Contribution of the tail mass to the ``r``-th moment.

    The tail is assumed to keep decaying geometrically at the ratio of the
    last two window entries, i.e. it is spread as ``tail * (1-rho) rho**(j-1)``
    over ``hi + j``.  Raises :class:`TruncationError` when no decay is visible.
    """
    t = P.tail_mass
    if t == 0.0:
        return 0.0
    rho = _tail_ratio(P)
    if r == 0:
        return t
    if r == 1:
        return t * (P.hi + 1.0 / (1.0 - rho))
    n_terms = math.ceil(math.log(1e-18) / math.log(rho)) if rho > 0 else 1
    if n_terms > 10**7:
        raise TruncationError("tail decays too slowly to bound the moment")
    j = np.arange(1, n_terms + 1, dtype=np.float64)
    weights = (1.0 - rho) * rho ** (j - 1)
    return t * math.fsum((P.hi + j) ** r * weights)


# -- distances ------------------------------------------------------------


def distances(P: Pmf, Q: Pmf) -> DistanceTriple:
    """Total variation, Kolmogorov and local distances between two pmfs."""
    lo, hi = min(P.lo, Q.lo), max(P.hi, Q.hi)
    diff = P.window(lo, hi) - Q.window(lo, hi)
    absdiff = np.abs(diff)
    tv = min(1.0, 0.5 * math.fsum(absdiff))
    kol = min(1.0, float(np.max(np.abs(np.cumsum(diff)))))
    local = min(1.0, float(np.max(absdiff)))
    return DistanceTriple(tv, kol, local, 0.5 * (P.tail_mass + Q.tail_mass))


def tv(P: Pmf, Q: Pmf) -> float:
    """Shorthand for ``distances(P, Q).tv``."""
    return distances(P, Q).tv


def from_samples(values: Iterable[int]) -> Pmf:
    """Empirical pmf of integer samples."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.size == 0:
        raise InvalidDistribution("no samples")
    arr = arr.astype(np.int64)
    lo = int(arr.min())
    counts = np.bincount(arr - lo)
    return Pmf(lo, counts / arr.size)
