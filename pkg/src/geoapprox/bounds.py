"""Right-hand sides of the geometric approximation bounds, and their reports.

Monte Carlo evaluations return an :class:`Estimate` with a standard error and
are never asserted; evaluations from exact laws are wrapped in hard
:class:`BoundReport` rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidDistribution
from .pmf import DEFAULT_EPS, Pmf, distances, geometric
from .rng import SeededRng
from .transforms import equilibrium_nonneg, equilibrium_pos, smoothness

__all__ = [
    "BoundReport",
    "CouplingSample",
    "Estimate",
    "SampleBatch",
    "c_constants",
    "eq9_rhs",
    "eq12_rhs",
    "geo_param_tv_bound",
    "gsum_bounds",
    "gsum_parameter",
    "independent_coupling_reports",
    "random_pmf",
    "reports_to_csv",
    "reports_to_json",
    "thm1_rhs",
    "thm2_rhs",
    "validity_sweep",
]


# -- samples ----------------------------------------------------------------


@dataclass(frozen=True)
class CouplingSample:
    """One draw of ``(W, W^e)`` with the model's conditional smoothness values."""

    w: int
    w_eq: int
    d: int
    s1: float
    s2: float = 4.0
    in_A: bool = True

    def __post_init__(self):
        if self.d != self.w - self.w_eq:
            raise ValueError("d must equal w - w_eq")
        if not 0.0 <= self.s1 <= 2.0 or not 0.0 <= self.s2 <= 4.0:
            raise ValueError("smoothness values out of range")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Column-oriented block of coupling samples; what samplers emit."""

    w: np.ndarray
    w_eq: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    in_A: np.ndarray

    def __post_init__(self):
        n = len(self.w)
        if any(len(a) != n for a in (self.w_eq, self.s1, self.s2, self.in_A)):
            raise ValueError("columns differ in length")

    @property
    def d(self) -> np.ndarray:
        return self.w - self.w_eq

    def __len__(self) -> int:
        return len(self.w)

    def __iter__(self):
        for row in zip(self.w, self.w_eq, self.s1, self.s2, self.in_A):
            w, we, s1, s2, a = row
            yield CouplingSample(int(w), int(we), int(w - we), float(s1), float(s2), bool(a))

    @classmethod
    def from_samples(cls, samples: Iterable[CouplingSample]) -> "SampleBatch":
        rows = list(samples)
        return cls(
            np.array([s.w for s in rows], dtype=np.int64),
            np.array([s.w_eq for s in rows], dtype=np.int64),
            np.array([s.s1 for s in rows], dtype=np.float64),
            np.array([s.s2 for s in rows], dtype=np.float64),
            np.array([s.in_A for s in rows], dtype=bool),
        )

    @classmethod
    def concat(cls, batches: Sequence["SampleBatch"]) -> "SampleBatch":
        return cls(*(np.concatenate([getattr(b, f) for b in batches])
                     for f in ("w", "w_eq", "s1", "s2", "in_A")))


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float


def _as_batch(samples) -> SampleBatch:
    batch = samples if isinstance(samples, SampleBatch) else SampleBatch.from_samples(samples)
    if len(batch) == 0:
        raise ValueError("no samples")
    return batch


def _mean_with_error(values: np.ndarray) -> Estimate:
    n = len(values)
    mean = float(np.mean(values))
    err = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean, err)


def thm1_rhs(samples, l: int = 1) -> Estimate:
    """Sample mean of ``|D| S_l 1_A + 2 1_{A^c}`` (positive-support bound)."""
    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    b = _as_batch(samples)
    s = b.s1 if l == 1 else b.s2
    per_sample = np.where(b.in_A, np.abs(b.d) * s, 2.0)
    return _mean_with_error(per_sample)


def thm2_rhs(samples, l: int, p: float) -> Estimate:
    """``(1 - p)`` times :func:`thm1_rhs` (bound against ``Ge0(p)``)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p={p} outside (0, 1]")
    est = thm1_rhs(samples, l)
    return Estimate((1.0 - p) * est.value, (1.0 - p) * est.std_error)


# -- closed-form right-hand sides ---------------------------------------------


def eq9_rhs(p: float, mean_abs_d: float) -> float:
    """``p E|D|``: bound on ``d_TV(L(W^e), Ge(p))`` (and its ``Ge0`` analogue)."""
    if not 0.0 < p <= 1.0 or mean_abs_d < 0:
        raise ValueError("need 0 < p <= 1 and E|D| >= 0")
    return p * mean_abs_d


def eq12_rhs(p: float, prob_neq: float) -> float:
    """``2 (1 - p) P(W != W^e0)``."""
    if not 0.0 < p <= 1.0 or not 0.0 <= prob_neq <= 1.0:
        raise ValueError("inputs out of range")
    return 2.0 * (1.0 - p) * prob_neq


def c_constants(a: float, u: float) -> tuple[float, float]:
    """Constants ``(C_1, C_2)`` of the geometric-sum bounds.

    At ``a = 1`` the ``log(1 - a)`` term vanishes and ``log a = 0``, so both
    constants are 1.
    """
    if not 0.0 < a <= 1.0:
        raise ValueError(f"a={a} outside (0, 1]")
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u={u} outside (0, 1]")
    if a == 1.0:
        return 1.0, 1.0
    c1 = min(1.0, a * (1.0 + math.sqrt(-2.0 / (u * math.log1p(-a)))))
    c2 = min(1.0, a * (1.0 - 6.0 * math.log(a) / (math.pi * u)))
    return c1, c2


def gsum_parameter(a: float, mu: float, positive: bool) -> float:
    """Geometric parameter matched to a geometric sum's mean."""
    return a / mu if positive else a / (a + mu * (1.0 - a))


def gsum_bounds(a: float, u: float, mu: float, mu2: float, positive: bool,
                coupling_term: float | None = None) -> tuple[float, float]:
    """``(rhs_tv, rhs_local)`` for a geometric sum of summands with mean ``mu``.

    The factor multiplying ``C_l`` is ``mu2/2 + 1/2 + mu`` for positive
    summands and ``mu2/(2 mu) - 1/2`` for non-negative ones, unless the
    sharper ``coupling_term`` (``sup E|X - X^e|`` resp. ``sup E X^e0``) is
    supplied.  ``u = 0`` is accepted and gives the ``u -> 0`` limit
    ``C_1 = C_2 = 1``.
    """
    if mu <= 0 or mu2 < mu * mu * (1 - 1e-12):
        raise ValueError("need mu > 0 and mu2 >= mu**2")
    if positive and mu < 1:
        raise ValueError("positive summands have mean at least 1")
    if u == 0.0:
        if not 0.0 < a <= 1.0:
            raise ValueError(f"a={a} outside (0, 1]")
        c1 = c2 = 1.0
    else:
        c1, c2 = c_constants(a, u)
    if coupling_term is not None:
        factor = coupling_term
    elif positive:
        factor = mu2 / 2.0 + 0.5 + mu
    else:
        factor = max(0.0, mu2 / (2.0 * mu) - 0.5)
    return c1 * factor, c2 * factor


def geo_param_tv_bound(p: float, eps: float) -> float:
    """``eps / p`` bounds ``d_TV(Ge(p), Ge(p - eps))``."""
    if not 0.0 <= eps < p <= 1.0:
        raise ValueError("need 0 <= eps < p <= 1")
    return eps / p


# -- reports ------------------------------------------------------------------


@dataclass
class BoundReport:
    """One row comparing a computed distance with a bound."""

    theorem_tag: str
    params: dict = field(default_factory=dict)
    lhs_metric: str = "tv"
    lhs_value: float = math.nan
    slack: float = 0.0
    rhs_value: float = math.nan
    rhs_std_error: float = 0.0
    empirical_c: float = math.nan
    hard: bool = False
    tolerance: float = 0.0

    @property
    def passed(self) -> bool | None:
        """``None`` for soft rows; otherwise whether ``lhs <= rhs + slack``."""
        if not self.hard:
            return None
        return self.lhs_value <= self.rhs_value + self.slack + self.tolerance

    @property
    def status(self) -> str:
        return {None: "SOFT", True: "PASS", False: "FAIL"}[self.passed]

    def as_row(self) -> dict:
        row = {"theorem_tag": self.theorem_tag}
        row.update({k: self.params[k] for k in sorted(self.params)})
        row.update(lhs_metric=self.lhs_metric, lhs=self.lhs_value, slack=self.slack,
                   rhs=self.rhs_value, stderr=self.rhs_std_error,
                   empirical_C=self.empirical_c, status=self.status)
        return row


_FIXED_COLUMNS = ["lhs_metric", "lhs", "slack", "rhs", "stderr", "empirical_C", "status"]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    """RFC 4180 CSV with a header row; parameter columns sit after the tag."""
    param_cols = sorted({k for r in reports for k in r.params})
    header = ["theorem_tag", *param_cols, *_FIXED_COLUMNS]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for r in reports:
        row = r.as_row()
        writer.writerow([_fmt(row.get(col, "")) for col in header])
    return buf.getvalue()


def reports_to_json(reports: Sequence[BoundReport]) -> str:
    def clean(v):
        if isinstance(v, (float, np.floating)):
            v = float(v)
            return v if math.isfinite(v) else None
        if isinstance(v, np.integer):
            return int(v)
        return v
    rows = [{k: clean(v) for k, v in r.as_row().items()} for r in reports]
    return json.dumps(rows, indent=2)


# -- exact checks under the independent coupling ------------------------------


def _conditional_smoothness(P: Pmf, Q: Pmf, given_w: bool) -> tuple[float, float, float, float]:
    """Exact expectations for ``W ~ P`` independent of ``V ~ Q``, ``D = W - V``.

    Returns ``E|D|``, ``E{|D| S_1(X|D)}``, ``E{|D| S_2(X|D)}`` and ``P(D != 0)``
    where ``X`` is ``W`` if ``given_w`` else ``V``.
    """
    w = P.support[:, None]
    v = Q.support[None, :]
    joint = P.probs[:, None] * Q.probs[None, :]
    d = w - v
    mean_abs = math.fsum((np.abs(d) * joint).ravel())
    e1 = e2 = 0.0
    for dv in np.unique(d):
        if dv == 0:
            continue
        mask = d == dv
        mass = joint[mask].sum()
        if mass == 0:
            continue
        xs = (w if given_w else v) + np.zeros_like(d)
        vals = xs[mask]
        weights = joint[mask] / mass
        lo = int(vals.min())
        cond = np.zeros(int(vals.max()) - lo + 1)
        np.add.at(cond, vals - lo, weights)
        cond = Pmf(lo, cond / cond.sum())
        sm = smoothness(cond)
        e1 += abs(dv) * mass * sm.s1
        e2 += abs(dv) * mass * sm.s2
    return mean_abs, e1, e2, float(joint[d != 0].sum())


def independent_coupling_reports(P: Pmf, tol: float = 1e-9,
                                 eps: float = DEFAULT_EPS) -> list[BoundReport]:
    """Exact bound checks for one law, pairing ``W`` with an independent ``W^e``.

    With a trivial event ``A`` two sigma-algebras are evaluated: the trivial
    one (unconditional smoothness of ``W``, tag suffix ``uncond``) and
    ``sigma(D)`` (conditional smoothness of ``W`` given ``D``, suffix ``cond``).
    Positive laws are checked against the ``Ge`` bounds, laws with
    ``P(0) > 0`` against the ``Ge0`` bounds.
    """
    if not P.is_exact:
        raise InvalidDistribution("independent coupling checks need an exact pmf")
    positive = P.lo >= 1
    if not positive and P.lo != 0:
        raise InvalidDistribution("law must be positive or have P(0) > 0")
    mean = P.mean
    if positive:
        p = min(1.0, 1.0 / mean)
        eq_law = equilibrium_pos(P)
        target = geometric(p, 1, eps)
        factor = 1.0
        tags = ("pos-w", "pos-eq-tv", "pos-eq-local")
    else:
        p = 1.0 / (1.0 + mean)
        eq_law = equilibrium_nonneg(P)
        target = geometric(p, 0, eps)
        factor = 1.0 - p
        tags = ("nonneg-w", "nonneg-eq-tv", "nonneg-eq-local")
    mean_abs, cond1, cond2, _ = _conditional_smoothness(P, eq_law, given_w=True)
    sm = smoothness(P)
    dist_w = distances(P, target)
    dist_e = distances(eq_law, target)
    params = {"support": len(P), "mean": mean, "p": p}

    def row(tag, metric, lhs, slack, rhs):
        return BoundReport(tag, dict(params), metric, lhs, slack, rhs, hard=True,
                           tolerance=tol)

    return [
        row(f"{tags[0]}-l1-uncond", "tv", dist_w.tv, dist_w.truncation_slack,
            factor * mean_abs * sm.s1),
        row(f"{tags[0]}-l2-uncond", "local", dist_w.local, 2 * dist_w.truncation_slack,
            factor * mean_abs * sm.s2),
        row(f"{tags[0]}-l1-cond", "tv", dist_w.tv, dist_w.truncation_slack, factor * cond1),
        row(f"{tags[0]}-l2-cond", "local", dist_w.local, 2 * dist_w.truncation_slack,
            factor * cond2),
        row(tags[1], "tv", dist_e.tv, dist_e.truncation_slack, eq9_rhs(p, mean_abs)),
        row(f"{tags[2]}-uncond", "local", dist_e.local, 2 * dist_e.truncation_slack,
            eq9_rhs(p, mean_abs * sm.s1)),
        row(f"{tags[2]}-cond", "local", dist_e.local, 2 * dist_e.truncation_slack,
            eq9_rhs(p, cond1)),
    ]


def random_pmf(gen: np.random.Generator, max_support: int = 12, start: int = 1) -> Pmf:
    """Dirichlet(1) weights on ``start..start+m-1`` with ``m`` uniform.

    Laws started at 0 get at least two points so their mean is positive.
    """
    m = int(gen.integers(1 if start >= 1 else 2, max_support + 1))
    return Pmf(start, gen.dirichlet(np.ones(m)))


def validity_sweep(count: int = 200, max_support: int = 12, seed: int = 0,
                   tol: float = 1e-9) -> list[BoundReport]:
    """Independent-coupling checks on ``count`` random positive laws followed
    by ``count`` random laws with ``P(0) > 0``."""
    reports = []
    for start, rng in zip((1, 0), SeededRng(seed).split(2)):
        gen = rng.generator
        for idx in range(count):
            P = random_pmf(gen, max_support, start)
            for r in independent_coupling_reports(P, tol):
                r.params.update(instance=idx, start=start)
                reports.append(r)
    return reports
