"""Command line runner: ``geoapprox <verb> [options]``.

Experiment verbs write ``<verb>.csv`` (or ``.json``), ``<verb>.manifest.json``
and ``<verb>.summary.txt`` into the output directory and print the summary.
Exit status is 1 when any hard row fails and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bounds import BoundReport, reports_to_csv, reports_to_json, validity_sweep
from .errors import GeoApproxError
from .models.galton_watson import OffspringLaw, gw_generation, gw_spine_sampler, gw_tv_experiment
from .models.geometric_sums import common_mean, gsum_grid_point, shard_sizes
from .models.preferential_attachment import (pa_coupling_sampler, pa_degree_dist,
                                             pa_fixed_vertex_experiment, pa_mean,
                                             pa_mixture_experiment, yule_mixture_check)
from .models.uniform_attachment import ua_experiment
from .pmf import (DEFAULT_EPS, Pmf, bernoulli, distances, from_samples, geometric,
                  point_mass, uniform, yule_simon)
from .rng import SeededRng
from .stein import solve
from .transforms import (equilibrium, equilibrium_nonneg, equilibrium_pos,
                         equilibrium_via_size_bias, size_bias)

DEFAULT_REPS = 100_000
DEFAULT_SHARDS = 32


class ConfigError(Exception):
    pass


# -- parsing -------------------------------------------------------------------

_FAMILY = re.compile(r"^\s*(ge0|ge|bern|unif|point|yule)\s*\(([^)]*)\)\s*$")


def parse_pmf(text: str, eps: float = DEFAULT_EPS) -> Pmf:
    """Read a law from ``"k:p,k:p,..."``, a family like ``ge(0.5)``, or a JSON file.

    JSON files hold either ``{"offset": .., "probs": [..]}`` or ``{"k": p}``.
    """
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read pmf file {text}: {exc}") from exc
        if isinstance(obj, dict) and "probs" in obj:
            return Pmf.from_dict(obj)
        return _pmf_from_pairs({int(k): float(v) for k, v in obj.items()})
    m = _FAMILY.match(text)
    if m:
        name, args = m.group(1), [a for a in m.group(2).split(",") if a.strip()]
        try:
            if name == "ge":
                return geometric(float(args[0]), 1, eps)
            if name == "ge0":
                return geometric(float(args[0]), 0, eps)
            if name == "bern":
                return bernoulli(float(args[0]))
            if name == "unif":
                return uniform(int(args[0]), int(args[1]))
            if name == "point":
                return point_mass(int(args[0]))
            return yule_simon(eps=max(eps, 1e-10))
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad family arguments in {text!r}: {exc}") from exc
    pairs = {}
    for item in text.split(","):
        try:
            k, p = item.split(":")
            pairs[int(k)] = pairs.get(int(k), 0.0) + float(p)
        except ValueError as exc:
            raise ConfigError(f"cannot parse pmf entry {item!r} in {text!r}") from exc
    return _pmf_from_pairs(pairs)


def _pmf_from_pairs(pairs: dict) -> Pmf:
    if not pairs:
        raise ConfigError("empty pmf")
    if any(p < 0 for p in pairs.values()):
        raise ConfigError("negative probability")
    total = math.fsum(pairs.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"probabilities sum to {total}, not 1")
    lo, hi = min(pairs), max(pairs)
    probs = np.zeros(hi - lo + 1)
    for k, p in pairs.items():
        probs[k - lo] = p / total
    return Pmf(lo, probs)


def _grid(cast):
    def parse(text: str):
        try:
            return sorted({cast(x) for x in text.split(",") if x.strip()})
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc
    return parse


def _powers_of_two_to(n: int) -> list[int]:
    grid = [1 << e for e in range(n.bit_length()) if (1 << e) <= n]
    return sorted(set(grid) | {n})


# -- experiments ---------------------------------------------------------------


def _map(fn, items, workers: int) -> list:
    """Ordered map, over a process pool when ``workers > 1``."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _flatten(chunks) -> list[BoundReport]:
    return [r for chunk in chunks for r in chunk]


def _gsum_point(item, laws, start, reps, seed, shards, eps):
    idx, a = item
    return gsum_grid_point(laws, a, idx, start, reps, seed, shards, eps)


def _pa_fixed_point(item, n, reps, seed, shards):
    idx, i = item
    rows = pa_fixed_vertex_experiment(n, [i])
    if reps > 0:
        rng = SeededRng(seed).child(idx)
        parts = [pa_coupling_sampler(n, i, r, m)
                 for r, m in zip(rng.split(shards), shard_sizes(reps, shards))]
        neq = np.concatenate([b.neq for b in parts])
        w = np.concatenate([b.w_tilde for b in parts])
        p = 1.0 / pa_mean(n, i)
        rate = float(neq.mean())
        err = math.sqrt(rate * (1 - rate) / reps)
        base = rows[0]
        rows.append(BoundReport("pa-fixed-coupling", dict(base.params, reps=reps), "tv",
                                base.lhs_value, base.slack, 2 * (1 - p) * rate,
                                2 * (1 - p) * err, i * rate))
        law = pa_degree_dist(n, i)
        rows.append(BoundReport("pa-fixed-marginal", dict(base.params, reps=reps), "tv",
                                distances(from_samples(w), law).tv, 0.0, math.nan))
    return rows


def run_gsum(args) -> tuple[list[BoundReport], dict]:
    laws = [parse_pmf(t) for t in args.summands.split(";")]
    for a in args.a_grid:
        if not 0.0 < a <= 1.0:
            raise ConfigError(f"a={a} outside (0, 1]")
    try:
        common_mean(laws)
    except GeoApproxError as exc:
        raise ConfigError(str(exc)) from exc
    start = args.start
    if start is None:
        start = 1 if min(law.lo for law in laws) >= 1 else 0
    eps = args.trunc_eps if args.trunc_eps is not None else 1e-10
    params = {"summands": args.summands, "a_grid": args.a_grid, "start": start,
              "reps": args.reps, "shards": args.shards, "trunc_eps": eps}
    if args.validate:
        return [], params
    fn = partial(_gsum_point, laws=laws, start=start, reps=args.reps, seed=args.seed,
                 shards=args.shards, eps=eps)
    return _flatten(_map(fn, list(enumerate(args.a_grid)), args.workers)), params


def run_gw(args):
    off = OffspringLaw.from_pmf(parse_pmf(args.offspring))
    if not off.critical:
        raise ConfigError(f"offspring not critical (mean {off.mean:.6g})")
    if off.variance <= 0:
        raise ConfigError("offspring variance must be positive")
    if min(args.n_grid) < 1 or 2.0 / (off.variance * min(args.n_grid)) > 1.0:
        raise ConfigError("every n needs 2 / (sigma^2 n) <= 1")
    eps = args.trunc_eps if args.trunc_eps is not None else 1e-9
    params = {"offspring": args.offspring, "n_grid": args.n_grid, "K": args.K,
              "variance": off.variance, "smooth": off.smooth, "reps": args.reps,
              "trunc_eps": eps}
    if args.validate:
        return [], params
    rows = gw_tv_experiment(off, args.n_grid, args.K, eps)
    if args.reps > 0:
        for idx, n in enumerate(args.n_grid):
            rng = SeededRng(args.seed).child(idx)
            batches = [gw_spine_sampler(off, n, r, m)
                       for r, m in zip(rng.split(args.shards), shard_sizes(args.reps, args.shards))]
            sizes = np.concatenate([b.size for b in batches])
            right = np.concatenate([b.right for b in batches])
            z = gw_generation(off, n, args.K, eps)
            eq = Pmf(1, z.survival()[1:], z.tail_mass)
            for tag, sample, exact in (("spine-size", sizes, size_bias(z)),
                                       ("spine-right", right, eq)):
                rows.append(BoundReport(tag, {"n": n, "reps": args.reps}, "tv",
                                        distances(from_samples(sample), exact).tv,
                                        0.0, math.nan))
    return rows, params


def run_ua(args):
    if min(args.n_grid) < 1:
        raise ConfigError("n must be at least 1")
    eps = args.trunc_eps if args.trunc_eps is not None else DEFAULT_EPS
    params = {"n_grid": args.n_grid, "trunc_eps": eps}
    if args.validate:
        return [], params
    fn = partial(ua_experiment, eps=eps)
    return _flatten(_map(fn, [[n] for n in args.n_grid], args.workers)), params


def run_pa_fixed(args):
    n = args.n
    grid = args.i_grid or _powers_of_two_to(n)
    bad = [i for i in grid if not 1 <= i <= n]
    if bad:
        raise ConfigError(f"vertex indices {bad} outside 1..{n}")
    params = {"n": n, "i_grid": grid, "reps": args.reps, "shards": args.shards}
    if args.validate:
        return [], params
    fn = partial(_pa_fixed_point, n=n, reps=args.reps, seed=args.seed, shards=args.shards)
    return _flatten(_map(fn, list(enumerate(grid)), args.workers)), params


def run_pa_mixture(args):
    if min(args.n_grid) < 2:
        raise ConfigError("n must be at least 2")
    eps = args.trunc_eps if args.trunc_eps is not None else 1e-10
    params = {"n_grid": args.n_grid, "trunc_eps": eps}
    if args.validate:
        return [], params
    fn = partial(pa_mixture_experiment, eps=eps)
    return _flatten(_map(fn, [[n] for n in args.n_grid], args.workers)), params


def run_yule_check(args):
    if args.kmax < 1:
        raise ConfigError("kmax must be at least 1")
    params = {"kmax": args.kmax, "tol": args.tol}
    if args.validate:
        return [], params
    err = yule_mixture_check(args.kmax, args.tol)
    return [BoundReport("yule-mixture", dict(params), "max_abs_error", err, 0.0, 1e-8,
                        hard=True)], params


def run_sweep(args):
    if args.count < 1 or args.max_support < 1:
        raise ConfigError("count and max-support must be positive")
    params = {"count": args.count, "max_support": args.max_support, "tol": args.tol}
    if args.validate:
        return [], params
    return validity_sweep(args.count, args.max_support, args.seed, args.tol), params


def run_stein(args):
    target = args.set
    if any(b < 1 for b in target):
        raise ConfigError("the target set must hold positive integers")
    bad = [p for p in args.p_grid if not 0.0 < p <= 1.0]
    if bad:
        raise ConfigError(f"p values {bad} outside (0, 1]")
    eps = args.trunc_eps if args.trunc_eps is not None else DEFAULT_EPS
    params = {"set": target, "p_grid": args.p_grid, "K": args.K, "trunc_eps": eps}
    if args.validate:
        return [], params
    rows = []
    for p in args.p_grid:
        sol = solve(target, p, args.K, eps)
        grad = float(np.max(np.abs(np.diff(sol.values))))
        sup_f = float(np.max(np.abs(sol.values)))
        res = float(np.max(np.abs(sol.residuals())))
        prm = {"set": " ".join(map(str, target)), "p": p, "K": sol.K}
        rows.append(BoundReport("stein-residual", dict(prm), "max_abs", res, 0.0, 0.0,
                                hard=True, tolerance=1e-12))
        rows.append(BoundReport("stein-gradient", dict(prm), "sup_abs", grad, 0.0, 1.0,
                                hard=True, tolerance=1e-12))
        if len(target) <= 1:
            rows.append(BoundReport("stein-sup", dict(prm), "sup_abs", sup_f, 0.0, 1.0,
                                    hard=True, tolerance=1e-12))
    return rows, params


RUNNERS = {
    "gsum": run_gsum,
    "gw": run_gw,
    "ua": run_ua,
    "pa-fixed": run_pa_fixed,
    "pa-mixture": run_pa_mixture,
    "yule-check": run_yule_check,
    "sweep-validity": run_sweep,
    "stein-check": run_stein,
}


# -- output --------------------------------------------------------------------


def _fmt_num(x) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.6g}"


def summary_text(experiment: str, reports: list[BoundReport]) -> str:
    lines = []
    for r in reports:
        prm = " ".join(f"{k}={_fmt_num(v) if isinstance(v, float) else v}"
                       for k, v in sorted(r.params.items()))
        rhs = _fmt_num(r.rhs_value)
        if r.rhs_std_error:
            rhs += f"+-{_fmt_num(r.rhs_std_error)}"
        extra = "" if math.isnan(r.empirical_c) else f" C={_fmt_num(r.empirical_c)}"
        lines.append(f"{r.status:4} {r.theorem_tag:<16} {prm} | {r.lhs_metric}="
                     f"{_fmt_num(r.lhs_value)} rhs={rhs}{extra}")
    counts = {s: sum(r.status == s for r in reports) for s in ("PASS", "FAIL", "SOFT")}
    lines.append(f"{experiment}: {len(reports)} rows, {counts['PASS']} PASS, "
                 f"{counts['FAIL']} FAIL, {counts['SOFT']} soft")
    return "\n".join(lines) + "\n"


def _versions() -> dict:
    return {"geoapprox": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_outputs(experiment: str, args, params: dict, reports: list[BoundReport]) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    body = reports_to_csv(reports) if args.format == "csv" else reports_to_json(reports)
    data_path = out / f"{experiment}.{args.format}"
    data_path.write_bytes(body.encode("utf-8"))
    summary = summary_text(experiment, reports)
    (out / f"{experiment}.summary.txt").write_text(summary)
    manifest = {
        "experiment": experiment,
        "params": params,
        "seed": args.seed,
        "trunc_eps": params.get("trunc_eps", args.trunc_eps),
        "format": args.format,
        "output": data_path.name,
        "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "rows": len(reports),
        "status_counts": {s: sum(r.status == s for r in reports)
                          for s in ("PASS", "FAIL", "SOFT")},
        "versions": _versions(),
    }
    (out / f"{experiment}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    sys.stdout.write(summary)
    return data_path


# -- utility verbs -------------------------------------------------------------


def cmd_dist(args) -> int:
    P, Q = parse_pmf(args.P, args.trunc_eps or DEFAULT_EPS), parse_pmf(args.Q, args.trunc_eps or DEFAULT_EPS)
    d = distances(P, Q)
    row = {"tv": d.tv, "kolmogorov": d.kolmogorov, "local": d.local,
           "truncation_slack": d.truncation_slack}
    if args.format == "json":
        print(json.dumps(row))
    else:
        print(",".join(row))
        print(",".join(repr(float(v)) for v in row.values()))
    return 0


_TRANSFORMS = {
    "size-bias": size_bias,
    "equilibrium": equilibrium,
    "equilibrium-pos": equilibrium_pos,
    "equilibrium-nonneg": equilibrium_nonneg,
    "via-size-bias": lambda P: equilibrium_via_size_bias(P, 1 if P.lo >= 1 else 0),
}


def cmd_transform(args) -> int:
    P = parse_pmf(args.P, args.trunc_eps or DEFAULT_EPS)
    result = _TRANSFORMS[args.kind](P)
    sys.stdout.write(result.to_json() + "\n" if args.format == "json" else result.to_csv())
    return 0


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trunc-eps", type=float, default=None,
                        help="truncation budget (each experiment has its own default)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--out", default=None, help="output directory [$GEOAPPROX_OUT]")
    runs.add_argument("--reps", type=int, default=None)
    runs.add_argument("--shards", type=int, default=None, help="[$GEOAPPROX_SHARDS]")
    runs.add_argument("--workers", type=int, default=1)
    runs.add_argument("--validate", action="store_true",
                      help="check the configuration, print resolved settings and exit")

    parser = argparse.ArgumentParser(prog="geoapprox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", parents=[common], help="distances between two laws")
    p.add_argument("P")
    p.add_argument("Q")

    p = sub.add_parser("transform", parents=[common], help="size bias or equilibrium law")
    p.add_argument("P")
    p.add_argument("--kind", choices=sorted(_TRANSFORMS), default="equilibrium")

    p = sub.add_parser("stein-check", parents=[common, runs], help="Stein solution bounds")
    p.add_argument("--set", type=_grid(int), default=[1])
    p.add_argument("--p-grid", type=_grid(float), default=[0.1, 0.5, 0.9])
    p.add_argument("--K", type=int, default=None)

    p = sub.add_parser("gsum", parents=[common, runs], help="geometric sums")
    p.add_argument("--summands", default="unif(1,3)",
                   help="';'-separated summand laws, cycled in order")
    p.add_argument("--a-grid", type=_grid(float), default=[0.1, 0.3, 0.5, 0.9])
    p.add_argument("--start", type=int, choices=(0, 1), default=None)

    p = sub.add_parser("gw", parents=[common, runs], help="critical Galton-Watson")
    p.add_argument("--offspring", default="0:0.25,1:0.5,2:0.25")
    p.add_argument("--n-grid", type=_grid(int), default=[4, 8, 16, 32])
    p.add_argument("--K", type=int, default=None)

    p = sub.add_parser("ua", parents=[common, runs], help="uniform attachment in-degree")
    p.add_argument("--n-grid", type=_grid(int), default=[1, 2, 5, 10, 25, 50, 100, 500])

    p = sub.add_parser("pa-fixed", parents=[common, runs], help="degree of a fixed vertex")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--i-grid", type=_grid(int), default=None)

    p = sub.add_parser("pa-mixture", parents=[common, runs], help="degree of a uniform vertex")
    p.add_argument("--n-grid", type=_grid(int), default=[50, 100, 200, 400])

    p = sub.add_parser("yule-check", parents=[common, runs], help="Yule-Simon quadrature")
    p.add_argument("--kmax", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("sweep-validity", parents=[common, runs],
                       help="exact bound checks on random laws")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--max-support", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-9)
    return parser


def _resolve(args) -> None:
    if args.out is None:
        args.out = os.environ.get("GEOAPPROX_OUT", "geoapprox-out")
    if args.shards is None:
        args.shards = int(os.environ.get("GEOAPPROX_SHARDS", DEFAULT_SHARDS))
    if args.reps is None:
        args.reps = DEFAULT_REPS if args.command == "gsum" else 0
    if args.shards < 1 or args.reps < 0 or args.workers < 1:
        raise ConfigError("shards and workers must be positive, reps non-negative")
    if args.trunc_eps is not None and not 0.0 < args.trunc_eps < 1.0:
        raise ConfigError("trunc-eps must lie in (0, 1)")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "dist":
            return cmd_dist(args)
        if args.command == "transform":
            return cmd_transform(args)
        _resolve(args)
        reports, params = RUNNERS[args.command](args)
        if args.validate:
            print(json.dumps({"experiment": args.command, "seed": args.seed,
                              "out": args.out, "format": args.format, "params": params},
                             indent=2))
            return 0
    except (ConfigError, GeoApproxError, ValueError) as exc:
        print(f"geoapprox {args.command}: error: {exc}", file=sys.stderr)
        return 2
    write_outputs(args.command, args, params, reports)
    return 1 if any(r.passed is False for r in reports) else 0


if __name__ == "__main__":
    sys.exit(main())
