"""Command-line experiment driver.

Every subcommand prints one JSON report (or CSV rows with ``--csv``) and exits
with status 0 iff every row passes. Rationals are always written as strings.
Settings come from built-in defaults, then an INI config file (``[common]``
plus a section named after the experiment), then ``LAAKSO_SEED``, then flags.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

from . import __version__
from .calculus import builtin_functions, differentiability_residual, directional_derivative
from .cantor import Bernoulli, parse_spec, singularity_test
from .errors import LaaksoError
from .measure import ahlfors_report, ball_measure, doubling_report, nondoubling_ratio, sample_point
from .metric import ORACLE_MAX_N, distance, distance_oracle, geodesic, validate_path
from .poincare import ball_pi_report, build_chain, case_gap_bound, pointwise_pi_report, telescoping_check
from .rng import stream
from .space import LaaksoPoint
from .triadic import Triadic

SCHEMA_VERSION = "1.0"
EXPERIMENTS = (
    "distance",
    "geodesic",
    "ball-measure",
    "doubling",
    "ahlfors",
    "nondoubling",
    "singularity",
    "differentiate",
    "residual",
    "poincare",
)


class ConfigError(LaaksoError):
    pass


# Per-experiment defaults layered over the dataclass defaults.
EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "doubling": {"radii": "1/9,1/27,1/81,1/243,1/729", "resolution": 12},
    "ahlfors": {"resolution": 12, "count": 50},
    "singularity": {"measure": "3/10", "measure_alt": "7/10", "count": 10000},
    "poincare": {"resolution": 5},
}


def q(v) -> Optional[str]:
    """Serialize an exact value as text."""
    if v is None:
        return None
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return str(v)


def _triadic(text: str) -> Triadic:
    return Triadic.parse(text)


def _triadic_list(text: str) -> list[Triadic]:
    return [Triadic.parse(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


@dataclass
class ExperimentConfig:
    """All tunables; each field round-trips through its INI text."""

    experiment: str = "distance"
    resolution: int = 6
    height_depth: int = 0  # 0 means "pick per experiment"
    measure: str = "1/2"
    measure_alt: str = "7/10"
    seed: int = 0
    samples: int = 64
    count: int = 20
    radii: str = ""
    ks: str = "2,3,4,5,6"
    ms: str = "6,8,10"
    lam: str = "3/10"
    lam_hat: str = "3/5"
    depth: int = 500
    x: str = "0 @ 000000"
    y: str = "0 @ 100000"
    r: str = "1/9"
    f: str = "height"
    df: str = "1"
    scales: str = "1/27,1/81,1/243,1/729"
    mode: str = "pointwise"
    dilation: str = "2"
    proxy: str = ""
    oracle: bool = False
    output: str = "json"
    threads: int = 1

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {self.experiment!r}")
        if not 0 <= self.resolution <= 40:
            raise ConfigError("resolution: must lie in [0, 40]")
        if self.samples < 1 or self.count < 1:
            raise ConfigError("samples/count: must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if self.output not in ("json", "csv"):
            raise ConfigError("output: must be json or csv")
        if self.threads < 1:
            raise ConfigError("threads: must be positive")
        if self.mode not in ("pointwise", "ball", "chain"):
            raise ConfigError("mode: must be pointwise, ball or chain")
        for name, parse in (("radii", _triadic_list), ("scales", _triadic_list), ("ks", _int_list), ("ms", _int_list)):
            try:
                values = parse(getattr(self, name))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{name}: {exc}") from None
            if name == "radii" and self.experiment == "doubling" and not values:
                raise ConfigError("radii: the list is empty")
        for name in ("measure", "measure_alt"):
            try:
                parse_spec(getattr(self, name))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{name}: {exc}") from None

    @classmethod
    def for_experiment(cls, experiment: str) -> "ExperimentConfig":
        cfg = cls(experiment=experiment)
        for key, value in EXPERIMENT_DEFAULTS.get(experiment, {}).items():
            cfg.set(key, value)
        return cfg

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp[self.experiment] = {f.name: str(getattr(self, f.name)) for f in fields(self) if f.name != "experiment"}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(
        cls, text: str, experiment: str, source: str = "<config>", base: Optional["ExperimentConfig"] = None
    ) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        cfg = cls.for_experiment(experiment) if base is None else base
        for section in ("common", experiment):
            if cp.has_section(section):
                for key, value in cp.items(section):
                    cfg.set(key, value, where=f"{source} [{section}] {key}")
        return cfg

    def set(self, key: str, value: Any, where: str = "") -> None:
        key = key.replace("-", "_")
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ConfigError(f"{where or key}: unknown setting")
        kind = types[key]
        try:
            if kind in ("int", int):
                value = int(value)
            elif kind in ("bool", bool):
                value = value if isinstance(value, bool) else str(value).strip().lower() in ("1", "true", "yes", "on")
            else:
                value = str(value)
        except ValueError:
            raise ConfigError(f"{where or key}: cannot parse {value!r} as {kind}") from None
        setattr(self, key, value)

    def echo(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("threads", "output")}


# -- experiments -----------------------------------------------------------

Row = dict[str, Any]


def _parallel(cfg: ExperimentConfig, fn: Callable[[int], Row], n: int) -> list[Row]:
    """Evaluate ``fn(i)`` for every row index, collecting errors per row."""

    def safe(i: int) -> Row:
        try:
            return fn(i)
        except LaaksoError as exc:
            return {"index": i, "error": str(exc), "pass": False}

    if cfg.threads == 1:
        return [safe(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(safe, range(n)))


def _points(cfg: ExperimentConfig) -> tuple[LaaksoPoint, LaaksoPoint]:
    return LaaksoPoint.parse(cfg.x), LaaksoPoint.parse(cfg.y)


def run_distance(cfg: ExperimentConfig) -> list[Row]:
    x, y = _points(cfg)
    d = distance(x, y)
    path = geodesic(x, y)
    row = {
        "x": str(x),
        "y": str(y),
        "distance": str(d),
        "path": [f"{s.from_height}->{s.to_height} @ {s.address}" for s in path.segments],
        "pass": not validate_path(path),
    }
    if cfg.oracle:
        if x.resolution > ORACLE_MAX_N:
            raise ConfigError(f"oracle: resolution {x.resolution} exceeds {ORACLE_MAX_N}")
        agrees = distance_oracle(x, y) == d
        row["oracle_agrees"] = agrees
        row["pass"] = row["pass"] and agrees
    return [row]


def run_geodesic(cfg: ExperimentConfig) -> list[Row]:
    x, y = _points(cfg)
    path = geodesic(x, y)
    problems = validate_path(path)
    return [
        {
            "x": str(x),
            "y": str(y),
            "length": str(path.total_length),
            "low": str(path.low),
            "high": str(path.high),
            "segments": [f"{s.from_height}->{s.to_height} @ {s.address}" for s in path.segments],
            "jumps": [f"order {j.level.order} at {j.level.height}" for j in path.jumps],
            "problems": problems,
            "pass": not problems,
        }
    ]


def run_ball_measure(cfg: ExperimentConfig) -> list[Row]:
    spec = parse_spec(cfg.measure)
    x = LaaksoPoint.parse(cfg.x)
    radii = _triadic_list(cfg.radii) if cfg.radii else [_triadic(cfg.r)]

    def row(i: int) -> Row:
        b = ball_measure(spec, x, radii[i])
        return {"center": str(x), "r": str(radii[i]), "lower": q(b.lower), "upper": q(b.upper), "bound": None, "pass": b.lower > 0}

    return _parallel(cfg, row, len(radii))


def _centers(cfg: ExperimentConfig, spec, i: int, N: Optional[int] = None) -> LaaksoPoint:
    return sample_point(spec, cfg.resolution if N is None else N, stream(cfg.seed, 0, i), cfg.height_depth or None)


def run_doubling(cfg: ExperimentConfig) -> list[Row]:
    spec = parse_spec(cfg.measure)
    radii = _triadic_list(cfg.radii)
    if not radii:
        raise ConfigError("radii: the list is empty")

    def row(i: int) -> Row:
        x = _centers(cfg, spec, i // len(radii))
        r = radii[i % len(radii)]
        (res,) = doubling_report(spec, [(x, r)])
        return {
            "center": str(x),
            "r": str(r),
            "lower": q(res.lower_r),
            "upper": q(res.upper_2r),
            "ratio": q(res.ratio_upper),
            "bound": q(res.bound),
            "pass": res.passed,
        }

    return _parallel(cfg, row, cfg.count * len(radii))


def run_ahlfors(cfg: ExperimentConfig) -> tuple[list[Row], dict[str, Any]]:
    ks = _int_list(cfg.ks)
    if not ks:
        raise ConfigError("ks: the list is empty")
    spec = Bernoulli(Fraction(1, 2))

    def row(i: int) -> Row:
        x = _centers(cfg, spec, i // len(ks))
        (res,) = ahlfors_report([x], [ks[i % len(ks)]])
        return {
            "center": str(x),
            "k": res.k,
            "lower": q(res.lower_ratio),
            "upper": q(res.upper_ratio),
            "pass": res.lower_ratio > 0,
        }

    rows = _parallel(cfg, row, cfg.count * len(ks))
    ok = [r for r in rows if "error" not in r]
    band = None
    if ok:
        band = max(Fraction(r["upper"]) for r in ok) / min(Fraction(r["lower"]) for r in ok)
    summary = {"band": q(band), "band_limit": "1000", "pass": band is not None and band <= 1000}
    return rows, summary


def run_nondoubling(cfg: ExperimentConfig) -> tuple[list[Row], dict[str, Any]]:
    ms = _int_list(cfg.ms)
    lam, lam_hat = Fraction(cfg.lam), Fraction(cfg.lam_hat)

    def row(i: int) -> Row:
        res = nondoubling_ratio(lam, lam_hat, ms[i])
        return {
            "m": res.m,
            "lower": q(res.lower_double),
            "upper": q(res.upper_single),
            "ratio": q(res.ratio),
            "analytic": q(res.analytic),
            "pass": res.ratio >= res.analytic / 2,
        }

    rows = _parallel(cfg, row, len(ms))
    ratios = [Fraction(r["ratio"]) for r in rows if "ratio" in r]
    increasing = len(ratios) == len(rows) and all(a < b for a, b in zip(ratios, ratios[1:]))
    return rows, {"increasing": increasing, "pass": increasing}


def run_singularity(cfg: ExperimentConfig) -> list[Row]:
    left, right = parse_spec(cfg.measure), parse_spec(cfg.measure_alt)
    if not (isinstance(left, Bernoulli) and isinstance(right, Bernoulli)):
        raise ConfigError("measure: singularity compares two Bernoulli measures")
    lo, hi = sorted((left.w, right.w))
    res = singularity_test(lo, hi, cfg.depth, cfg.count, stream(cfg.seed, 0))
    return [
        {
            "w_left": q(lo),
            "w_right": q(hi),
            "depth": res.depth,
            "samples": res.samples,
            "misclassified": res.misclassified,
            "failure_bound": f"{res.failure_probability_bound:.3e}",
            "failure_exact": f"{float(res.exact_failure_probability):.3e}",
            "pass": res.misclassified == 0,
        }
    ]


def _function(cfg: ExperimentConfig, N: int):
    table = {f.name.split("(")[0]: f for f in builtin_functions(N)}
    # the two distance functions share a prefix; keep both reachable
    named = {f.name: f for f in builtin_functions(N)}
    if cfg.f in named:
        return named[cfg.f]
    if cfg.f in table:
        return table[cfg.f]
    raise ConfigError(f"f: unknown function {cfg.f!r}; choose from {sorted(named)}")


def run_differentiate(cfg: ExperimentConfig) -> list[Row]:
    x = LaaksoPoint.parse(cfg.x)
    f = _function(cfg, x.resolution)
    dd = directional_derivative(f, x, _triadic_list(cfg.scales))
    rows = []
    for side, rs in (("left", dd.rows), ("right", dd.flipped_rows)):
        if rs is None:
            continue
        for r in rs:
            rows.append({"side": side, "t": str(r.t), "forward": q(r.forward), "backward": q(r.backward), "pass": True})
    expected = f.derivative(x) if f.derivative else None
    value = dd.value()
    for r in rows:
        r["estimate"] = q(value)
        r["expected"] = q(expected)
        if expected is not None and dd.order is None:
            r["pass"] = value == expected
    return rows


def run_residual(cfg: ExperimentConfig) -> list[Row]:
    x = LaaksoPoint.parse(cfg.x)
    f = _function(cfg, x.resolution)
    spec = parse_spec(cfg.measure)
    radii = _triadic_list(cfg.radii) if cfg.radii else [_triadic(cfg.r)]

    def row(i: int) -> Row:
        res = differentiability_residual(f, x, Fraction(cfg.df), radii[i], cfg.samples, stream(cfg.seed, 0, i), spec)
        return {"r": str(radii[i]), "residual": q(res.value), "samples": res.samples, "pass": True}

    return _parallel(cfg, row, len(radii))


def run_poincare(cfg: ExperimentConfig) -> list[Row]:
    spec = parse_spec(cfg.measure)
    N = cfg.resolution
    lam = Triadic.parse(cfg.dilation)
    fs = builtin_functions(N)
    hd = cfg.height_depth or N + 1

    def pair(i: int):
        g = stream(cfg.seed, 0, i)
        while True:
            p, r = sample_point(spec, N, g, hd), sample_point(spec, N, g, hd)
            if p != r:
                return p, r

    if cfg.mode == "chain":

        def row(i: int) -> Row:
            p, r = pair(i)
            chain = build_chain(p, r)
            problems = chain.validate()
            g = stream(cfg.seed, 1, i)
            gaps = []
            for f in fs:
                for pr in chain.pairs:
                    cg = case_gap_bound(f, pr, spec, N, g, samples=cfg.samples)
                    gaps.append(cg.passed)
                tel = telescoping_check(f, chain, spec, g, samples=max(1, cfg.samples // 4))
                gaps.append(tel.holds)
            return {
                "p": str(p),
                "q": str(r),
                "distance": str(chain.distance),
                "n": chain.n,
                "labels": "".join(chain.labels()),
                "problems": problems,
                "case_bounds_pass": all(gaps),
                "pass": not problems and all(gaps),
            }

        return _parallel(cfg, row, cfg.count)

    proxy = cfg.proxy or ("pointwise" if cfg.mode == "pointwise" else "declared")

    def row(i: int) -> Row:
        g = stream(cfg.seed, 1, i)
        out: Row = {"index": i, "proxy": proxy}
        if cfg.mode == "pointwise":
            p, r = pair(i)
            out.update(p=str(p), q=str(r))
            consts = []
            for f in fs:
                (res,) = pointwise_pi_report(f, [(p, r)], lam, spec, g, samples=cfg.samples, proxy=proxy, depth=3)
                consts.append(res.constant)
                out[f.name] = q(res.constant)
        else:
            x = sample_point(spec, N, stream(cfg.seed, 0, i), hd)
            radius = Triadic(1, 1 + i % 4)
            out.update(center=str(x), r=str(radius))
            consts = []
            for f in fs:
                (res,) = ball_pi_report(f, [(x, radius)], lam, spec, g, samples=cfg.samples, proxy=proxy)
                consts.append(res.ratio)
                out[f.name] = q(res.ratio)
        out["pass"] = all(c is not None for c in consts)
        return out

    return _parallel(cfg, row, cfg.count)


RUNNERS: dict[str, Callable[[ExperimentConfig], Any]] = {
    "distance": run_distance,
    "geodesic": run_geodesic,
    "ball-measure": run_ball_measure,
    "doubling": run_doubling,
    "ahlfors": run_ahlfors,
    "nondoubling": run_nondoubling,
    "singularity": run_singularity,
    "differentiate": run_differentiate,
    "residual": run_residual,
    "poincare": run_poincare,
}

# Quick settings used by ``all``.
ALL_DEFAULTS: dict[str, dict[str, Any]] = {
    "distance": {"x": "0 @ 000", "y": "0 @ 100", "oracle": True},
    "geodesic": {"x": "0 @ 000", "y": "0 @ 100"},
    "ball-measure": {"x": "13/27 @ 000000", "radii": "1/9,1/27"},
    "doubling": {"count": 4, "radii": "1/9,1/81"},
    "ahlfors": {"count": 4, "ks": "2,3,4"},
    "nondoubling": {"ms": "6,8"},
    "singularity": {"measure": "3/10", "measure_alt": "7/10", "count": 1000},
    "differentiate": {"x": "7/81 @ 0110", "f": "abs_centered", "scales": "1/243,1/729,1/2187"},
    "residual": {"x": "7/81 @ 0110", "radii": "1/9,1/27", "samples": 16},
    "poincare": {"count": 2, "resolution": 4, "samples": 8},
}


def run(cfg: ExperimentConfig) -> dict[str, Any]:
    cfg.validate()
    t0 = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg)
    rows, summary = result if isinstance(result, tuple) else (result, {})
    passed = bool(rows) and all(r.get("pass", False) for r in rows) and summary.get("pass", True)
    return {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "experiment": cfg.experiment,
        "config": cfg.echo(),
        "rows": rows,
        "summary": summary,
        "passed": passed,
        "wall_clock_seconds": round(time.perf_counter() - t0, 3),
    }


# -- output ----------------------------------------------------------------


def _cell(v: Any) -> str:
    if isinstance(v, list):
        return "; ".join(str(x) for x in v)
    if v is None:
        return ""
    return str(v).lower() if isinstance(v, bool) else str(v)


def write_report(report: dict[str, Any], fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(report, sort_keys=False) + "\n")
        return
    rows = report["rows"]
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["schema_version", "experiment"] + columns)
    for r in rows:
        w.writerow([report["schema_version"], report["experiment"]] + [_cell(r.get(c)) for c in columns])


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laakso", description="Exact experiments on the Laakso space.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [common] and per-experiment sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--csv", action="store_true", help="write CSV rows instead of JSON")
    common.add_argument("-n", "--n", "--resolution", dest="resolution", type=int)
    common.add_argument("--height-depth", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--count", type=int, help="number of centers, pairs or draws")
    sub = parser.add_subparsers(dest="experiment", required=True)

    def add(name: str, help_: str, *opts: tuple[str, dict]):
        p = sub.add_parser(name, parents=[common], help=help_)
        for flag, kw in opts:
            p.add_argument(flag, **kw)
        return p

    pt = ("--x", {"help": "point 'k/3^d @ bits'"})
    add("distance", "exact distance and geodesic", pt, ("--y", {}), ("--oracle", {"action": "store_true"}))
    add("geodesic", "geodesic path with replay check", pt, ("--y", {}))
    add("ball-measure", "certified ball-measure bounds", pt, ("--w", {"dest": "measure"}), ("--r", {}), ("--radii", {}))
    add("doubling", "doubling sweep for mu_w", ("--w", {"dest": "measure"}), ("--radii", {}))
    add("ahlfors", "Ahlfors-regularity brackets for mu_1/2", ("--ks", {}))
    add("nondoubling", "the split-measure counterexample", ("--lam", {}), ("--lam-hat", {}), ("--ms", {}))
    add(
        "singularity",
        "digit-frequency separation of two measures",
        ("--w", {"dest": "measure"}),
        ("--w2", {"dest": "measure_alt"}),
        ("--depth", {"type": int}),
    )
    add("differentiate", "difference quotients in height", ("--f", {}), pt, ("--scales", {}))
    add(
        "residual",
        "sampled differentiability residuals",
        ("--f", {}),
        pt,
        ("--df", {}),
        ("--r", {}),
        ("--radii", {}),
        ("--w", {"dest": "measure"}),
    )
    add(
        "poincare",
        "chains and empirical Poincare constants",
        ("--mode", {"choices": ["pointwise", "ball", "chain"]}),
        ("--w", {"dest": "measure"}),
        ("--lambda", {"dest": "dilation"}),
        ("--pairs", {"dest": "count", "type": int}),
        ("--proxy", {"choices": ["declared", "pointwise"]}),
    )
    sub.add_parser("all", parents=[common], help="run every experiment with quick settings")
    return parser


def config_from_args(args: argparse.Namespace, experiment: str) -> ExperimentConfig:
    """Precedence: built-in defaults < quick settings of ``all`` < config file < LAAKSO_SEED < flags."""
    cfg = ExperimentConfig.for_experiment(experiment)
    if args.experiment == "all":
        for k, v in ALL_DEFAULTS.get(experiment, {}).items():
            cfg.set(k, v)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"config: {exc}") from None
        cfg = ExperimentConfig.from_ini(text, experiment, args.config, base=cfg)
    env = os.environ.get("LAAKSO_SEED")
    if env is not None:
        cfg.set("seed", env, where="LAAKSO_SEED")
    for k, v in vars(args).items():
        if k in ("config", "experiment", "csv") or v is None or v is False:
            continue
        cfg.set(k, v, where=f"--{k.replace('_', '-')}")
    if args.csv:
        cfg.output = "csv"
    return cfg


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    names = EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    ok = True
    for name in names:
        try:
            cfg = config_from_args(args, name)
            report = run(cfg)
        except ConfigError as exc:
            print(f"laakso: configuration error: {exc}", file=sys.stderr)
            return 2
        except LaaksoError as exc:
            print(f"laakso: {name}: {exc}", file=sys.stderr)
            return 1
        write_report(report, cfg.output, out)
        ok = ok and report["passed"]
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
