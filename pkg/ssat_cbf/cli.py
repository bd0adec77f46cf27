#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Command-line entry points: collision benchmarks, contact-boundary sweeps
and closed-loop episode runs. Every subcommand writes CSV files under
`--out` and prints a summary table."""

from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence
from dataclasses import replace
import argparse
import logging
import math
import os
import sys
import time
import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation
from shapely.geometry import LineString, Polygon
from tqdm import tqdm
import wandb

from . import model
from .geometry import Cuboid, footprint, gjk_intersect, lp_min_scaling, sat_margin, ssat_margin, ssat_value
from .planner import CommandScript
from .safety import FilterConfig, SafetyFilter
from .simharness import EpisodeConfig, load_scene, run_episode, synthetic_load, verify_safety
from .smoothmath import SmoothAbs, SmoothingParams, SmoothMax
from .utils import load_config

logger = logging.getLogger(__name__)

BENCH_N = 100_000
WARMUP = 200
SSAT_VARIANTS = {
    "SSAT(LSE+xtanh)": SmoothingParams(max_variant=SmoothMax.LSE, abs_variant=SmoothAbs.XTANH).without_switching(),
    "SSAT(LSE+sqrt)": SmoothingParams(max_variant=SmoothMax.LSE, abs_variant=SmoothAbs.SQRT).without_switching(),
    "SSAT(Boltz+xtanh)": SmoothingParams(max_variant=SmoothMax.BOLTZMANN, abs_variant=SmoothAbs.XTANH).without_switching(),
}


# benchmark

def random_cuboids(rng: np.random.Generator, n: int) -> List[Cuboid]:
    r"""Centers uniform in `[-2, 2]^3`, half-extents log-uniform in
    `[0.05, 1]` m, rotations uniform."""
    centers = rng.uniform(-2.0, 2.0, (n, 3))
    extents = np.exp(rng.uniform(math.log(0.05), 0.0, (n, 3)))
    rotations = Rotation.random(n, random_state=rng).as_matrix()
    return [Cuboid(c, r, e) for c, r, e in zip(centers, rotations, extents)]


def _time_calls(fn: Callable, pairs, desc: str, progress: bool) -> np.ndarray:
    clock = time.perf_counter_ns
    for A, B in pairs[:WARMUP]:
        fn(A, B)
    times = np.empty(len(pairs))
    for k, (A, B) in enumerate(tqdm(pairs, desc=desc, disable=not progress, leave=False)):
        start = clock()
        fn(A, B)
        times[k] = clock() - start
    return times * 1e-3


def bench_collision(seed: int = 0, N: int = BENCH_N, lp_samples: int = 2000, progress: bool = False):
    r"""Time every collision method on the same stream of `N` random cuboid pairs.

    LP, the slowest method, only runs on the first `lp_samples` pairs. The
    median cost of an empty call is measured and subtracted from all
    columns. Timings are per pair in microseconds.

    Returns:
        `(report, ratios)`: a DataFrame indexed by method with
        `mean_us`, `median_us`, `p99_us` for evaluate-only and
        `diff_mean_us`, `diff_median_us`, `diff_p99_us` for
        evaluate + differentiate, and a dict of headline ratios.
    """
    if N < BENCH_N:
        logger.warning("benchmarking %d pairs; the reference table uses %d", N, BENCH_N)
    rng = np.random.default_rng(seed)
    boxes = random_cuboids(rng, 2 * N)
    pairs = list(zip(boxes[0::2], boxes[1::2]))
    baseline = float(np.median(_time_calls(lambda A, B: None, pairs, "baseline", progress)))

    evaluate: Dict[str, Callable] = {"SAT": sat_margin}
    differentiate: Dict[str, Callable] = {}
    for name, params in SSAT_VARIANTS.items():
        evaluate[name] = lambda A, B, p=params: ssat_value(A, B, p)
        differentiate[name] = lambda A, B, p=params: ssat_margin(A, B, p)
    evaluate["GJK"] = gjk_intersect
    evaluate["LP"] = lp_min_scaling

    rows = []
    for name, fn in evaluate.items():
        sample = pairs[:lp_samples] if name == "LP" else pairs
        times = np.maximum(_time_calls(fn, sample, name, progress) - baseline, 0.0)
        row = {"method": name, "n": len(sample), "mean_us": times.mean(), "median_us": np.median(times),
               "p99_us": np.percentile(times, 99)}
        if name in differentiate:
            diff = np.maximum(_time_calls(differentiate[name], sample, name + " diff", progress) - baseline, 0.0)
            row.update(diff_mean_us=diff.mean(), diff_median_us=np.median(diff), diff_p99_us=np.percentile(diff, 99))
        rows.append(row)
    report = pd.DataFrame(rows).set_index("method")
    ssat = report.loc["SSAT(LSE+xtanh)"]
    ratios = {
        "baseline_us": baseline,
        "ssat_over_sat": ssat["median_us"] / report.loc["SAT", "median_us"],
        "lp_over_ssat": report.loc["LP", "median_us"] / ssat["median_us"],
        "lp_over_ssat_diff": report.loc["LP", "median_us"] / ssat["diff_median_us"],
    }
    return report, ratios


# contact boundary sweep

class ConvexityWitness(NamedTuple):
    i: int
    j: int
    midpoint: np.ndarray
    depth: float


def convexity_witness(points, tol: float = 1e-8) -> Optional[ConvexityWitness]:
    r"""Chord between two boundary points that leaves the enclosed region.

    `points` is a closed boundary ordered counter-clockwise (e.g. one point
    per sweep angle). At a reflex vertex `i` the chord from `i - 1` to
    `i + 1` passes outside; the first such chord is returned, or None when
    the boundary is convex up to `tol`.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    for i in range(n):
        prev, here, nxt = points[i - 1], points[i], points[(i + 1) % n]
        chord = nxt - prev
        length = np.linalg.norm(chord)
        if length == 0.0:
            continue
        # convex vertices of a counter-clockwise boundary lie right of the chord
        depth = (chord[0] * (here[1] - prev[1]) - chord[1] * (here[0] - prev[0])) / length
        if depth > tol:
            return ConvexityWitness((i - 1) % n, (i + 1) % n, 0.5 * (prev + nxt), float(depth))
    return None


def minkowski_boundary(A: Cuboid, B: Cuboid, angles) -> np.ndarray:
    r"""Exact contact boundary for B translating in A's xy plane.

    When both boxes overlap vertically over the sweep, they touch exactly
    when B's center is on the boundary of the Minkowski difference of the
    footprints. Returns the boundary point along each ray from A's center.
    """
    fa, fb = footprint(A), footprint(B) - B.center[:2]
    sums = (fa[:, None, :] - fb[None, :, :]).reshape(-1, 2)
    hull = sums[ConvexHull(sums).vertices]
    polygon = Polygon(hull)
    reach = 2.0 * np.max(np.linalg.norm(hull - A.center[:2], axis=1))
    out = []
    for angle in angles:
        direction = np.array([math.cos(angle), math.sin(angle)])
        ray = LineString([A.center[:2], A.center[:2] + reach * direction])
        hit = ray.intersection(polygon.exterior)
        points = np.array([[p.x, p.y] for p in getattr(hit, "geoms", [hit])])
        out.append(points[np.argmax(np.linalg.norm(points - A.center[:2], axis=1))])
    return np.array(out)


def _bisect(h: Callable[[float], float], hi: float, tol: float = 1e-10) -> float:
    lo = 0.0
    if h(lo) > 0.0:
        return math.nan
    while h(hi) <= 0.0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def boundary_sweep(
        A: Optional[Cuboid] = None,
        B: Optional[Cuboid] = None,
        alphas: Sequence[float] = (20.0, 50.0, 100.0),
        n_directions: int = 360,
        progress: bool = False,
    ) -> pd.DataFrame:
    r"""Contact boundary of B's center around A for SAT and Smooth-SAT variants.

    For every direction in the xy plane, bisection finds where the margin
    crosses zero as B slides outwards from A's center. The default pair is
    a unit cube and a 1 x 0.5 x 0.5 box yawed by 10 degrees.

    Returns:
        Long-format DataFrame with columns `method`, `alpha`, `angle`, `x`, `y`.
    """
    A = A or Cuboid.from_pose([0.0, 0.0, 0.0], [0.5, 0.5, 0.5])
    B = B or Cuboid.from_pose([0.0, 0.0, 0.0], [0.5, 0.25, 0.25], yaw=math.radians(10.0))
    angles = np.arange(n_directions) * 2.0 * math.pi / n_directions
    start = 2.0 * (np.linalg.norm(A.half_extents) + np.linalg.norm(B.half_extents))

    methods: Dict[tuple, Callable] = {("SAT", math.nan): sat_margin}
    for alpha in alphas:
        lse = SmoothingParams(alpha_max=alpha, alpha_abs=alpha, switch_threshold=math.inf)
        boltzmann = SmoothingParams(alpha_max=alpha, alpha_abs=alpha, switch_threshold=math.inf, max_variant=SmoothMax.BOLTZMANN)
        methods[("SSAT-LSE", alpha)] = lambda P, Q, p=lse: ssat_value(P, Q, p)
        methods[("SSAT-Boltzmann", alpha)] = lambda P, Q, p=boltzmann: ssat_value(P, Q, p)

    rows = []
    for (name, alpha), margin in tqdm(methods.items(), desc="sweep", disable=not progress):
        for angle in angles:
            direction = np.array([math.cos(angle), math.sin(angle), 0.0])

            def h(r):
                return margin(A, Cuboid(A.center + r * direction, B.rotation, B.half_extents))

            r = _bisect(h, start)
            rows.append({"method": name, "alpha": alpha, "angle": angle,
                         "x": A.center[0] + r * direction[0], "y": A.center[1] + r * direction[1]})
    return pd.DataFrame(rows)


# closed-loop runs

def _episode_inputs(args):
    if not args.scene:
        raise ValueError(f"'{args.command}' needs --scene")
    scene = load_scene(args.scene)
    script = CommandScript.from_csv(args.script) if args.script else CommandScript.constant(0.1, 0.0)
    config = EpisodeConfig.from_yaml(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.duration is not None:
        config = replace(config, duration=args.duration)
    return scene, script, config


def run(args) -> Dict[str, pd.DataFrame]:
    r"""Drive the simulation harness for the `episode`, `ablation` and
    `timing` subcommands; returns the tables written under `--out`."""
    tables: Dict[str, pd.DataFrame] = {}
    if args.command == "timing" and not args.scene:
        geometry = model.default_geometry()
        x, obstacles, context = synthetic_load(args.rows, args.seed or 0, geometry)
        safety = SafetyFilter(geometry, FilterConfig(), obstacles)
        records = []
        for _ in tqdm(range(args.n or 1000), desc="timing", disable=not args.progress):
            result = safety.filter(x, np.zeros(model.NU), context)
            records.append({"rows": len(result.rows), "assembly_us": 1e6 * result.assembly_time,
                            "solve_us": 1e6 * result.solve_time, **{f"rows_{k}": v for k, v in result.row_counts().items()}})
        frame = pd.DataFrame(records)
        frame["tick_us"] = frame["assembly_us"] + frame["solve_us"]
        tables["timing"] = frame
        return tables

    scene, script, config = _episode_inputs(args)
    if args.command == "ablation":
        runs = {"cbf_on": config.with_cbf(True), "cbf_off": config.with_cbf(False)}
    else:
        runs = {args.command: config}
    summary = []
    for name, run_config in runs.items():
        log = run_episode(scene, script, run_config, progress=args.progress)
        report = verify_safety(log, scene)
        frame = log.to_frame()
        tables[f"episode_{name}"] = frame
        tables[f"landings_{name}"] = log.landings_frame()
        summary.append({"run": name, **report.summary()})
        for row in frame[["t", "min_h_body_collision", "min_h_joint_limit", "tick_us"]].itertuples(index=False):
            wandb.log({"t": row.t, "min body h": row.min_h_body_collision,
                       "min joint h": row.min_h_joint_limit, "tick time": row.tick_us})
    tables["summary"] = pd.DataFrame(summary)
    return tables


# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssat-cbf", description=__doc__)
    parser.add_argument("--log-level", default="WARNING", help="logging level (default: WARNING)")
    commands = parser.add_subparsers(dest="command", required=True, metavar="{bench,sweep,episode,ablation,timing}")

    def common(sub):
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--out", default="results", help="directory for CSV output")
        sub.add_argument("--csv", action="store_true", help="print tables as CSV instead of aligned text")
        sub.add_argument("--config", default=None, help="YAML config (plain mapping or sweep file)")
        sub.add_argument("--wandb-mode", default="disabled", choices=["disabled", "offline", "online"])
        sub.add_argument("--progress", action="store_true", help="show progress bars")
        return sub

    bench = common(commands.add_parser("bench", help="time collision methods on random cuboid pairs"))
    bench.add_argument("--n", type=int, default=None, help=f"random pairs (default: num_pairs from --config, else {BENCH_N})")
    bench.add_argument("--lp-samples", type=int, default=None, help="pairs timed for LP (default: lp_samples from --config, else 2000)")

    sweep = common(commands.add_parser("sweep", help="contact boundary sweep"))
    sweep.add_argument("--alphas", type=float, nargs="+", default=None, help="sharpness values (default: alpha from --config, else 20 50 100)")
    sweep.add_argument("--directions", type=int, default=None, help="sweep directions (default: num_directions from --config, else 360)")

    for name, help_text in (("episode", "closed-loop run with verification"),
                            ("ablation", "paired runs with body-collision rows on and off"),
                            ("timing", "per-tick assembly and solve times")):
        sub = common(commands.add_parser(name, help=help_text))
        sub.add_argument("--scene", default=None)
        sub.add_argument("--script", default=None, help="CSV with columns t, v, omega")
        sub.add_argument("--duration", type=float, default=None)
        if name == "timing":
            sub.add_argument("--n", type=int, default=1000, help="ticks of the synthetic load")
            sub.add_argument("--rows", type=int, default=269, help="rows of the synthetic load")
    return parser


def _emit(tables: Dict[str, pd.DataFrame], out: str, as_csv: bool):
    os.makedirs(out, exist_ok=True)
    for name, frame in tables.items():
        path = os.path.join(out, f"{name}.csv")
        frame.to_csv(path, index=frame.index.name is not None)
        print(f"wrote {path}")
    for name in ("summary", "bench", "ratios", "witness"):
        if name in tables:
            print(tables[name].to_csv() if as_csv else tables[name].to_string())
    if "timing" in tables:
        print(tables["timing"].describe().to_csv() if as_csv else tables["timing"].describe().to_string())


def _setting(value, config: Dict[str, Any], key: str, default):
    """Command-line value, else the config file entry, else `default`."""
    if value is not None:
        return value
    return config.get(key, default)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        wandb.init(project="ssat-cbf", mode=args.wandb_mode, config=vars(args))
        if args.command == "bench":
            config = load_config(args.config)
            seed = _setting(args.seed, config, "seed", 0)
            n = _setting(args.n, config, "num_pairs", BENCH_N)
            lp_samples = _setting(args.lp_samples, config, "lp_samples", 2000)
            report, ratios = bench_collision(int(seed), int(n), int(lp_samples), args.progress)
            tables = {"bench": report, "ratios": pd.DataFrame([ratios])}
            wandb.log({f"{method} median us": value for method, value in report["median_us"].items()})
        elif args.command == "sweep":
            config = load_config(args.config)
            alphas = np.atleast_1d(_setting(args.alphas, config, "alpha", [20.0, 50.0, 100.0])).astype(float)
            directions = int(_setting(args.directions, config, "num_directions", 360))
            frame = boundary_sweep(alphas=tuple(alphas), n_directions=directions, progress=args.progress)
            witnesses = []
            for (method, alpha), group in frame.groupby(["method", "alpha"], dropna=False):
                witness = convexity_witness(group[["x", "y"]].dropna().to_numpy())
                witnesses.append({"method": method, "alpha": alpha, "convex": witness is None,
                                  "depth": math.nan if witness is None else witness.depth})
            tables = {"sweep": frame, "witness": pd.DataFrame(witnesses)}
        else:
            tables = run(args)
        _emit(tables, args.out, args.csv)
        wandb.finish()
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        logger.debug("command failed", exc_info=True)
        wandb.finish(exit_code=1)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
