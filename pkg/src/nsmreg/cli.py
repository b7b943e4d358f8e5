"""Command-line interface.

Subcommands: ``eval``, ``sweep``, ``check``, ``bench``, ``reproduce-paper``.
Exit status is 0 on success, 1 when a check fails, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import checks, fastquery
from .analysis import sweep
from .config import (
    DEFAULT_SYNTHETIC, PRESET_LSTAR_GRID, PRESET_SURFACE_L, ExperimentConfig, load_config,
    merge, example_preset, parse_box, parse_schedule,
)
from .dataset import Dataset, best_lipschitz_on_grid, get_synthetic, sample_synthetic, write_csv
from .exceptions import ConfigError, NsmError
from .geometry import DomainBox, NormSpec, distances, make_grid
from .regressors import evaluate_distances

log = logging.getLogger("nsmreg")


def _f(v) -> str:
    return format(float(v), ".17g")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _coord_header(dim: int) -> list[str]:
    return [f"x_{i}" for i in range(1, dim + 1)]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def write_surfaces(d: Dataset, norm: NormSpec, L: float, grid: int, out: Path) -> None:
    """surface_nsm.csv, surface_nn.csv, surface_sqerr.csv and regions.csv on the grid."""
    out.mkdir(parents=True, exist_ok=True)
    g = make_grid(d.box, grid)
    ev = evaluate_distances(distances(g.points, d.X, norm), d.y, L)
    e = ev.error
    coords = [[_f(v) for v in row] for row in g.points]
    head = _coord_header(d.dim)
    for name, values in (("surface_nsm.csv", ev.nsm), ("surface_nn.csv", ev.nn),
                         ("surface_sqerr.csv", e * e)):
        with (out / name).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head + ["value"])
            w.writerows(c + [_f(v)] for c, v in zip(coords, values))
    with (out / "regions.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head + ["kind", "n", "m", "voronoi_index"])
        for c, n, m, p in zip(coords, ev.ceiling_index, ev.floor_index, ev.voronoi_index):
            w.writerow(c + ["B" if n == m else "A", int(n), int(m), int(p)])


def cmd_eval(cfg: ExperimentConfig) -> int:
    if len(cfg.lipschitz) != 1:
        raise ConfigError(f"eval takes a single Lipschitz estimate, got {len(cfg.lipschitz)}")
    d = cfg.load_dataset()
    L = cfg.lipschitz[0]
    cfg.schedule.check_against(d, cfg.norm)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(d, cfg.out / "dataset.csv")
    write_surfaces(d, cfg.norm, L, cfg.grid, cfg.out)
    log.info("wrote surfaces for L=%s to %s", L, cfg.out)
    return 0


def run_sweep(cfg: ExperimentConfig, d: Dataset, out: Path) -> None:
    report = sweep(d, cfg.norm, cfg.schedule, cfg.grid)
    (out / "sweep.csv").write_text(report.to_csv(normalized=cfg.normalize), encoding="utf-8")
    (out / "sweep.json").write_text(report.to_json(), encoding="utf-8")
    log.info("sweep: monotone_l2=%s sup_constant=%s", report.monotone_l2, report.sup_constant)


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if len(cfg.lipschitz) < 2:
        raise ConfigError("sweep needs at least two Lipschitz estimates")
    d = cfg.load_dataset()
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(d, cfg.out / "dataset.csv")
    run_sweep(cfg, d, cfg.out)
    return 0


def run_check(cfg: ExperimentConfig, d: Dataset, out: Path) -> dict:
    L = cfg.lipschitz
    cfg.schedule.check_against(d, cfg.norm)
    report = checks.run_checks(d, cfg.norm, L[0], cfg.grid, next_L=list(L[1:]) or None,
                               truth=cfg.truth(), fastquery_points=cfg.fastquery_points)
    _write_json(out / "check.json", report)
    for name, rec in sorted(report["checks"].items()):
        log.info("%-24s %s (%d checked, %d violations)", name,
                 "PASS" if rec["passed"] else "FAIL", rec["checked"], rec["violations"])
    return report


def cmd_check(cfg: ExperimentConfig) -> int:
    d = cfg.load_dataset()
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = run_check(cfg, d, cfg.out)
    return 0 if report["passed"] else 1


def cmd_bench(cfg: ExperimentConfig) -> int:
    """Visited nodes and wall time of the exact index against a linear scan."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for dim in cfg.bench_dims:
        box = DomainBox.cube(0.0, 10.0, dim)
        for size in cfg.bench_sizes:
            d = sample_synthetic("sin_sum", box, size, cfg.seed + 1000 * dim + size)
            rng = np.random.default_rng(cfg.seed + 7919 * dim + size)
            Q = rng.uniform(box.lower, box.upper, size=(cfg.bench_queries, dim))
            L = 2.0 * get_synthetic("sin_sum").lipschitz_bound(cfg.norm, dim)
            tree = fastquery.SpatialTree(d.X, d.y)
            for mode in cfg.bench_modes:
                index = fastquery.BiasedIndex(tree, mode, L, cfg.norm)
                t0 = time.perf_counter()
                res = [index.query(q) for q in Q]
                t_tree = time.perf_counter() - t0
                t0 = time.perf_counter()
                scan = [fastquery.linear_scan(d.X, d.y, q, mode, L, cfg.norm)[0][0] for q in Q]
                t_scan = time.perf_counter() - t0
                agree = np.mean([r.index == s for r, s in zip(res, scan)]) * 100.0
                visited = float(np.mean([r.visited for r in res]))
                rows.append({
                    "N": len(d), "d": dim, "mode": mode, "norm": cfg.norm.label,
                    "queries": len(Q),
                    "mean_visited_nodes": visited,
                    "visited_per_N": visited / len(d),
                    "mean_evaluated": float(np.mean([r.evaluated for r in res])),
                    "mean_scan_comparisons": float(len(d)),
                    "wall_time_ratio": t_tree / t_scan if t_scan > 0 else float("nan"),
                    "agreement_pct": float(agree),
                })
                log.info("N=%d d=%d %s: visited %.1f, agreement %.1f%%", len(d), dim, mode,
                         visited, agree)
    with (cfg.out / "bench.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (_f(v) if isinstance(v, float) else v) for k, v in r.items()})
    return 0 if all(r["agreement_pct"] == 100.0 for r in rows) else 1


def cmd_reproduce(cfg: ExperimentConfig) -> int:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    d = cfg.load_dataset()
    _write_json(out / "config.json", cfg.to_dict() | {"surface_lipschitz": list(PRESET_SURFACE_L)})
    write_csv(d, out / "dataset.csv")

    lgrid = make_grid(d.box, PRESET_LSTAR_GRID)
    _write_json(out / "best_lipschitz.json", {
        "function": cfg.synthetic, "norm": cfg.norm.label,
        "grid_points_per_axis": PRESET_LSTAR_GRID,
        "grid_estimate": best_lipschitz_on_grid(cfg.synthetic, lgrid, cfg.norm),
        "data_lower_bound": cfg.schedule.check_against(d, cfg.norm),
    })
    for L in PRESET_SURFACE_L:
        write_surfaces(d, cfg.norm, L, cfg.grid, out / "surfaces" / f"L_{L:g}")
    run_sweep(cfg, d, out)
    report = run_check(cfg, d, out)
    return 0 if report["passed"] else 1


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "bench": cmd_bench,
    "reproduce-paper": cmd_reproduce,
}


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config; flags override it")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--dataset", type=Path, help="CSV with header x_1,...,x_d,y")
    src.add_argument("--synthetic", help="built-in ground truth id (e.g. cos_plus_sin)")
    common.add_argument("--seed", type=int, help="seed for synthetic sampling")
    common.add_argument("--n", type=int, help="number of synthetic samples")
    common.add_argument("--box", help="domain box as lo1,lo2:hi1,hi2")
    common.add_argument("--norm", choices=["1", "2", "inf"], help="l_p norm")
    common.add_argument("--lipschitz", help="list a,b,c or range start:stop:count")
    common.add_argument("--grid", type=int, help="grid points per axis")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nsmreg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="surfaces and region map for one L")
    sp = sub.add_parser("sweep", parents=[common], help="error norms over a Lipschitz schedule")
    sp.add_argument("--normalize", action="store_true", default=None,
                    help="add l2 column divided by its first entry")
    cp = sub.add_parser("check", parents=[common], help="run the invariant suite")
    cp.add_argument("--fastquery-points", type=int, help="grid points used for index checks")
    bp = sub.add_parser("bench", parents=[common], help="exact index vs linear scan")
    bp.add_argument("--sizes", type=_int_list, help="comma-separated dataset sizes")
    bp.add_argument("--dims", type=_int_list, help="comma-separated dimensions")
    bp.add_argument("--queries", type=int, help="queries per row")
    bp.add_argument("--modes", help="comma-separated subset of ceiling,floor,plain")
    rp = sub.add_parser("reproduce-paper", help="cos+sin example: surfaces, sweep and checks")
    rp.add_argument("--out", type=Path, default=Path("example_out"))
    rp.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    if args.command == "reproduce-paper":
        return example_preset(args.out).validate()
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = merge(
        cfg,
        csv=args.dataset,
        synthetic=args.synthetic,
        seed=args.seed,
        n=args.n,
        box=parse_box(args.box) if args.box else None,
        norm=NormSpec(args.norm) if args.norm else None,
        lipschitz=parse_schedule(args.lipschitz) if args.lipschitz else None,
        grid=args.grid,
        out=args.out,
        normalize=getattr(args, "normalize", None),
        fastquery_points=getattr(args, "fastquery_points", None),
        bench_sizes=getattr(args, "sizes", None),
        bench_dims=getattr(args, "dims", None),
        bench_queries=getattr(args, "queries", None),
        bench_modes=tuple(args.modes.split(",")) if getattr(args, "modes", None) else None,
    )
    if cfg.csv is None and cfg.synthetic is None:
        cfg = merge(cfg, synthetic=DEFAULT_SYNTHETIC)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except (NsmError, OSError) as exc:
        print(f"nsmreg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
