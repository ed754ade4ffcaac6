"""Command-line driver: deterministic batch experiments from a YAML config.

Commands: bifurcate, sample, sweep, scan, dataset (generate/normalize/
inspect).  Every command reads one config file, writes CSV/JSON artifacts
plus a manifest.json into --out, and is bit-reproducible for a fixed
config and seed.  Exit codes: 0 success, 2 config/input error, 3 numerical
failure.

--threads is accepted and recorded in the manifest; the numerical kernels
are vectorized single-threaded numpy, so results never depend on it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, bifurcation, config as cfgmod, samplers
from .errors import (ConfigError, DegenerateDataError, DomainError,
                     NumericalError, ParseError, ShapeError)

_CONFIG_ERRORS = (ConfigError, ParseError, DomainError, ShapeError,
                  DegenerateDataError)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_manifest(out: Path, command: str, cfg: dict, seed, threads: int,
                    outputs: list[str], t0: float) -> None:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    manifest = {
        "command": command,
        "config": cfg,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed_override": seed,
        "threads": threads,
        "outputs": outputs,
        "wall_time_s": round(time.monotonic() - t0, 3),
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "symbreak": __version__,
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _points_rows(path: Path, pts: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(pts):
            writer.writerow([_fmt(v) for v in row])


def cmd_bifurcate(cfg: dict, out: Path) -> list[str]:
    settings = cfgmod.build_bifurcate(cfg)
    thetas = np.linspace(settings["theta_start"], settings["theta_stop"],
                         settings["theta_count"])
    branches = bifurcation.bifurcation_diagram_1d(thetas)
    bifurcation.write_branches_csv(branches, out / "branches.csv")
    report = {"theta_c_1d": bifurcation.critical_theta_1d()}
    if settings["sphere_d"] is not None:
        report["theta_star_sphere"] = bifurcation.critical_theta_sphere(
            settings["sphere_d"], settings["sphere_r"])
        report["sphere_d"] = settings["sphere_d"]
        report["sphere_r"] = settings["sphere_r"]
    if settings["sweep_csv"]:
        grid, curve = _read_sweep_table(Path(settings["sweep_csv"]))
        knee = samplers.estimate_knee(grid, curve)
        report["knee"] = {
            "s_start": knee.s_start,
            "second_difference": knee.second_difference,
            "low_confidence": knee.low_confidence,
        }
    with open(out / "critical.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ["branches.csv", "critical.json"]


def cmd_sample(cfg: dict, out: Path, seed_override) -> list[str]:
    model = cfgmod.build_model(cfg)
    scfg, batch, keep = cfgmod.build_sampler(cfg, model.schedule, seed_override)
    run = samplers.run_sampler(model, scfg, batch, keep_trajectories=keep)
    _points_rows(out / "finals.csv", run.finals)
    outputs = ["finals.csv"]
    if keep:
        with open(out / "trajectories.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "s", "chain"]
                            + [f"x_{i}" for i in range(model.dataset.dim)])
            for k, s in enumerate(run.s_grid):
                for i in range(batch):
                    writer.writerow([k, _fmt(s), i]
                                    + [_fmt(v) for v in run.trajectories[i, k]])
        outputs.append("trajectories.csv")
    return outputs


def cmd_sweep(cfg: dict, out: Path, seed_override) -> list[str]:
    model = cfgmod.build_model(cfg)
    scfg, batch, _ = cfgmod.build_sampler(cfg, model.schedule, seed_override)
    grid, repeats = cfgmod.build_sweep(cfg, model.schedule)
    reference = model.dataset.points
    metric = lambda finals: analysis.frechet_gaussian(reference, finals).frechet
    result = samplers.late_start_sweep(
        model, scfg.kind, scfg.n_steps, grid, metric, init=scfg.init,
        batch=batch, seed=scfg.seed, repeats=repeats, s_min=scfg.s_min)
    label = cfg.get("dataset", {}).get("kind", "dataset")
    mean = result.mean()
    with open(out / "sweep_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset"] + [f"s={g:.6g}" for g in grid])
        writer.writerow([label] + [_fmt(v) for v in mean])
    with open(out / "sweep_runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s_start", "repeat", "frechet"])
        for r in range(result.values.shape[0]):
            for i, g in enumerate(grid):
                writer.writerow([_fmt(g), r, _fmt(result.values[r, i])])
    knee = samplers.estimate_knee(np.asarray(grid), mean)
    with open(out / "knee.json", "w") as fh:
        json.dump({"s_start": knee.s_start,
                   "second_difference": knee.second_difference,
                   "low_confidence": knee.low_confidence},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ["sweep_table.csv", "sweep_runs.csv", "knee.json"]


def _anchor_pair(model, run) -> tuple[int, int]:
    """First chain, plus the first chain committed to a different data point."""
    pts = model.dataset.points
    d2 = (np.sum(run.finals ** 2, axis=1)[:, None]
          - 2.0 * run.finals @ pts.T + np.sum(pts ** 2, axis=1)[None, :])
    modes = np.argmin(d2, axis=1)
    first = 0
    others = np.flatnonzero(modes != modes[first])
    second = int(others[0]) if others.size else min(1, len(modes) - 1)
    return first, second


def cmd_scan(cfg: dict, out: Path, seed_override) -> list[str]:
    model = cfgmod.build_model(cfg)
    scfg, batch, _ = cfgmod.build_sampler(cfg, model.schedule, seed_override)
    times, n_alpha, window = cfgmod.build_scan(cfg, model.schedule)
    run = samplers.run_sampler(model, scfg, batch, keep_trajectories=True)
    t_nodes = model.schedule.horizon - run.s_grid
    node_idx = [int(np.argmin(np.abs(t_nodes - t))) for t in times]
    ia, ib = _anchor_pair(model, run)
    x1 = run.trajectories[ia, node_idx]
    x2 = run.trajectories[ib, node_idx]
    node_times = t_nodes[node_idx]
    alpha = analysis.default_alpha_grid(n_alpha)
    scan = analysis.potential_scan(model, x1, x2, alpha, node_times)
    with open(out / "scan.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "s", "theta", "n_minima"]
                        + [f"alpha={a:.6g}" for a in alpha])
        for i, t in enumerate(node_times):
            s = model.schedule.horizon - t
            writer.writerow(
                [_fmt(t), _fmt(s), _fmt(model.schedule.theta_at(s)),
                 analysis.count_local_minima(scan.values[i], window)]
                + [_fmt(v) for v in scan.values[i]])
    return ["scan.csv"]


def cmd_dataset(cfg: dict, out: Path, action: str, seed_override) -> list[str]:
    if seed_override is not None:
        sec = cfg.get("dataset")
        if isinstance(sec, dict):
            sec["seed"] = seed_override
    if action == "normalize" and "normalize" not in cfg.get("dataset", {}):
        cfg.setdefault("dataset", {})["normalize"] = {"radius": 1.0}
    ds = cfgmod.build_dataset(cfg)
    if action in ("generate", "normalize"):
        from .datasets import save_csv
        save_csv(ds, out / "points.csv")
        return ["points.csv"]
    norms = np.linalg.norm(ds.points, axis=1)
    report = {
        "n_points": ds.n_points,
        "dim": ds.dim,
        "mean": [float(v) for v in ds.points.mean(axis=0)],
        "min_norm": float(norms.min()),
        "max_norm": float(norms.max()),
        "radius": ds.radius,
        "centered": ds.centered,
    }
    with open(out / "inspect.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True))
    return ["inspect.json"]


def _read_sweep_table(path: Path) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"bifurcate.sweep_csv: cannot read {path}: {exc}") from exc
    if len(rows) < 2 or len(rows[0]) < 6:
        raise ConfigError("bifurcate.sweep_csv: not a sweep table "
                          "(need a header row and >= 5 s_start columns)")
    try:
        grid = np.array([float(h.split("=", 1)[1]) for h in rows[0][1:]])
        curve = np.array([float(v) for v in rows[1][1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bifurcate.sweep_csv: malformed table: {exc}") from exc
    return grid, curve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symbreak",
        description="Exact-score diffusion experiments over finite datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p):
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's sampler/dataset seed")
        p.add_argument("--threads", type=int, default=1,
                       help="recorded in the manifest; results never depend on it")

    _common(sub.add_parser("bifurcate", help="1D branch diagram and critical values"))
    _common(sub.add_parser("sample", help="run a sampler, write finals"))
    _common(sub.add_parser("sweep", help="late-start metric sweep and knee"))
    _common(sub.add_parser("scan", help="potential scans along an interpolation path"))
    pds = sub.add_parser("dataset", help="generate / normalize / inspect a dataset")
    pds.add_argument("action", choices=("generate", "normalize", "inspect"))
    _common(pds)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    t0 = time.monotonic()
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = cfgmod.load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "bifurcate":
            outputs = cmd_bifurcate(cfg, out)
        elif args.command == "sample":
            outputs = cmd_sample(cfg, out, args.seed)
        elif args.command == "sweep":
            outputs = cmd_sweep(cfg, out, args.seed)
        elif args.command == "scan":
            outputs = cmd_scan(cfg, out, args.seed)
        else:
            outputs = cmd_dataset(cfg, out, args.action, args.seed)
        _write_manifest(out, args.command, cfg, args.seed, args.threads,
                        outputs, t0)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
