"""Command-line entry point: ``tfrlab run | describe | validate | dump-tfr``.

Exit codes: 0 success, 2 config error, 3 some sweep points failed (the
manifest lists them).  ``TFRLAB_OUT`` overrides ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import __version__, io
from .experiments import ExperimentConfig, expand_points, load_config, run_point, tfr_for_point

__all__ = ["main", "run_experiment", "list_presets", "preset_path", "EXIT_OK", "EXIT_CONFIG", "EXIT_PARTIAL"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def list_presets() -> list[str]:
    root = resources.files("tfrlab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_path(name: str) -> Path:
    path = Path(str(resources.files("tfrlab") / "presets" / f"{name}.yaml"))
    if not path.exists():
        raise FileNotFoundError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path


def _versions() -> dict:
    import numpy
    import scipy

    return {"tfrlab": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _point_task(args):
    cfg, pt, out_dir = args
    try:
        return pt["index"], run_point(cfg, pt, out_dir), None
    except Exception as exc:  # per-point failures are recorded, the run continues
        return pt["index"], None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


def run_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> dict:
    """Run every sweep point and write ``<table>.csv`` files plus ``manifest.json``.

    Rows are written in sweep-index order regardless of completion order.

    Returns:
        The manifest dictionary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = expand_points(cfg)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    tasks = [(cfg, pt, str(out_dir)) for pt in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    tables: dict[str, list] = {}
    failures = []
    for idx, res, err in results:
        if err is not None:
            failures.append({"index": idx, "params": points[idx]["params"], "error": err})
            continue
        for name, rows in res.items():
            tables.setdefault(name, []).extend(rows)
    outputs = []
    for name in sorted(tables):
        path = io.write_rows_csv(out_dir / f"{name}.csv", tables[name])
        outputs.append(path.name)
    manifest = {
        "name": cfg.name,
        "kind": cfg.kind,
        "config": cfg.raw,
        "seed": cfg.seed,
        "n_seeds": cfg.n_seeds,
        "n_points": len(points),
        "axes": {k: list(v) for k, v in cfg.axes.items()},
        "outputs": outputs,
        "failures": failures,
        "versions": _versions(),
        "started": started,
        "wall_time_s": time.perf_counter() - t0,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(io._jsonable(manifest), fh, indent=2, sort_keys=True)
    return manifest


def _resolve_config(args):
    if args.config and args.preset:
        return None, [("--config/--preset", "give one of --config or --preset, not both")]
    if args.preset:
        try:
            source = preset_path(args.preset)
        except FileNotFoundError as exc:
            return None, [("--preset", str(exc))]
    elif args.config:
        source = args.config
    else:
        return None, [("--config", "a config file or --preset is required")]
    cfg, errors = load_config(source)
    if cfg is not None and args.seed is not None:
        cfg.seed = int(args.seed)
        cfg.raw["seed"] = cfg.seed
    return cfg, errors


def _report_errors(errors):
    for path, msg in errors:
        print(f"error: {path}: {msg}", file=sys.stderr)


def _out_dir(args, cfg):
    base = os.environ.get("TFRLAB_OUT") or args.out or "tfrlab_out"
    return Path(base) / cfg.name


def _describe(cfg: ExperimentConfig) -> str:
    lines = [f"{cfg.name}: {cfg.kind}"]
    if cfg.extra.get("description"):
        lines.append(f"  {cfg.extra['description']}")
    if cfg.extra.get("slow"):
        lines.append("  marked slow: full-resolution sweep")
    lines.append(f"  fs={cfg.fs:g} Hz, duration={cfg.duration:g} s, padding={cfg.padding}, seed={cfg.seed}")
    lines.append(f"  windows: {', '.join(cfg.window)}; f0={cfg.f0:g}")
    for name, vals in cfg.axes.items():
        shown = ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in vals[:6])
        more = ", ..." if len(vals) > 6 else ""
        lines.append(f"  axis {name}: {len(vals)} values [{shown}{more}]")
    sizes = " x ".join(str(len(v)) for v in cfg.axes.values()) or "1"
    reps = f" x {cfg.n_seeds} seeds" if cfg.kind == "NoiseSweep" and cfg.n_seeds > 1 else ""
    lines.append(f"  sweep: {sizes} = {cfg.n_points} points{reps}")
    return "\n".join(lines)


def _cmd_validate(args) -> int:
    cfg, errors = _resolve_config(args)
    if errors:
        _report_errors(errors)
        return EXIT_CONFIG
    print(f"OK, {cfg.n_points} points")
    return EXIT_OK


def _cmd_describe(args) -> int:
    cfg, errors = _resolve_config(args)
    if errors:
        _report_errors(errors)
        return EXIT_CONFIG
    print(_describe(cfg))
    print(f"OK, {cfg.n_points} points")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg, errors = _resolve_config(args)
    if errors:
        _report_errors(errors)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    manifest = run_experiment(cfg, out, max(1, args.jobs))
    n_fail = len(manifest["failures"])
    print(f"{cfg.name}: {manifest['n_points'] - n_fail}/{manifest['n_points']} points OK -> {out}")
    if n_fail:
        for f in manifest["failures"]:
            print(f"  point {f['index']} failed: {f['error'].splitlines()[0]}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_dump(args) -> int:
    cfg, errors = _resolve_config(args)
    if errors:
        _report_errors(errors)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    failed = 0
    for pt in expand_points(cfg):
        try:
            tfrs = tfr_for_point(cfg, pt, squeezed=args.squeezed)
        except Exception as exc:
            print(f"  point {pt['index']} failed: {exc}", file=sys.stderr)
            failed += 1
            continue
        for t in tfrs:
            path, _ = io.write_tfr(out / f"point{pt['index']:04d}_{t.kind}.tfr", t,
                                   {"point": pt["params"], "signal": pt["signal"], "config": cfg.name})
            print(path)
    return EXIT_PARTIAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfrlab", description="Time-frequency analysis experiments.")
    parser.add_argument("--version", action="version", version=f"tfrlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment YAML file")
        p.add_argument("--preset", help="packaged config name (see 'tfrlab describe --list')")
        p.add_argument("--seed", type=int, help="override the config's base seed")
        p.add_argument("--out", help="output directory (TFRLAB_OUT takes precedence)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
        return p

    common(sub.add_parser("run", help="run an experiment and write CSV + manifest"))
    d = common(sub.add_parser("describe", help="print the resolved sweep plan"))
    d.add_argument("--list", action="store_true", help="list packaged presets")
    common(sub.add_parser("validate", help="check a config without running it"))
    dump = common(sub.add_parser("dump-tfr", help="write binary TFR dumps for every sweep point"))
    dump.add_argument("--squeezed", action="store_true", help="also dump the synchrosqueezed TFR")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "describe" and args.list:
        print("\n".join(list_presets()))
        return EXIT_OK
    handlers = {"run": _cmd_run, "describe": _cmd_describe, "validate": _cmd_validate, "dump-tfr": _cmd_dump}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
