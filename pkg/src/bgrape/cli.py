"""Command-line front end.

Subcommands
-----------
optimize      train a control field from a config file; writes trace.csv,
              field_final.csv, field_best.csv and manifest.json
evaluate      held-out test loss of a field file
landscape     infidelity grid over the 2-D uncertainty box; writes
              landscape.csv and area.json
distribution  Monte-Carlo gate-error distribution of a field or baseline
              pulse; writes errors.csv and summary.json
baseline      write a rectangular or Gaussian flip pulse as a field file

Every command is a pure function of (config, seed, input files): reruns
with the same inputs produce byte-identical CSV outputs regardless of the
--threads hint.  Existing outputs are never overwritten without --force.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import ControlField, propagate
from .evaluation import (
    GridSpec,
    baseline_pulse,
    error_distribution,
    landscape,
    levelset_area,
    test_loss,
)
from .fileio import (
    TraceWriter,
    file_digest,
    read_field_csv,
    write_errors_csv,
    write_field_csv,
    write_json_atomic,
    write_landscape_csv,
)
from .objective import infidelity
from .optimizer import STREAM_BATCH, STREAM_INIT, STREAM_TEST, random_initial_field, run
from .sampling import RandomSource, draw_batch, make_scheduler

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

AREA_THRESHOLDS = (1e-2, 1e-3, 1e-4)

DEFAULT_GRID_POINTS = 41
DEFAULT_NUM_SAMPLES = 10000


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _prepare_out_dir(out: str | None, cfg_out: str | None, force: bool, filenames) -> Path:
    target = out or cfg_out
    if target is None:
        raise ConfigError("run.out: no output directory given (set run.out or pass --out)")
    out_dir = Path(target)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not force:
        existing = [name for name in filenames if (out_dir / name).exists()]
        if existing:
            raise ConfigError(
                f"output files already exist in {out_dir}: {', '.join(existing)} (rerun with --force)"
            )
    return out_dir


def _load_field(cfg: ExperimentConfig, model, path: str) -> ControlField:
    if not Path(path).exists():
        raise ConfigError(f"--field: file {path} does not exist")
    amplitudes = read_field_csv(path)
    if amplitudes.shape[1] != model.num_controls:
        raise ConfigError(
            f"--field: file has {amplitudes.shape[1]} channels, model needs {model.num_controls}"
        )
    if cfg.bound is not None and np.max(np.abs(amplitudes)) > cfg.bound:
        raise ConfigError(f"--field: amplitudes exceed the configured bound {cfg.bound}")
    return ControlField(amplitudes, cfg.duration, cfg.bound)


def _manifest_base(command: str, cfg: ExperimentConfig, seed: int, started: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": cfg.echo(),
        "config_path": cfg.source_path,
        "seed": seed,
        "started": started,
        "finished": None,
        "outputs": {},
    }


def _finish_manifest(manifest: dict, out_dir: Path, filenames) -> None:
    manifest["finished"] = _timestamp()
    manifest["outputs"] = {name: file_digest(out_dir / name) for name in filenames}
    write_json_atomic(out_dir / "manifest.json", manifest)


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.optimizer.seed = args.seed
    started = _timestamp()
    filenames = ["trace.csv", "field_final.csv", "field_best.csv"]
    out_dir = _prepare_out_dir(args.out, cfg.out, args.force, filenames + ["manifest.json"])

    model = cfg.make_model()
    target = cfg.make_target()
    dist = cfg.make_distribution()
    scheduler = make_scheduler(cfg.batch_mode, dist, cfg.batch_size, RandomSource(cfg.seed, STREAM_BATCH))
    initial = random_initial_field(
        model, cfg.segments, cfg.duration, RandomSource(cfg.seed, STREAM_INIT), cfg.bound
    )

    with TraceWriter(out_dir / "trace.csv") as writer:
        result = run(model, target, initial, scheduler, cfg.optimizer, trace_callback=writer)

    write_field_csv(out_dir / "field_final.csv", result.final_field)
    write_field_csv(out_dir / "field_best.csv", result.best_field)

    nominal = np.zeros(model.uncertainty_dim)
    final_nominal = infidelity(propagate(model, result.final_field, nominal), target)

    manifest = _manifest_base("optimize", cfg, cfg.seed, started)
    manifest["status"] = "ok"
    manifest["diverged"] = result.diverged
    manifest["results"] = {
        "iterations": result.iterations,
        "samples_used": result.samples_used,
        "final_batch_loss": result.trace.rows[-1].batch_loss,
        "final_test_loss": result.final_test_loss,
        "best_test_loss": result.best_test_loss,
        "best_iteration": result.best_iteration,
        "final_nominal_infidelity": final_nominal,
    }
    _finish_manifest(manifest, out_dir, filenames)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    started = _timestamp()
    out_dir = _prepare_out_dir(args.out, cfg.out, args.force, ["evaluate.json"])
    model = cfg.make_model()
    target = cfg.make_target()
    field = _load_field(cfg, model, args.field)
    if field.num_segments != cfg.segments:
        raise ConfigError(
            f"--field: file has {field.num_segments} segments, config says {cfg.segments}"
        )
    samples = draw_batch(cfg.make_distribution(), RandomSource(seed, STREAM_TEST), args.samples)
    loss = test_loss(model, field, target, samples)
    payload = {
        "command": "evaluate",
        "version": __version__,
        "config_path": cfg.source_path,
        "field": str(args.field),
        "seed": seed,
        "num_samples": args.samples,
        "test_loss": loss,
        "started": started,
        "finished": _timestamp(),
    }
    write_json_atomic(out_dir / "evaluate.json", payload)
    return EXIT_OK


def cmd_landscape(args) -> int:
    cfg = load_config(args.config)
    started = _timestamp()
    filenames = ["landscape.csv", "area.json"]
    out_dir = _prepare_out_dir(args.out, cfg.out, args.force, filenames)
    model = cfg.make_model()
    if model.uncertainty_dim != 2:
        raise ConfigError("landscape: requires a model with a 2-D uncertainty (three_qubit_coupling)")
    target = cfg.make_target()
    field = _load_field(cfg, model, args.field)
    dist = cfg.make_distribution()
    grid = GridSpec(tuple(dist.lo), tuple(dist.hi), (args.grid, args.grid))
    ls = landscape(model, field, target, grid, threshold=args.threshold)
    write_landscape_csv(out_dir / "landscape.csv", grid, ls.values)
    thresholds = sorted(set(AREA_THRESHOLDS) | {args.threshold})
    payload = {
        "command": "landscape",
        "version": __version__,
        "config_path": cfg.source_path,
        "field": str(args.field),
        "grid_points": args.grid,
        "box": {"lo": list(dist.lo), "hi": list(dist.hi)},
        "cell_area": grid.cell_area,
        "areas": {repr(t): levelset_area(ls, t) for t in thresholds},
        "started": started,
        "finished": _timestamp(),
    }
    write_json_atomic(out_dir / "area.json", payload)
    return EXIT_OK


def cmd_distribution(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    started = _timestamp()
    filenames = ["errors.csv", "summary.json"]
    out_dir = _prepare_out_dir(args.out, cfg.out, args.force, filenames)
    model = cfg.make_model()
    target = cfg.make_target()
    if args.baseline is not None:
        field = baseline_pulse(args.baseline, cfg.duration, cfg.segments)
        field_label = f"baseline:{args.baseline}"
    else:
        if args.field is None:
            raise ConfigError("distribution: pass --field FILE or --baseline {rectangular,gaussian}")
        field = _load_field(cfg, model, args.field)
        field_label = str(args.field)
    dist = cfg.make_distribution()
    result = error_distribution(model, field, target, dist, args.samples, RandomSource(seed, STREAM_TEST))
    write_errors_csv(out_dir / "errors.csv", result.errors)
    payload = {
        "command": "distribution",
        "version": __version__,
        "config_path": cfg.source_path,
        "field": field_label,
        "seed": seed,
        "summary": result.summary(),
        "started": started,
        "finished": _timestamp(),
    }
    write_json_atomic(out_dir / "summary.json", payload)
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = load_config(args.config)
    filename = f"field_baseline_{args.kind}.csv"
    out_dir = _prepare_out_dir(args.out, cfg.out, args.force, [filename])
    field = baseline_pulse(args.kind, cfg.duration, cfg.segments)
    write_field_csv(out_dir / filename, field)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bgrape",
        description="Mini-batch stochastic GRAPE for robust, high-precision quantum gate control.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_seed=True):
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides run.out)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--threads", type=int, default=1, help="worker-count hint; results do not depend on it")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_opt = sub.add_parser("optimize", help="train a control field")
    common(p_opt)
    p_opt.set_defaults(handler=cmd_optimize)

    p_eval = sub.add_parser("evaluate", help="held-out test loss of a field file")
    common(p_eval)
    p_eval.add_argument("--field", required=True, help="field CSV to evaluate")
    p_eval.add_argument("--samples", type=int, default=1000, help="test-set size")
    p_eval.set_defaults(handler=cmd_evaluate)

    p_land = sub.add_parser("landscape", help="robustness landscape over the uncertainty box")
    common(p_land, needs_seed=False)
    p_land.add_argument("--field", required=True, help="field CSV to scan")
    p_land.add_argument("--grid", type=int, default=DEFAULT_GRID_POINTS, help="grid points per axis")
    p_land.add_argument("--threshold", type=float, default=1e-3, help="level-set threshold")
    p_land.set_defaults(handler=cmd_landscape)

    p_dist = sub.add_parser("distribution", help="Monte-Carlo gate-error distribution")
    common(p_dist)
    p_dist.add_argument("--field", default=None, help="field CSV to evaluate")
    p_dist.add_argument("--baseline", choices=["rectangular", "gaussian"], default=None)
    p_dist.add_argument("--samples", type=int, default=DEFAULT_NUM_SAMPLES)
    p_dist.set_defaults(handler=cmd_distribution)

    p_base = sub.add_parser("baseline", help="write a baseline flip pulse as a field file")
    common(p_base, needs_seed=False)
    p_base.add_argument("kind", choices=["rectangular", "gaussian"])
    p_base.set_defaults(handler=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
