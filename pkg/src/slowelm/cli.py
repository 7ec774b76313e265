"""Command-line entry point: ``slowelm synth|train|eval|bench``.

Every ``RunConfig`` key is also a flag (``--n_w`` or ``--n-w``). Values are
resolved as defaults < inherited config < ``--config`` file < flags, where the
inherited config is the suite's ``config.txt`` for ``train`` and the model's
``.cfg`` sidecar for ``eval`` and ``bench``.

Failures print one JSON line ``{"error": <category>, "message": ...}`` to
stderr and exit with the category's code.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import bench as benchmod
from . import elm
from .config import ConfigError, RunConfig, load_config, parse_config_text
from .dataset import DataError, load_split, read_manifest, write_suite
from .evaluate import SWEEPS, evaluate
from .events import ParseError, ValidationError, num_windows, read_event_file, window_by_count
from .pipeline import fit_head, hidden_matrix

log = logging.getLogger("slowelm")

EXIT_CODES = {"internal": 1, "config": 2, "data": 3, "numerical": 4, "model_file": 5}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _categorize(exc: BaseException) -> str:
    if isinstance(exc, CliError):
        return exc.category
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, elm.ModelFileError):
        return "model_file"
    if isinstance(exc, (elm.RankError, np.linalg.LinAlgError, FloatingPointError)):
        return "numerical"
    if isinstance(exc, (DataError, ParseError, ValidationError, OSError)):
        return "data"
    return "internal"


def _sidecar(model_path) -> Path:
    return Path(str(model_path) + ".cfg")


def _resolve(args, inherited=None) -> RunConfig:
    base = RunConfig()
    if inherited is not None and Path(inherited).exists():
        try:
            base = RunConfig(**{**asdict(base), **parse_config_text(Path(inherited).read_text())})
        except TypeError as e:
            raise ConfigError(f"{inherited}: {e}") from None
    overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return load_config(args.config, overrides, base)


def _write_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_synth(args) -> int:
    cfg = _resolve(args)
    records = write_suite(args.out, cfg)
    print(f"wrote {len(records)} recordings to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve(args, Path(args.data) / "config.txt")
    records = read_manifest(args.data)
    train_recs = [r for r in records if r["split"] == "train"]
    if not train_recs:
        raise DataError("manifest train split is empty")
    expected = sum(num_windows(int(r["events"]), cfg.n_w, cfg.stride) for r in train_recs)
    if expected < 2:
        raise DataError(f"train split yields {expected} windows at n_w={cfg.n_w}")
    if cfg.k > expected - 1:
        raise elm.RankError(cfg.k, expected - 1)
    num_objects = max(int(r["object_id"]) for r in records) + 1
    if num_objects > cfg.objects:
        raise ConfigError(f"manifest has {num_objects} objects but objects={cfg.objects}")

    t0 = time.perf_counter()
    ds = load_split(args.data, "train", cfg, records)
    t_feat = time.perf_counter() - t0
    hidden = elm.init_hidden(ds.X.shape[1], cfg.n_hidden, cfg.seed)
    H = hidden_matrix(ds.X, hidden)
    model, tlog = fit_head(H, ds, hidden, cfg.k, cfg.mode, cfg.C, cfg.objects, cfg.pose_bins, cfg.eps)
    t_fit = time.perf_counter() - t0 - t_feat

    model_path = Path(args.model)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    elm.save_model(model, model_path)
    _sidecar(model_path).write_text(cfg.to_text())
    log_path = Path(args.log) if args.log else model_path.parent / "train_log.json"
    payload = {
        **asdict(tlog),
        "config": cfg.as_dict(),
        "seconds": {"featurize": t_feat, "fit": t_fit},
    }
    log_path.write_text(json.dumps(payload, indent=2, default=list) + "\n")
    res = ", ".join(f"{k}={v:.3g}" for k, v in tlog.residuals.items())
    print(f"trained {cfg.mode} k={cfg.k} on {tlog.samples} windows -> {model_path} ({res or 'no residuals'})")
    return 0


def _check_compat(model: elm.SlowElmModel, cfg: RunConfig) -> None:
    if model.hidden.input_dim != cfg.side * cfg.side:
        raise ConfigError(f"model expects {model.hidden.input_dim} inputs but side={cfg.side}")
    if model.pose_bins != cfg.pose_bins:
        raise ConfigError(f"model has {model.pose_bins} pose bins but pose_bins={cfg.pose_bins}")


def cmd_eval(args) -> int:
    cfg = _resolve(args, _sidecar(args.model))
    model = elm.load_model(args.model)
    _check_compat(model, cfg)
    sweeps = tuple(s for s in args.sweeps.split(",") if s) if args.sweeps is not None else SWEEPS
    bad = set(sweeps) - set(SWEEPS)
    if bad:
        raise ConfigError(f"unknown sweeps {sorted(bad)}; choose from {SWEEPS}")
    records = read_manifest(args.data)
    test = load_split(args.data, "test", cfg, records)
    if test.object_id.max() >= model.num_objects:
        raise DataError(f"test split has object {test.object_id.max()} but model knows {model.num_objects}")
    needs_train = "projection_count" in sweeps or (
        "multiview" in sweeps and any(m != model.projection.mode for m in cfg.multiview_modes)
    )
    train = load_split(args.data, "train", cfg, records) if needs_train else None
    try:
        report = evaluate(
            model, test, train, sweeps, cfg.k_sweep, cfg.sweep_modes, cfg.spans,
            cfg.multiview_modes, C=cfg.C, eps=cfg.eps, seed=cfg.seed,
        )
    except ValueError as e:
        if "no samples" in str(e):
            raise DataError(str(e)) from None
        raise
    out = Path(args.out)
    files = report.write(out)
    t = report.timing
    t["cls_per_s"] = t["samples"] * t["heads"] / t["batch_predict_s"] if t["batch_predict_s"] > 0 else float("nan")
    (out / "timing.json").write_text(json.dumps(t, indent=2) + "\n")
    print(f"object accuracy {report.object_accuracy:.4f} on {report.test_samples} balanced test windows; "
          f"wrote {', '.join(f.name for f in files)}")
    return 0


def _bench_source(args, cfg: RunConfig):
    """(input vectors, event windows, sensor size) from the first test recordings."""
    records = [r for r in read_manifest(args.data) if r["split"] == "test"][: args.recordings]
    if not records:
        raise DataError("no test recordings to benchmark on")
    ds = load_split(args.data, "test", cfg, records)
    windows, width, height = [], cfg.width, cfg.height
    for r in records:
        stream = read_event_file(os.path.join(args.data, r["path"]), width=cfg.width, height=cfg.height)
        windows.extend(window_by_count(stream, cfg.n_w, cfg.stride))
        width, height = stream.width, stream.height
    return ds.X, windows, width, height


def run_bench(model: elm.SlowElmModel, X, windows, cfg: RunConfig, width: int, height: int,
              duration: float, workers: int = 0) -> list:
    results = []
    for k in cfg.bench_ks:
        if k > model.projection.k:
            log.warning("bench k=%d exceeds model k=%d; skipped", k, model.projection.k)
            continue
        m = benchmod.with_k(model, k)
        results.append(benchmod.bench_vectors(m, X, duration))
        if windows:
            results.append(benchmod.bench_windows(m, windows, duration, width, height,
                                                  cfg.trim_fraction, cfg.smooth_dist))
        if workers > 1:
            results.append(benchmod.bench_parallel(m, X, duration, workers))
    return results


def cmd_bench(args) -> int:
    cfg = _resolve(args, _sidecar(args.model))
    model = elm.load_model(args.model)
    _check_compat(model, cfg)
    X, windows, width, height = _bench_source(args, cfg)
    results = run_bench(model, X, windows, cfg, width, height, cfg.bench_duration, args.workers)
    if not results:
        raise ConfigError(f"no bench_ks <= model k={model.projection.k}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.as_row() for r in results]
    _write_csv(out / "bench.csv", rows)
    (out / "bench.json").write_text(json.dumps({"hardware": benchmod.hardware(), "results": rows}, indent=2) + "\n")
    for r in results:
        p99 = "-" if np.isnan(r.p99_ms) else f"{r.p99_ms:.3f}ms"
        print(f"{r.label:>9} k={r.k:<4} workers={r.workers} mean={r.mean_ms:.3f}ms p99={p99} "
              f"{r.cls_per_s:,.0f} cls/s")
    return 0


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    g = p.add_argument_group("config keys (override the config file)")
    for f in fields(RunConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        g.add_argument(*names, dest=f.name, default=None, metavar=f.name.upper(),
                       help=f"default {getattr(RunConfig, f.name)!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowelm", description="Slow-feature ELM on event-camera recordings.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render the synthetic recording suite")
    p.add_argument("--out", required=True, help="suite directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model on the train split")
    p.add_argument("--data", required=True, help="suite directory")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--log", help="training log path (default: train_log.json beside the model)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the test split")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--sweeps", help=f"comma list from {','.join(SWEEPS)} (default all; empty for none)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="single-sample inference throughput")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--recordings", type=int, default=4, help="test recordings used as the sample source")
    p.add_argument("--workers", type=int, default=0, help="threads for the separate parallel throughput run")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit category
        cat = _categorize(exc)
        print(json.dumps({"error": cat, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        if cat == "internal":
            log.debug("internal error", exc_info=True)
        return EXIT_CODES[cat]


if __name__ == "__main__":
    sys.exit(main())
