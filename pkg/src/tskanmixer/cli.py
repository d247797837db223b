"""Command-line entry point: ``tskanmixer {train,eval,gradcheck,benchmark}``.

Exit codes: 0 success, 1 numeric failure, 2 configuration error, 3 I/O error.
The default output directory comes from ``$TSKANMIXER_OUT`` (else ``runs``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError
from .data_io import CsvFormatError, SplitError, load_registry, load_run_config, parse_run_config
from .kan import GridError
from .mixer import ConfigError, ForecastModel, ModelConfig
from .pipeline import evaluate_checkpoint, run_training
from .report import BenchmarkReport
from .tensor import NonFiniteError, ShapeError
from .training import DataError, TrainingDivergedError, gradient_check

OUT_ENV = "TSKANMIXER_OUT"
EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("tskanmixer")


def _default_out():
    return os.environ.get(OUT_ENV, "runs")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (NonFiniteError, TrainingDivergedError, FloatingPointError)):
        return EXIT_NUMERIC
    if isinstance(exc, (OSError, CsvFormatError, CheckpointError, UnicodeDecodeError)):
        return EXIT_IO
    if isinstance(exc, (ConfigError, SplitError, DataError, GridError, ShapeError, ValueError, KeyError, TypeError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def cmd_train(args) -> int:
    registry = load_registry(args.registry) if args.registry else None
    model_cfg, train_cfg, spec = load_run_config(args.config, registry)
    if args.seed is not None:
        model_cfg.seed = train_cfg.seed = args.seed
    out = Path(args.out or _default_out())
    summary = run_training(args.data, model_cfg, train_cfg, spec, out, args.lookback_from_previous)
    print(json.dumps({"valid_mse": summary["valid_mse"], "valid_mae": summary["valid_mae"],
                      "best_epoch": summary["best_epoch"], "out": str(out)}))
    return EXIT_OK


def cmd_eval(args) -> int:
    result = evaluate_checkpoint(args.checkpoint, args.data, args.partition)
    print(json.dumps(result))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    kan = {} if args.variant == "tsmixer" else {"kan_dim": args.kan_dim, "kan_grid": args.grid, "kan_k": args.k}
    cfg = ModelConfig(variant=args.variant, L=args.L, H=args.H, C=args.C, blocks=args.blocks,
                      hidden_size=args.hidden, dropout=args.dropout, seed=args.seed, **kan)
    model = ForecastModel(cfg)
    rng = np.random.default_rng(args.seed)
    x = rng.normal(size=(args.batch, args.L, args.C))
    y = rng.normal(size=(args.batch, args.H, args.C))
    err = gradient_check(model, (x, y), eps=args.eps, max_params=args.max_params, seed=args.seed)
    ok = err < args.threshold
    print(json.dumps({"variant": args.variant, "max_relative_error": err,
                      "threshold": args.threshold, "passed": bool(ok)}))
    return EXIT_OK if ok else EXIT_NUMERIC


def _suite_run(entry, out_root, registry_path, lookback):
    """One benchmark entry; failures are captured in the returned summary."""
    name = f"{entry['dataset']}__{entry['variant']}__seed{entry.get('seed', 0)}"
    run_dir = Path(out_root) / "runs" / name
    try:
        registry = load_registry(registry_path) if registry_path else None
        doc = json.loads(Path(entry["config"]).read_text(encoding="utf-8"))
        doc.update({"dataset": entry["dataset"], "variant": entry["variant"]})
        if "seed" in entry:
            doc["seed"] = entry["seed"]
        model_cfg, train_cfg, spec = parse_run_config(doc, registry)
        return run_training(entry["data"], model_cfg, train_cfg, spec, run_dir,
                            entry.get("lookback_from_previous", lookback))
    except Exception as exc:  # recorded, suite continues
        summary = {"dataset": entry.get("dataset"), "variant": entry.get("variant"),
                   "seed": entry.get("seed"), "status": f"failed: {type(exc).__name__}: {exc}"}
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        return summary


def cmd_benchmark(args) -> int:
    suite = json.loads(Path(args.suite).read_text(encoding="utf-8"))
    if not isinstance(suite, list) or not suite:
        raise ConfigError("benchmark suite must be a non-empty JSON list")
    for i, entry in enumerate(suite):
        missing = [k for k in ("dataset", "variant", "config", "data") if k not in entry]
        if missing:
            raise ConfigError(f"suite entry {i} missing key(s) {missing}")
    out = Path(args.out or _default_out())
    if args.jobs > 1:
        # parallel across datasets only; runs of one dataset stay sequential
        groups = {}
        for entry in suite:
            groups.setdefault(entry["dataset"], []).append(entry)
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {ds: pool.submit(_run_group, g, out, args.registry, args.lookback_from_previous)
                       for ds, g in groups.items()}
            by_ds = {ds: f.result() for ds, f in futures.items()}
        summaries = [s for ds in groups for s in by_ds[ds]]
    else:
        summaries = [_suite_run(e, out, args.registry, args.lookback_from_previous) for e in suite]
    report = BenchmarkReport.from_summaries(summaries)
    report.write(out)
    sys.stdout.write(report.render_text())
    return EXIT_OK


def _run_group(entries, out, registry, lookback):
    return [_suite_run(e, out, registry, lookback) for e in entries]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tskanmixer", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one model from a run config")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./runs)")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--registry", default=None, help="dataset registry JSON (default: bundled)")
    t.add_argument("--lookback-from-previous", action="store_true",
                   help="let valid/test inputs reach into the preceding partition")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on its dataset's test split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--partition", choices=("train", "valid", "test"), default="test")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gradcheck", help="finite-difference check of a toy model")
    g.add_argument("--variant", choices=("tsmixer", "tskanmixer_v01", "tskanmixer_v02"), required=True)
    g.add_argument("--L", type=int, default=8)
    g.add_argument("--H", type=int, default=4)
    g.add_argument("--C", type=int, default=3)
    g.add_argument("--blocks", type=int, default=2)
    g.add_argument("--hidden", type=int, default=6)
    g.add_argument("--kan-dim", type=int, default=5)
    g.add_argument("--grid", type=int, default=3)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--dropout", type=float, default=0.1)
    g.add_argument("--batch", type=int, default=4)
    g.add_argument("--eps", type=float, default=1e-5)
    g.add_argument("--threshold", type=float, default=1e-5)
    g.add_argument("--max-params", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gradcheck)

    b = sub.add_parser("benchmark", help="run a suite of (dataset, variant) trainings and report")
    b.add_argument("--suite", required=True)
    b.add_argument("--out", default=None)
    b.add_argument("--registry", default=None)
    b.add_argument("--jobs", type=int, default=1, help="parallel workers across datasets")
    b.add_argument("--lookback-from-previous", action="store_true")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        code = exit_code_for(exc)
        print(f"tskanmixer {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
