"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 sampler or
transport error.
"""

import argparse
import logging
import os
import sys
import typing
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    DEFAULT_PALETTE,
    RasterSpec,
    export_map,
    load_csv,
    load_features,
    make_blobs,
    read_predictions,
    save_csv,
    write_predictions,
)
from .errors import ConfigError, DataError, QmsvmError
from .eval import (
    accuracy_from_confusion,
    benchmark,
    confusion,
    macro_f1_from_confusion,
    write_metrics_csv,
    write_timing_csv,
)
from .model import load_model, predict, save_model
from .pipeline import AUTO_EXACT_MAX_DIM, RunConfig, train
from .qubo import load_qubo
from .sampler import AnnealConfig, RemoteConfig, solve_exact, solve_remote, solve_sa

log = logging.getLogger("qmsvm")

CONFIG_ENV = "QMSVM_CONFIG"

# RunConfig field -> (flag names, help)
RUN_FLAGS = {
    "C": (("--classes", "--C"), "number of classes"),
    "B": (("--bits", "--B"), "bits per encoded variable"),
    "beta": (("--beta",), "regularization weight"),
    "mu": (("--mu",), "penalty weight"),
    "gamma": (("--gamma",), "Gaussian kernel parameter"),
    "n_cap": (("--n-cap",), "use at most this many training examples"),
    "M": (("--subset-size", "--M"), "size of the selected training subset"),
    "num_reads": (("--num-reads",), "sampler reads"),
    "S": (("--num-solutions", "--S"), "solutions kept for combination"),
    "multiplier": (("--multiplier",), "softmax multiplier on accuracies"),
    "max_min_ratio": (("--max-min-ratio",), "pruning ratio, or 'off'"),
    "sampler": (("--sampler",), "auto, exact, sa or remote"),
    "selection": (("--selection",), "random or kmeans"),
    "seed": (("--seed",), "master random seed"),
    "sweeps": (("--sweeps",), "annealing sweeps per read"),
    "beta_hot": (("--beta-hot",), "initial inverse temperature (default: tuned)"),
    "beta_cold": (("--beta-cold",), "final inverse temperature (default: tuned)"),
    "normalize": (("--normalize",), "min-max scale features to [0, 1] (true/false)"),
    "dedup": (("--dedup",), "count repeated reads once when picking S (true/false)"),
    "threshold": (("--threshold",), "fixed accuracy threshold instead of the 0.2/0.8 blend"),
    "kmeans_max_iter": (("--kmeans-max-iter",), "k-means iteration cap"),
    "kmeans_tol": (("--kmeans-tol",), "k-means centroid-movement tolerance"),
    "remote_endpoint": (("--remote-endpoint",), "URL of the remote sampling service"),
    "remote_timeout": (("--remote-timeout",), "remote request timeout in seconds"),
    "remote_passthrough": (("--remote-passthrough",), "key=value forwarded to the service; repeatable"),
}

SOLVE_FIELDS = {
    "sampler", "num_reads", "sweeps", "beta_hot", "beta_cold", "seed",
    "remote_endpoint", "remote_timeout", "remote_passthrough",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw):
    """Convert text from a flag or config file to the RunConfig field type."""
    hint = typing.get_type_hints(RunConfig)[name]
    optional = typing.get_origin(hint) is typing.Union and type(None) in typing.get_args(hint)
    base = next(a for a in typing.get_args(hint) if a is not type(None)) if optional else hint
    if base is dict:
        return _parse_passthrough(raw)
    text = str(raw).strip()
    if optional and text.lower() in ("off", "none", ""):
        return None
    try:
        if base is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if base is int:
            return int(text)
        if base is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {name}") from None
    return text


def _parse_passthrough(items):
    if isinstance(items, dict):
        return dict(items)
    if isinstance(items, str):
        items = [p for p in items.split(",") if p.strip()]
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"passthrough entry {item!r} is not key=value")
        key, value = item.split("=", 1)
        value = value.strip()
        for cast in (int, float):
            try:
                value = cast(value)
                break
            except ValueError:
                continue
        out[key.strip()] = value
    return out


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; keys are field names, dashes allowed."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    names = {f.name.lower(): f.name for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in s.split("=", 1))
        canon = names.get(key.replace("-", "_").lower())
        if canon is None:
            raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
        values[canon] = _coerce(canon, value)
    return values


def collect_settings(args) -> dict:
    """Config-file values overridden by explicit flags (defaults not filled in)."""
    values = {}
    config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if config_path:
        values.update(read_config_file(config_path))
    for name in RUN_FLAGS:
        raw = getattr(args, name, None)
        if raw is not None:
            values[name] = _coerce(name, raw)
    return values


def build_run_config(args) -> RunConfig:
    """Defaults, then config file, then explicit flags."""
    return RunConfig(**collect_settings(args))


def _add_run_flags(p, only=None):
    p.add_argument("--config", help=f"flat key = value config file (default: ${CONFIG_ENV})")
    for name, (flags, help_) in RUN_FLAGS.items():
        if only is not None and name not in only:
            continue
        if name == "remote_passthrough":
            p.add_argument(*flags, dest=name, action="append", metavar="KEY=VALUE", help=help_)
        else:
            p.add_argument(*flags, dest=name, metavar=name.upper() if len(name) == 1 else None, help=help_)


def _parse_raster(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"raster size {text!r} is not WIDTHxHEIGHT") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = build_run_config(args)
    train_set = load_csv(args.data, args.label_column, cfg.C)
    val = load_csv(args.val, args.label_column, cfg.C) if args.val else None
    result = train(train_set, cfg, val=val)
    save_model(result.model, args.model)
    out = sys.stdout
    out.write(f"model written to {args.model}\n")
    out.write(f"N={train_set.n_examples} M={cfg.M} C={cfg.C} B={cfg.B} sampler={cfg.resolved_sampler()}\n")
    for phase, secs in result.seconds.items():
        out.write(f"{phase:<12s} {secs:10.4f} s  kernel_evals={result.kernel_evals[phase]}\n")
    out.write(f"distinct samples: {len(result.sample_set)}  best energy: {float(result.sample_set.energies[0])!r}\n")
    out.write(f"solutions kept: {int((result.weights > 0).sum())} of {len(result.weights)}\n")
    out.write(f"best single solution accuracy: {result.best_single_accuracy:.6f}\n")
    out.write(f"combined solution accuracy: {result.combined_accuracy:.6f}\n")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    labels = None
    if args.no_labels:
        X = load_features(args.data)
    else:
        ds = load_csv(args.data, args.label_column)
        X, labels = ds.features, ds.labels
    if X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, {args.data} has {X.shape[1]}")
    pred = predict(model, X)
    if args.out:
        write_predictions(pred, args.out)
    else:
        sys.stdout.writelines(f"{int(p)}\n" for p in pred)
    if args.raster:
        width, height = _parse_raster(args.raster)
        export_map(pred, RasterSpec(width, height, DEFAULT_PALETTE), args.ppm or "predictions.ppm")
    if labels is not None:
        hits = float(np.mean(pred == labels))
        sys.stderr.write(f"accuracy: {hits:.6f}\n")
    return 0


def cmd_evaluate(args) -> int:
    pred = read_predictions(args.pred)
    if args.truth_csv:
        truth = load_csv(args.truth_csv, args.label_column).labels
    else:
        truth = read_predictions(args.truth)
    if pred.size != truth.size:
        raise DataError(f"{pred.size} predictions for {truth.size} labels")
    C = args.classes or int(max(pred.max(), truth.max())) + 1
    cm = confusion(pred, truth, C)
    row = (args.name, args.n, args.m, accuracy_from_confusion(cm), macro_f1_from_confusion(cm), args.seconds)
    if args.out:
        path = Path(args.out)
        fresh = not path.exists() or path.stat().st_size == 0
        with path.open("a", encoding="utf-8", newline="") as fh:
            write_metrics_csv([row], fh, header=fresh)
    else:
        write_metrics_csv([row], sys.stdout)
    return 0


def cmd_benchmark(args) -> int:
    cfg = build_run_config(args)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    dataset = load_csv(args.data, args.label_column, cfg.C) if args.data else None
    test_set = load_csv(args.test, args.label_column, cfg.C) if args.test else None
    reports = benchmark(
        sizes,
        cfg,
        test_size=args.test_size,
        repeats=args.repeats,
        separation=args.separation,
        seed=cfg.seed,
        dataset=dataset,
        test_set=test_set,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_timing_csv(reports, fh)
    else:
        write_timing_csv(reports, sys.stdout)
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8", newline="") as fh:
            write_metrics_csv(
                [(args.name, r.N, r.M, r.accuracy, r.f1, r.total_seconds) for r in reports], fh
            )
    return 0


def cmd_solve_qubo(args) -> int:
    cfg = {f.name: f.default for f in fields(RunConfig) if f.name in SOLVE_FIELDS}
    cfg["remote_passthrough"] = {}
    cfg.update(collect_settings(args))
    q = load_qubo(args.qubo)
    kind = cfg["sampler"]
    if kind == "auto":
        kind = "exact" if q.dim <= AUTO_EXACT_MAX_DIM else "sa"
    if kind == "exact":
        ss = solve_exact(q)
    elif kind == "remote":
        if not cfg["remote_endpoint"]:
            raise ConfigError("remote sampler needs --remote-endpoint")
        remote = RemoteConfig(cfg["remote_endpoint"], cfg["remote_timeout"], cfg["remote_passthrough"])
        ss = solve_remote(q, remote, cfg["num_reads"])
    elif kind == "sa":
        anneal = AnnealConfig(cfg["num_reads"], cfg["sweeps"], cfg["beta_hot"], cfg["beta_cold"], cfg["seed"])
        ss = solve_sa(q, anneal)
    else:
        raise ConfigError(f"unknown sampler {kind!r}")
    lines = list(ss.lines())
    if args.limit:
        lines = lines[: args.limit]
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_blobs(args) -> int:
    d = make_blobs(args.n, args.classes, args.separation, args.features, seed=args.seed)
    save_csv(d, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmsvm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a labelled CSV")
    p.add_argument("data", help="training CSV (label in the last column)")
    p.add_argument("--model", "-o", required=True, help="output model file")
    p.add_argument("--val", help="separate validation CSV (default: the training set)")
    p.add_argument("--label-column", type=int, default=-1)
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify rows with a trained model")
    p.add_argument("data", help="CSV to classify")
    p.add_argument("--model", "-m", required=True)
    p.add_argument("--out", "-o", help="prediction file, one class index per line (default stdout)")
    p.add_argument("--no-labels", action="store_true", help="input has no label column")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--raster", metavar="WxH", help="also render a WIDTHxHEIGHT class map")
    p.add_argument("--ppm", help="class map path (default predictions.ppm)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="accuracy and macro-F1 of a prediction file")
    p.add_argument("--pred", required=True, help="prediction file")
    truth = p.add_mutually_exclusive_group(required=True)
    truth.add_argument("--truth", help="label file, one class index per line")
    truth.add_argument("--truth-csv", help="labelled CSV")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--classes", type=int, help="class count (default: inferred)")
    p.add_argument("--name", default="", help="dataset column of the metrics row")
    p.add_argument("--n", type=int, help="N column of the metrics row")
    p.add_argument("--m", type=int, help="M column of the metrics row")
    p.add_argument("--seconds", type=float, help="seconds column of the metrics row")
    p.add_argument("--out", "-o", help="append to this metrics CSV instead of printing")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="phase timings and kernel counts across N")
    p.add_argument("--sizes", default="1000,2000,4000", help="comma-separated training-set sizes")
    p.add_argument("--test-size", type=int, default=500)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--separation", type=float, default=5.0, help="blob mean spacing")
    p.add_argument("--data", help="draw training sets from this CSV instead of blobs")
    p.add_argument("--test", help="test CSV (default: blobs)")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--out", "-o", help="timing CSV (default stdout)")
    p.add_argument("--metrics", help="also write a metrics CSV here")
    p.add_argument("--name", default="blobs", help="dataset column of the metrics CSV")
    _add_run_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("solve-qubo", help="sample a QUBO text file")
    p.add_argument("qubo", help="file with header 'qubo dim M C B' and 'i j value' lines")
    p.add_argument("--limit", type=int, help="print at most this many samples")
    _add_run_flags(p, only=SOLVE_FIELDS)
    p.set_defaults(func=cmd_solve_qubo)

    p = sub.add_parser("blobs", help="write a synthetic Gaussian-blob CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--features", type=int, default=2)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_blobs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except QmsvmError as exc:
        sys.stderr.write(f"qmsvm {args.command}: error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
