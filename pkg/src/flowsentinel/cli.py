"""Command-line pipeline: ingest -> select -> train -> evaluate -> predict.

Commands read an optional JSON run-config (``--config``); explicit flags win
over config values. Every command is deterministic given identical inputs
and seeds, and ``train`` writes a manifest sufficient to replay the run.

Exit codes are a stable contract:

    0  success
    1  configuration error
    2  missing input (file, cache, or model not found / empty)
    3  schema error (missing column, corrupt cache or model file)
    4  numeric failure (non-finite loss or gradient)
    5  classification-mode mismatch between artifacts
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    ClassificationMode,
    FlowDataset,
    apply_normalizer,
    build_vocabulary,
    fit_normalizer,
    load_csv,
    map_labels,
    read_cache,
    schema,
    stratified_split,
    subsample_indices,
    write_cache,
)
from .errors import (
    ConfigError,
    CorruptCacheError,
    CorruptModelError,
    EmptyInputError,
    InvalidSpecError,
    MissingColumnError,
    ModeMismatchError,
    NonFiniteGradientError,
    NonFiniteLossError,
)
from .features import (
    ForestConfig,
    canonical_top20,
    compute_importances,
    export_importance_csv,
    fit_forest,
    select_top_k,
)
from .models import ModelSpec, build, load, save
from .training import TrainConfig, evaluate, export_history, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_INPUT = 2
EXIT_SCHEMA = 3
EXIT_NUMERIC = 4
EXIT_MODE_MISMATCH = 5

THREADS_ENV = "FLOWSENTINEL_THREADS"


@dataclass
class RunConfig:
    data: list = None  # CSV files or directories
    mode: str = "multi"
    arch: str = "cnn"
    features: str | None = None  # feature-list file; None -> canonical
    recompute_importance: bool = False
    top_k: int = 20
    subsample: float = 1.0
    split_fraction: float = 0.8
    seed: int = 0
    epochs: int = 20
    batch_size: int = 256
    lr: float | None = None
    validation_fraction: float = 0.1
    scheme: str = "minmax"  # feature scaling: minmax | zscore
    out: str = "out"

    def __post_init__(self):
        self.explicit_fields = set()

    @classmethod
    def load(cls, args: argparse.Namespace) -> "RunConfig":
        values = {}
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                values.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
            except FileNotFoundError:
                raise
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {config_path}: {exc}") from exc
        if "config" in values and "tool_version" in values:
            values = values["config"]  # a run manifest: replay its resolved config
        known = set(cls.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**values)
        explicit = set(values)
        for name in known:
            flag = getattr(args, name, None)
            if flag is not None:
                setattr(config, name, flag)
                explicit.add(name)
        config.explicit_fields = explicit
        config.validate()
        return config

    def validate(self) -> None:
        if self.mode not in ("binary", "grouped", "multi"):
            raise ConfigError(f"mode must be binary|grouped|multi, got {self.mode!r}")
        if self.arch not in ("cnn", "lstm"):
            raise ConfigError(f"arch must be cnn|lstm, got {self.arch!r}")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError(f"subsample must be in (0, 1], got {self.subsample}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError(f"split_fraction must be in (0, 1), got {self.split_fraction}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.scheme not in ("minmax", "zscore"):
            raise ConfigError(f"scheme must be minmax|zscore, got {self.scheme!r}")
        self.train_config().validate()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.lr,
            seed=self.seed,
            validation_fraction=self.validation_fraction,
        )


def thread_cap() -> int:
    """Parallelism cap from the environment; this build runs single-threaded,
    which trivially satisfies any positive cap."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {cap}")
    return cap


def _collect_csvs(entries) -> list:
    paths = []
    for entry in entries or []:
        p = Path(entry)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.csv")))
        else:
            paths.append(p)
    return paths


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _feature_list(config: RunConfig, out: Path) -> list:
    if config.features:
        path = Path(config.features)
        names = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
        if not names:
            raise EmptyInputError(f"feature list {path} is empty")
        return names
    generated = out / "features.txt"
    if generated.exists():
        names = [ln.strip() for ln in generated.read_text(encoding="utf-8").splitlines() if ln.strip()]
        if names:
            return names
    return canonical_top20()


def cmd_ingest(config: RunConfig) -> int:
    paths = _collect_csvs(config.data)
    if not paths:
        print("error: no input files", file=sys.stderr)
        return EXIT_MISSING_INPUT
    out = _out_dir(config)
    mode = ClassificationMode(config.mode)
    records, report = load_csv(paths)
    vocab = build_vocabulary(records if records else ["placeholder"], mode)
    kept, classes, dropped_unknown = map_labels(records, vocab, strict=False)
    if dropped_unknown:
        report.drop("unknown_label", dropped_unknown)
        report.rows_retained -= dropped_unknown
    y = np.asarray(classes, dtype=np.int64)
    X = np.array(
        [[records[i].features[name] for name in schema.FEATURE_COLUMNS] for i in kept],
        dtype=np.float32,
    ).reshape(len(kept), len(schema.FEATURE_COLUMNS))
    if config.subsample < 1.0 and y.size:
        from .rng import Rng

        keep = subsample_indices(y, config.subsample, Rng(config.seed).spawn("subsample"))
        X, y = X[keep], y[keep]
    class_histogram = {
        vocab.classes[c]: int(n) for c, n in zip(*np.unique(y, return_counts=True))
    } if y.size else {}
    meta = {
        "mode": mode.value,
        "classes": list(vocab.classes),
        "seed": config.seed,
        "subsample": config.subsample,
        "rows": int(y.size),
        "class_histogram": class_histogram,
        "ingest_report": report.to_dict(),
        "tool_version": __version__,
    }
    cache_path = out / "dataset.fsds"
    write_cache(cache_path, X, y, list(schema.FEATURE_COLUMNS), meta=meta)
    (out / "ingest_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote {cache_path} ({y.size} rows, mode={mode.value}) and ingest_report.json")
    return EXIT_OK


def cmd_select(config: RunConfig) -> int:
    out = _out_dir(config)
    features_path = out / "features.txt"
    if config.recompute_importance:
        cache_path = out / "dataset.fsds"
        if not cache_path.exists():
            print(f"error: missing cache {cache_path}", file=sys.stderr)
            return EXIT_MISSING_INPUT
        X, y, names, meta = read_cache(cache_path)
        if meta and meta.get("mode") != "multi":
            print(
                f"note: importance regression target uses the cache's "
                f"{meta.get('mode')!r} class indices; a multi-mode cache mirrors "
                f"the reference pipeline",
                file=sys.stderr,
            )
        forest_config = ForestConfig(seed=config.seed)
        trees = fit_forest(X.astype(np.float64), y.astype(np.float64), forest_config)
        report = compute_importances(trees, names)
        top = select_top_k(report, config.top_k)
        export_importance_csv(report, out / "importance.csv")
        print(f"wrote importance.csv ({len(report.ranking)} features ranked)")
    else:
        top = canonical_top20()[: config.top_k] if config.top_k <= 20 else None
        if top is None:
            print("error: canonical list has 20 features; use --recompute-importance "
                  "for larger top_k", file=sys.stderr)
            return EXIT_CONFIG
    features_path.write_text("".join(name + "\n" for name in top), encoding="utf-8")
    print(f"wrote {features_path} ({len(top)} features)")
    return EXIT_OK


def _prepare_split(config: RunConfig, cache_path: Path, feature_names: list):
    """Cache -> (train FlowDataset, test FlowDataset, meta), train-fitted scaling."""
    X, y, cache_columns, meta = read_cache(cache_path)
    missing = [name for name in feature_names if name not in cache_columns]
    if missing:
        raise MissingColumnError(missing[0], str(cache_path))
    cols = [cache_columns.index(name) for name in feature_names]
    X = X[:, cols]
    mode = ClassificationMode((meta or {}).get("mode", config.mode))
    vocab = build_vocabulary(["known"], mode)
    split = stratified_split(y, config.split_fraction, seed=config.seed)
    stats = fit_normalizer(X[split.train])
    train_ds = FlowDataset(
        X=apply_normalizer(X[split.train], stats, scheme=config.scheme).astype(np.float32),
        y=y[split.train], feature_names=feature_names, vocab=vocab, stats=stats,
    )
    test_ds = FlowDataset(
        X=apply_normalizer(X[split.test], stats, scheme=config.scheme).astype(np.float32),
        y=y[split.test], feature_names=feature_names, vocab=vocab, stats=stats,
    )
    return train_ds, test_ds, meta


def cmd_train(config: RunConfig) -> int:
    out = _out_dir(config)
    cache_path = out / "dataset.fsds"
    if not cache_path.exists():
        print(f"error: missing cache {cache_path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    feature_names = _feature_list(config, out)
    meta_probe = read_cache(cache_path)[3]
    cache_mode = (meta_probe or {}).get("mode")
    if cache_mode and cache_mode != config.mode:
        if "mode" in config.explicit_fields:
            raise ModeMismatchError(
                f"cache was ingested in {cache_mode!r} mode but --mode is {config.mode!r}"
            )
        config.mode = cache_mode  # inherit the cache's regime when unspecified
    train_ds, test_ds, meta = _prepare_split(config, cache_path, feature_names)
    mode = train_ds.vocab.mode
    spec = ModelSpec(architecture=config.arch, mode=mode, input_features=len(feature_names))
    model = build(spec, seed=config.seed)
    model.feature_names = list(feature_names)
    model.class_names = list((meta or {}).get("classes") or [str(i) for i in range(mode.class_count)])
    model.normalizer = train_ds.stats
    model.normalizer_scheme = config.scheme

    train_config = config.train_config()
    history = train(model, train_ds.X, train_ds.y, train_config)
    model_path = out / "model.fsnn"
    save(model, model_path)
    export_history(history, out / "history.csv")
    report = evaluate(model, test_ds.X, test_ds.y, class_names=model.class_names)
    manifest = {
        "config": asdict(config),
        "tool_version": __version__,
        "thread_cap": thread_cap(),
        "cache_sha256": _sha256(cache_path),
        "cache_rows": train_ds.n_rows + test_ds.n_rows,
        "train_rows": train_ds.n_rows,
        "test_rows": test_ds.n_rows,
        "features": list(feature_names),
        "classes": list(model.class_names),
        "learning_rate": train_config.resolve_learning_rate(config.arch),
        "final_train": {
            "loss": history.final().train_loss,
            "accuracy": history.final().train_acc,
            "val_loss": history.final().val_loss,
            "val_accuracy": history.final().val_acc,
        },
        "test_metrics": {
            "accuracy": report.accuracy,
            "macro_f1": report.macro_f1,
            "weighted_f1": report.weighted_f1,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    print(
        f"wrote {model_path}, history.csv, manifest.json "
        f"(test accuracy {report.accuracy:.4f})"
    )
    return EXIT_OK


def cmd_evaluate(config: RunConfig, model_path: str) -> int:
    out = _out_dir(config)
    path = Path(model_path)
    if not path.exists():
        print(f"error: missing model {path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    cache_path = out / "dataset.fsds"
    if not cache_path.exists():
        print(f"error: missing cache {cache_path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    model = load(path)
    X, y, cache_columns, meta = read_cache(cache_path)
    cache_mode = (meta or {}).get("mode")
    if cache_mode and cache_mode != model.spec.mode.value:
        print(
            f"error: model mode {model.spec.mode.value!r} != cache mode {cache_mode!r}",
            file=sys.stderr,
        )
        return EXIT_MODE_MISMATCH
    feature_names = model.feature_names or canonical_top20()
    missing = [name for name in feature_names if name not in cache_columns]
    if missing:
        raise MissingColumnError(missing[0], str(cache_path))
    cols = [cache_columns.index(name) for name in feature_names]
    split = stratified_split(y, config.split_fraction, seed=config.seed)
    if model.normalizer is None:
        raise CorruptModelError(f"{path}: model carries no normalizer")
    X_test = apply_normalizer(
        X[split.test][:, cols], model.normalizer, scheme=model.normalizer_scheme
    ).astype(np.float32)
    report = evaluate(model, X_test, y[split.test], class_names=model.class_names or None)
    (out / "metrics.json").write_text(report.to_json(), encoding="utf-8")
    (out / "metrics.txt").write_text(report.to_text() + "\n", encoding="utf-8")
    print(report.to_text())
    return EXIT_OK


def cmd_predict(config: RunConfig, model_path: str, input_path: str) -> int:
    path = Path(model_path)
    if not path.exists():
        print(f"error: missing model {path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    source = Path(input_path)
    if not source.exists():
        print(f"error: missing input {source}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    model = load(path)
    feature_names = model.feature_names or canonical_top20()
    rows = []
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for name in feature_names:
            if name not in header:
                raise MissingColumnError(name, str(source))
        for row in reader:
            rows.append([float(row[name]) for name in feature_names])
    if not rows:
        print(f"error: no rows in {source}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    X = np.asarray(rows, dtype=np.float64)
    if model.normalizer is not None:
        X = apply_normalizer(X, model.normalizer, scheme=model.normalizer_scheme)
    X = X.astype(np.float32)
    predictions = model.predict(X)
    confidences = model.confidences(X)
    class_names = model.class_names or [str(i) for i in range(model.spec.mode.class_count)]
    out = _out_dir(config)
    target = out / "predictions.csv"
    with open(target, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "predicted_class", "confidence"])
        for i, (klass, conf) in enumerate(zip(predictions, confidences)):
            writer.writerow([i, class_names[int(klass)], f"{conf:.6f}"])
    print(f"wrote {target} ({len(predictions)} predictions)")
    return EXIT_OK


def cmd_inspect(model_path: str) -> int:
    path = Path(model_path)
    if not path.exists():
        print(f"error: missing model {path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    model = load(path)
    info = {
        "spec": model.spec.to_dict(),
        "seed": model.rng_seed,
        "parameter_count": model.parameter_count(),
        "features": model.feature_names,
        "classes": model.class_names,
        "has_normalizer": model.normalizer is not None,
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowsentinel", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run-config; flags override its values")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory (default: out)")

    p_ingest = sub.add_parser("ingest", help="parse CSVs into a dataset cache")
    common(p_ingest)
    p_ingest.add_argument("--data", nargs="+", default=None, help="CSV files or directories")
    p_ingest.add_argument("--mode", choices=["binary", "grouped", "multi"], default=None)
    p_ingest.add_argument("--subsample", type=float, default=None)

    p_select = sub.add_parser("select", help="emit the feature list (canonical or recomputed)")
    common(p_select)
    p_select.add_argument("--top-k", dest="top_k", type=int, default=None)
    p_select.add_argument("--recompute-importance", dest="recompute_importance",
                          action="store_true", default=None)

    p_train = sub.add_parser("train", help="train a model on the cached dataset")
    common(p_train)
    p_train.add_argument("--arch", choices=["cnn", "lstm"], default=None)
    p_train.add_argument("--mode", choices=["binary", "grouped", "multi"], default=None)
    p_train.add_argument("--features", default=None, help="feature list file")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)

    p_eval = sub.add_parser("evaluate", help="score a model on the held-out split")
    common(p_eval)
    p_eval.add_argument("--model", required=True)

    p_pred = sub.add_parser("predict", help="classify rows from a CSV")
    common(p_pred)
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", required=True)

    p_inspect = sub.add_parser("inspect", help="print a model file's header")
    p_inspect.add_argument("--model", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        thread_cap()  # validate the env var before doing any work
        if args.command == "inspect":
            return cmd_inspect(args.model)
        config = RunConfig.load(args)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "select":
            return cmd_select(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "evaluate":
            return cmd_evaluate(config, args.model)
        if args.command == "predict":
            return cmd_predict(config, args.model, args.input)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InvalidSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (MissingColumnError, CorruptCacheError, CorruptModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (NonFiniteLossError, NonFiniteGradientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModeMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODE_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
