"""``trafficlens`` command line.

Exit codes: 0 success, 1 usage/configuration, 2 data/file problems,
3 numerical failure. Errors are reported as one line on stderr::

    trafficlens: error[<kind>]: <message>

JSON reports are written with sorted keys; every timing lives under the
``wall_time`` key, so two runs with the same flags differ only there.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import DEFAULT_SEED, __version__
from .artifact import FORMAT_VERSION
from .datamodel import IMAGE_LABELS, SplitSpec, split_indices
from .exceptions import ConfigError, DataError, TrafficLensError
from .metrics import REFERENCE_LATENCY_MS, bench_latency, bench_scaling, scaling_csv
from .timeseries import ArimaOrder, SeasonalARIMA, decompose

SEED_ENV = "TRAFFICLENS_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- helpers -------------------------------------------------------------------


def _resolve_seed(flag):
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None


def _path(value) -> str:
    return str(Path(value).expanduser().resolve())


def _config(args) -> dict:
    skip = {"func", "handler"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = value
    return out


def _write_text(path, text: str) -> None:
    """Write via a temporary sibling so a failure never leaves a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _report(args, result: dict, wall_time: dict) -> dict:
    return {"command": args.command, "config": _config(args), "seed": args.seed,
            "artifact_version": FORMAT_VERSION, "trafficlens_version": __version__,
            "result": result, "wall_time": wall_time}


def _dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(args, report: dict, path=None) -> None:
    path = path if path is not None else getattr(args, "report", None)
    text = _dump(report)
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def _emit_eval(args, result: dict, evaluation, wall_time: dict) -> None:
    """JSON report, or the metrics table alone when the report path ends in .csv."""
    if args.report and str(args.report).lower().endswith(".csv"):
        _write_text(args.report, evaluation.to_csv())
    else:
        _emit(args, _report(args, result, wall_time))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return "" if x is None or not np.isfinite(x) else repr(float(x))


def _save_model(path, model, extra=None) -> str:
    from .pipeline import save_model

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    fp = save_model(tmp, model, extra)
    os.replace(tmp, path)
    return fp


def _load_data_for(model, path, seed):
    """Records or images matching the model type."""
    from .pipeline import SeverityModel

    if isinstance(model, SeverityModel):
        from .ingest import load_accidents_csv

        return "severity", load_accidents_csv(path)
    from .datasynth import images_to_arrays
    from .ingest import load_image_dir

    h, w, c = model.input_shape
    if h != w:
        raise ConfigError("image models must use square inputs")
    X, y = images_to_arrays(load_image_dir(path, size=h, grayscale=(c == 1)))
    if X.shape[0] == 0:
        raise DataError("image directory holds no images", str(path))
    return "image", (X, y)


# -- commands ------------------------------------------------------------------


def cmd_synth(args):
    from . import datasynth as ds
    from .ingest import write_accidents_csv, write_image_dir, write_traffic_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    overrides = {"seed": args.seed}
    if args.n is not None:
        overrides["n"] = args.n
    if args.kind == "traffic":
        if args.sigma is not None:
            overrides["sigma"] = args.sigma
        series = ds.gen_traffic(**overrides)
        target = out / "traffic.csv"
        write_traffic_csv(series, target)
        summary = {"rows": len(series), "file": str(target)}
    elif args.kind == "accidents":
        records = ds.gen_accidents(checkerboard=args.checkerboard, **overrides)
        target = out / "accidents.csv"
        write_accidents_csv(records, target)
        counts = np.bincount([int(r.severity) for r in records], minlength=3)
        summary = {"rows": len(records), "columns": len(records[0].features) if records else 0,
                   "class_counts": counts.tolist(), "file": str(target)}
    elif args.kind == "images":
        if args.noise is not None:
            overrides["noise"] = args.noise
        samples = ds.gen_images(**overrides)
        target = out / "images"
        write_image_dir(samples, target)
        counts = np.bincount([int(s.label) for s in samples], minlength=4)
        summary = {"images": len(samples), "class_counts": dict(zip(IMAGE_LABELS, counts.tolist())),
                   "dir": str(target)}
    else:  # texts
        texts = ds.gen_narratives(n=args.n if args.n is not None else 500, seed=args.seed)
        target = out / "narratives.txt"
        _write_text(target, "\n".join(texts) + "\n")
        summary = {"lines": len(texts), "file": str(target)}
    _emit(args, _report(args, summary, {"seconds": time.perf_counter() - t0}))


def cmd_fit_arima(args):
    from .ingest import load_traffic_csv
    from .timeseries import mae

    series = load_traffic_csv(args.series)
    order = ArimaOrder.parse(args.order)
    if args.holdout < 0:
        raise ConfigError("--holdout must be non-negative")
    if args.holdout >= len(series):
        raise ConfigError(f"--holdout {args.holdout} leaves no training data ({len(series)} rows)")
    n_fit = len(series) - args.holdout
    train_values, held = series.values[:n_fit], series.values[n_fit:]
    t0 = time.perf_counter()
    model = SeasonalARIMA(order=tuple(order), period=args.period or None).fit(train_values)
    seconds = time.perf_counter() - t0
    extra = {"series": {"start_time": series.start_time, "n": n_fit, "holdout": [float(v) for v in held]}}
    fp = _save_model(args.out, model, extra)
    inner = model.arima_
    resid = inner.resid_
    result = {
        "order": list(order), "period": args.period, "phi": inner.phi_.tolist(), "theta": inner.theta_.tolist(),
        "mean": inner.mean_, "sigma2": inner.sigma2_, "css": inner.css_, "iterations": inner.n_iter_,
        "train_rows": n_fit, "holdout_rows": int(held.size),
        "residuals": {"n": int(resid.size), "mean": float(resid.mean()), "std": float(resid.std()),
                      "mae": float(np.mean(np.abs(resid))), "max_abs": float(np.max(np.abs(resid)))},
        "schema_fingerprint": fp,
    }
    if held.size:
        result["holdout_mae"] = mae(held, model.predict(held.size))
    _emit(args, _report(args, result, {"fit_seconds": seconds}))


def cmd_forecast(args):
    from .pipeline import load_model

    if args.horizon < 1:
        raise ConfigError(f"horizon must be at least 1, got {args.horizon}")
    model, art = load_model(args.model)
    art.require_kind("arima")
    fc = model.forecast(args.horizon)
    lower, upper = fc.interval()
    meta = art.params["series"]
    start = meta["start_time"] + meta["n"]
    held = meta.get("holdout", [])
    rows = [[h + 1, start + h, repr(float(p)), repr(float(s)), repr(float(lo)), repr(float(hi)),
             repr(float(held[h])) if h < len(held) else ""]
            for h, (p, s, lo, hi) in enumerate(zip(fc.point, fc.stderr, lower, upper))]
    header = ["step", "timestamp_hour", "forecast", "stderr", "lower95", "upper95", "actual"]
    _write_text(args.out, _csv(rows, header))
    sys.stdout.write(f"wrote {len(rows)} forecast rows to {args.out}\n")


def cmd_decompose(args):
    from .ingest import load_traffic_csv

    series = load_traffic_csv(args.series)
    dec = decompose(series, args.period)
    rows = [[int(t), _num(o), _num(tr), _num(s), _num(r)]
            for t, o, tr, s, r in zip(series.timestamps, dec.observed, dec.trend, dec.seasonal, dec.residual)]
    _write_text(args.out, _csv(rows, ["timestamp_hour", "observed", "trend", "seasonal", "residual"]))
    sys.stdout.write(f"wrote {len(rows)} rows to {args.out}\n")


def _model_params(args) -> dict:
    params = {}
    mapping = {"rounds": "n_rounds", "learning_rate": "learning_rate", "max_depth": "max_depth",
               "reg_lambda": "reg_lambda", "n_trees": "n_trees", "steps": "steps", "l2": "l2"}
    allowed = {"gbdt": {"rounds", "learning_rate", "max_depth", "reg_lambda"},
               "rf": {"n_trees", "max_depth"}, "logistic": {"steps", "l2"}}
    for flag, name in mapping.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag not in allowed[args.model]:
            raise ConfigError(f"--{flag.replace('_', '-')} does not apply to model {args.model}")
        params[name] = value
    return params


def cmd_train_severity(args):
    from .ingest import load_accidents_csv
    from .pipeline import evaluate_severity, fit_severity, prepare_severity

    records = load_accidents_csv(args.data)
    train, test = prepare_severity(records, args.balance, args.split, args.seed)
    model, seconds = fit_severity(train, args.model, _model_params(args), args.seed)
    t0 = time.perf_counter()
    report = evaluate_severity(model, test)
    eval_seconds = time.perf_counter() - t0
    fp = _save_model(args.out, model)
    result = {"model": args.model, "train_rows": len(train), "test_rows": len(test),
              "params": model.estimator.get_params(), "evaluation": report.to_dict(),
              "schema_fingerprint": fp}
    _emit_eval(args, result, report, {"train_seconds": seconds, "evaluate_seconds": eval_seconds})


def cmd_importance(args):
    from .pipeline import load_model
    from .tabular import feature_importance

    model, art = load_model(args.model)
    art.require_kind("gbdt", "rf")
    rep = feature_importance(model.estimator, model.encoder.columns_)
    _write_text(args.out, rep.to_csv())
    top = ", ".join(rep.top(3)) if len(rep) else "(no splits)"
    sys.stdout.write(f"top features: {top}\n")


def cmd_train_image(args):
    from .datasynth import images_to_arrays
    from .ingest import load_image_dir
    from .pipeline import evaluate_images
    from .vision import TrafficNet, TrainConfig, train

    X, y = images_to_arrays(load_image_dir(args.dir, size=args.size, grayscale=True))
    if X.shape[0] < 2:
        raise DataError("need at least two images", str(args.dir))
    if args.limit is not None and args.limit < X.shape[0]:
        keep = np.sort(np.random.default_rng(args.seed).choice(X.shape[0], args.limit, replace=False))
        X, y = X[keep], y[keep]
    tr, te = split_indices(X.shape[0], SplitSpec(args.split, args.seed, stratify=True), y)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
                      momentum=args.momentum, seed=args.seed, augment=args.augment)
    net = TrafficNet(input_shape=(args.size, args.size, 1), seed=args.seed)
    t0 = time.perf_counter()
    net, history = train(net, X[tr], y[tr], cfg)
    seconds = time.perf_counter() - t0
    report = evaluate_images(net, X[te], y[te])
    fp = _save_model(args.out, net)
    result = {"train_images": int(tr.size), "test_images": int(te.size), "history": history,
              "evaluation": report.to_dict(), "schema_fingerprint": fp}
    _emit_eval(args, result, report, {"train_seconds": seconds})


def _predict_source(model, kind, data):
    if kind == "severity":
        from .pipeline import labels_of

        return model.predict_proba(data), labels_of(data)
    X, y = data
    return model.predict_proba(X), y


def cmd_evaluate(args):
    from .datamodel import SEVERITY_LABELS
    from .metrics import evaluate
    from .pipeline import load_model

    model, _ = load_model(args.model)
    if not hasattr(model, "predict_proba"):
        raise ConfigError("evaluate needs a classifier artifact")
    kind, data = _load_data_for(model, args.data, args.seed)
    t0 = time.perf_counter()
    proba, y = _predict_source(model, kind, data)
    seconds = time.perf_counter() - t0
    labels = SEVERITY_LABELS if kind == "severity" else IMAGE_LABELS
    full = np.zeros((proba.shape[0], len(labels)))
    full[:, np.asarray(model.classes_, dtype=np.int64)] = proba
    report = evaluate(y, np.argmax(full, axis=1), full, labels=labels)
    _emit_eval(args, {"rows": int(y.size), "evaluation": report.to_dict()}, report,
               {"predict_seconds": seconds, "per_sample_ms": 1e3 * seconds / max(y.size, 1)})


def cmd_ensemble(args):
    from .datamodel import SEVERITY_LABELS
    from .metrics import evaluate
    from .pipeline import SeverityModel, load_model
    from .tabular import ensemble_predict

    paths = [p for p in args.models.split(",") if p]
    if len(paths) < 1:
        raise ConfigError("--models needs at least one path")
    models = [load_model(p)[0] for p in paths]
    weights = None
    if args.weights:
        try:
            weights = [float(w) for w in args.weights.split(",")]
        except ValueError:
            raise ConfigError(f"bad --weights {args.weights!r}") from None
        if len(weights) != len(paths) or min(weights) < 0 or sum(weights) <= 0:
            raise ConfigError("--weights needs one non-negative value per model with a positive sum")
        total = sum(weights)
        weights = [w / total for w in weights]
    tabular = [isinstance(m, SeverityModel) for m in models]
    if any(tabular) and not all(tabular):
        raise ConfigError("cannot mix severity and image models in one ensemble")
    kind, data = _load_data_for(models[0], args.data, args.seed)
    if kind == "severity":
        schemas = {tuple(m.encoder.feature_names_) for m in models}
        if len(schemas) != 1:
            raise ConfigError("ensemble members were trained on different feature sets")
        inputs = data
        from .pipeline import labels_of

        y = labels_of(data)
        labels = SEVERITY_LABELS
    else:
        inputs, y = data
        labels = IMAGE_LABELS
    t0 = time.perf_counter()
    proba = ensemble_predict(models, inputs, weights)
    seconds = time.perf_counter() - t0
    full = np.zeros((proba.shape[0], len(labels)))
    full[:, np.asarray(models[0].classes_, dtype=np.int64)] = proba
    report = evaluate(y, np.argmax(full, axis=1), full, labels=labels)
    result = {"members": [Path(p).name for p in paths], "weights": weights, "rows": int(y.size),
              "evaluation": report.to_dict()}
    _emit_eval(args, result, report, {"predict_seconds": seconds})


def cmd_tune(args):
    from .datamodel import FeatureEncoder
    from .ingest import load_accidents_csv
    from .pipeline import BALANCE, labels_of, make_estimator
    from .tabular import balance_classes, grid_search

    try:
        grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid file is not valid JSON: {exc}") from None
    if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
        raise ConfigError("grid must map parameter names to non-empty lists")
    estimator = make_estimator(args.model, {}, args.seed)
    unknown = sorted(set(grid) - set(estimator.get_params()))
    if unknown:
        raise ConfigError(f"unknown {args.model} parameter(s) in grid: {', '.join(unknown)}")
    records = load_accidents_csv(args.data)
    y = labels_of(records)
    idx = np.arange(len(records))
    if BALANCE.get(args.balance) is not None:
        idx, y = balance_classes(idx, y, BALANCE[args.balance], args.seed)
    elif args.balance not in BALANCE:
        raise ConfigError(f"unknown balance strategy {args.balance!r}")
    subset = [records[i] for i in idx]
    X = FeatureEncoder().fit(subset).transform(subset)
    t0 = time.perf_counter()
    best, table = grid_search(estimator, X, y, grid, folds=args.folds, seed=args.seed, n_iter=args.n_iter)
    result = {"model": args.model, "best_params": best, "cells": table, "rows": int(y.size)}
    _emit(args, _report(args, result, {"search_seconds": time.perf_counter() - t0}))


def cmd_bench(args):
    t0 = time.perf_counter()
    if args.mode == "latency":
        from .pipeline import SeverityModel, load_model

        if not args.model:
            raise ConfigError("bench latency needs --model")
        model, art = load_model(args.model)
        if art.kind == "arima":
            raise ConfigError("latency benchmark applies to classifiers")
        if args.data:
            kind, data = _load_data_for(model, args.data, args.seed)
        elif isinstance(model, SeverityModel):
            from .datasynth import gen_accidents

            kind, data = "severity", gen_accidents(n=200, seed=args.seed)
        else:
            from .datasynth import gen_images, images_to_arrays

            kind, data = "image", images_to_arrays(gen_images(n=200, size=model.input_shape[0], seed=args.seed))
        if kind == "severity":
            X = model.transform(data)
            predict = model.estimator.predict_proba
        else:
            X = data[0]
            predict = model.predict_proba
        stats = bench_latency(predict, X, args.reps)
        rows = [["model_kind", art.kind], ["mean_ms", repr(stats["mean_ms"])], ["p50_ms", repr(stats["p50_ms"])],
                ["p95_ms", repr(stats["p95_ms"])], ["max_ms", repr(stats["max_ms"])],
                ["repetitions", stats["repetitions"]], ["warmup", stats["warmup"]],
                ["reference_ms", REFERENCE_LATENCY_MS.get(art.kind, "")], ["hardware", stats["hardware"]]]
        text = _csv(rows, ["metric", "value"])
    else:
        from .pipeline import make_estimator

        if not args.sizes:
            raise ConfigError("bench scaling needs --sizes")
        try:
            sizes = [int(s) for s in args.sizes.split(",") if s]
        except ValueError:
            raise ConfigError(f"bad --sizes {args.sizes!r}") from None
        kind = args.fit_model or "gbdt"

        def fit(X, y):
            make_estimator(kind, {}, args.seed).fit(X, y)

        text = scaling_csv(bench_scaling(fit, sizes, args.seed))
    if args.report:
        _write_text(args.report, text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(f"bench {args.mode} finished in {time.perf_counter() - t0:.2f}s\n")


def cmd_wordfreq(args):
    from .datasynth import DEFAULT_STOPWORDS, load_stopwords, word_freq, word_freq_csv

    if args.top is not None and args.top < 1:
        raise ConfigError("--top must be at least 1")
    try:
        texts = Path(args.texts).read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError:
        raise DataError("texts file is not UTF-8", str(args.texts)) from None
    stop = load_stopwords(args.stopwords) if args.stopwords else DEFAULT_STOPWORDS
    freqs = word_freq(texts, stop)
    if args.top is not None:
        freqs = freqs[:args.top]
    text = word_freq_csv(freqs)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trafficlens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trafficlens {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=None,
                       help=f"random seed (default ${SEED_ENV} or {DEFAULT_SEED})")
        p.set_defaults(func=func)
        return p

    p = command("synth", cmd_synth, "write a synthetic dataset")
    p.add_argument("kind", choices=["traffic", "accidents", "images", "texts"])
    p.add_argument("--out", required=True, type=_path)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float, help="traffic noise standard deviation")
    p.add_argument("--noise", type=float, help="image noise standard deviation")
    p.add_argument("--checkerboard", action="store_true", help="accidents: add the XOR risk term")
    p.add_argument("--report", type=_path)

    p = command("fit-arima", cmd_fit_arima, "fit a seasonally adjusted ARIMA model")
    p.add_argument("--series", required=True, type=_path)
    p.add_argument("--order", default="2,0,1")
    p.add_argument("--period", type=int, default=24, help="seasonal period removed before fitting; 0 disables")
    p.add_argument("--holdout", type=int, default=24, help="trailing hours kept out of the fit and scored")
    p.add_argument("--out", required=True, type=_path)
    p.add_argument("--report", type=_path)

    p = command("forecast", cmd_forecast, "forecast from a fitted ARIMA model")
    p.add_argument("--model", required=True, type=_path)
    p.add_argument("--horizon", type=int, default=24)
    p.add_argument("--out", required=True, type=_path)

    p = command("decompose", cmd_decompose, "classical additive decomposition")
    p.add_argument("--series", required=True, type=_path)
    p.add_argument("--period", type=int, default=24)
    p.add_argument("--out", required=True, type=_path)

    p = command("train-severity", cmd_train_severity, "train an accident-severity classifier")
    p.add_argument("--data", required=True, type=_path)
    p.add_argument("--model", choices=["gbdt", "rf", "logistic"], default="gbdt")
    p.add_argument("--balance", choices=["down", "over", "none"], default="down")
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--out", required=True, type=_path)
    p.add_argument("--report", type=_path)
    p.add_argument("--rounds", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--reg-lambda", type=float)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--l2", type=float)

    p = command("importance", cmd_importance, "gain importance of a tree model")
    p.add_argument("--model", required=True, type=_path)
    p.add_argument("--out", required=True, type=_path)

    p = command("train-image", cmd_train_image, "train the image classifier")
    p.add_argument("--dir", required=True, type=_path)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--limit", type=int, help="random subsample of this many images")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--out", required=True, type=_path)
    p.add_argument("--report", type=_path)

    p = command("evaluate", cmd_evaluate, "evaluate a classifier on a dataset")
    p.add_argument("--model", required=True, type=_path)
    p.add_argument("--data", required=True, type=_path)
    p.add_argument("--report", type=_path)

    p = command("ensemble", cmd_ensemble, "soft-vote several classifiers")
    p.add_argument("--models", required=True)
    p.add_argument("--weights")
    p.add_argument("--data", required=True, type=_path)
    p.add_argument("--report", type=_path)

    p = command("tune", cmd_tune, "cross-validated grid search")
    p.add_argument("--data", required=True, type=_path)
    p.add_argument("--model", choices=["gbdt", "rf", "logistic"], default="gbdt")
    p.add_argument("--grid", required=True, type=_path)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--n-iter", type=int)
    p.add_argument("--balance", choices=["down", "over", "none"], default="down")
    p.add_argument("--report", type=_path)

    p = command("bench", cmd_bench, "latency or training-time scaling benchmark")
    p.add_argument("mode", choices=["latency", "scaling"])
    p.add_argument("--model", type=_path, help="latency: model artifact")
    p.add_argument("--data", type=_path, help="latency: input data (default: synthetic)")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--sizes", help="scaling: comma-separated dataset sizes")
    p.add_argument("--fit-model", choices=["gbdt", "rf", "logistic"], help="scaling: learner to time")
    p.add_argument("--report", type=_path)

    p = command("wordfreq", cmd_wordfreq, "term frequencies of free-text narratives")
    p.add_argument("--texts", required=True, type=_path)
    p.add_argument("--stopwords", type=_path)
    p.add_argument("--top", type=int)
    p.add_argument("--out", type=_path)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.seed = _resolve_seed(args.seed)
        args.func(args)
        return 0
    except TrafficLensError as exc:
        return _fail(exc.kind, exc, exc.exit_code)
    except FileNotFoundError as exc:
        return _fail("io", f"{exc.filename}: no such file", 2)
    except OSError as exc:
        return _fail("io", f"{getattr(exc, 'filename', '')}: {exc.strerror or exc}", 2)
    except (FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return _fail("numeric", exc, 3)


def _fail(kind, message, code) -> int:
    text = " ".join(str(message).split())
    sys.stderr.write(f"trafficlens: error[{kind}]: {text}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
