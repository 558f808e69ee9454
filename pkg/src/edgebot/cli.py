"""Command-line pipeline driver.

Subcommands: synth, ingest, preprocess, select-features, train, tune,
evaluate, noise-test, benchmark, serve, predict, inspect. All randomness
flows from --seed; --config layers key=value files under environment
overrides (EDGEBOT_*) and explicit flags. Exit codes: 0 success, 2 usage,
3 input format error, 4 data/parameter error, 5 artifact error, 6 other
tool error, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

import numpy as np

from . import __version__, boosting, evaluate, features, ingest, preprocess, stream, synth
from .artifact import (
    dataset_fingerprint,
    describe,
    load_artifact,
    save_artifact,
    serialize_model,
)
from .config import load_config, resolve
from .errors import EdgebotError
from .evaluate import (
    TABLE3,
    EvalReport,
    HyperParams,
    NoiseSpec,
    ParamSpace,
    format_report_table,
)

SPLIT_NAMES = ("train", "validation", "test")


def _out_dir(args) -> Path:
    path = Path(args.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_records(path: str) -> list[ingest.FlowRecord]:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".csv"):
        return ingest.records_from_table(ingest.parse_csv(text, source=path))
    return ingest.parse_conn_log(text)


def _write_records_csv(records, path) -> None:
    ingest.write_csv(ingest.records_to_table(records), path)


def _save_split_dir(split: preprocess.DataSplit, out: Path, seed: int) -> None:
    for name in SPLIT_NAMES:
        ds = getattr(split, name)
        preprocess.dataset_to_csv(ds, out / f"{name}.csv", out / f"{name}.json", seed=seed)


def _load_split_dir(path: str) -> preprocess.DataSplit:
    root = Path(path)
    parts = {}
    for name in SPLIT_NAMES:
        parts[name] = preprocess.dataset_from_csv(root / f"{name}.csv", root / f"{name}.json")
    sidecar = json.loads((root / "train.json").read_text(encoding="utf-8"))
    return preprocess.DataSplit(
        train=parts["train"], validation=parts["validation"], test=parts["test"],
        seed=sidecar.get("seed") or 0,
    )


def _load_hyper(kind: str, spec: str) -> HyperParams:
    if spec == "table3":
        return TABLE3[kind]
    data = json.loads(Path(spec).read_text(encoding="utf-8"))
    data.setdefault("model", kind)
    return HyperParams.from_dict(data)


def _select_names(args) -> list[str] | None:
    if not getattr(args, "features", None):
        return None
    payload = json.loads(Path(args.features).read_text(encoding="utf-8"))
    return payload["selected"] if isinstance(payload, dict) else list(payload)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_synth(args) -> int:
    out = _out_dir(args)
    records = synth.synthetic_records(
        n=args.rows, seed=args.seed, attack_fraction=args.attack_fraction
    )
    path = out / args.name
    path.write_text(ingest.format_conn_log(records), encoding="utf-8")
    print(f"wrote {len(records)} flows to {path}")
    return 0


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    records: list[ingest.FlowRecord] = []
    for path in args.input:
        records.extend(_load_records(path))
    report = {
        "inputs": list(args.input),
        "parsed": len(records),
        "attack": sum(1 for r in records if r.label == ingest.ATTACK),
        "benign": sum(1 for r in records if r.label == ingest.BENIGN),
    }
    if args.total:
        # Clean before balancing so duplicates never eat into the subset.
        records, clean_report = preprocess.clean(records)
        report["clean"] = clean_report.to_dict()
        records = ingest.balance_subset(records, args.total, args.ratio, args.seed)
        report["balanced_total"] = len(records)
        report["balanced_attack"] = sum(1 for r in records if r.label == ingest.ATTACK)
    _write_records_csv(records, out / "records.csv")
    _write_json(out / "ingest_report.json", report)
    print(f"wrote {len(records)} records to {out / 'records.csv'}")
    return 0


def cmd_preprocess(args) -> int:
    out = _out_dir(args)
    records = _load_records(args.records)
    prep = preprocess.prepare(records, seed=args.seed)
    _save_split_dir(prep.split, out, args.seed)
    _write_json(out / "clean_report.json", prep.clean_report.to_dict())
    print(
        f"train/validation/test rows: {prep.split.train.n_rows}/"
        f"{prep.split.validation.n_rows}/{prep.split.test.n_rows} "
        f"({prep.split.train.n_features} features)"
    )
    return 0


def cmd_select_features(args) -> int:
    out = _out_dir(args)
    split = _load_split_dir(args.data)
    corr = features.correlation_matrix(split.train)
    corr.to_csv(out / "correlation.csv")
    corr.to_long_csv(out / "correlation_long.csv")
    corr.to_json(out / "correlation.json")
    model = boosting.train_xgb(split.train, seed=args.seed)
    report = features.model_importance(model, mode=args.mode)
    report.to_csv(out / "importance.csv")
    report.to_json(out / "importance.json")
    selected = features.select_nonzero(report)
    _write_json(out / "selected.json", {"mode": args.mode, "selected": selected})
    if not args.no_figures:
        from . import report as fig

        fig.save_correlation_heatmap(corr, out / "correlation.png")
        fig.save_importance_bars(report, out / "importance.png")
    print(f"selected {len(selected)}/{split.train.n_features} features "
          f"({args.mode} mode); top: "
          + ", ".join(f"{n}={v:g}" for n, v in report.ranked()[:4]))
    return 0


def cmd_train(args) -> int:
    out = _out_dir(args)
    split = _load_split_dir(args.data)
    hyper = _load_hyper(args.model, args.params)
    selected = _select_names(args)
    train_ds = split.train.select(selected) if selected else split.train
    val_ds = split.validation.select(selected) if selected else split.validation
    model = evaluate.train_model(hyper, train_ds, seed=args.seed)
    blob = serialize_model(
        model,
        encoding=split.train.encoding,
        scaler=split.train.scaler,
        feature_names=list(split.train.feature_names),
        feature_kinds=list(split.train.feature_kinds),
        selected=selected,
        seed=args.seed,
        fingerprint=dataset_fingerprint(train_ds),
    )
    model_path = out / f"{args.model}.ebot"
    save_artifact(model_path, blob)
    report = evaluate.evaluate_model(model, val_ds, name="validation")
    report.hyperparams = hyper.to_dict()
    report.seed = args.seed
    report.model_size_bytes = len(blob)
    report.to_json(out / f"{args.model}_validation.json", include_volatile=False)
    (out / f"{args.model}_validation.txt").write_text(
        format_report_table([report]), encoding="utf-8"
    )
    if not args.no_figures:
        from . import report as fig

        fig.save_confusion_matrix(
            report.confusion, out / f"{args.model}_validation_confusion.png",
            title=f"{args.model} validation",
        )
    acc = report.metrics.get("accuracy")
    print(f"saved {model_path} ({len(blob)} bytes); validation accuracy "
          f"{'undefined' if acc is None else f'{acc:.4f}'}")
    return 0


def _builtin_space(kind: str, n_iter: int, seed: int) -> ParamSpace:
    choices = {
        "rf": {
            "max_depth": [2, 4, 6, 10],
            "n_estimators": [25, 50, 100],
            "min_samples_split": [2, 10],
            "min_samples_leaf": [1, 4],
            "max_features": ["sqrt"],
        },
        "xgb": {
            "max_depth": [3, 6, 8],
            "n_estimators": [50, 100],
            "learning_rate": [0.05, 0.1, 0.3],
            "subsample": [0.8, 1.0],
            "colsample_bytree": [0.8, 1.0],
            "gamma": [0.0, 0.1, 0.5],
        },
        "lgbm": {
            "max_depth": [3, 5, 8],
            "n_estimators": [100, 200],
            "learning_rate": [0.01, 0.05, 0.1],
            "num_leaves": [15, 31, 63],
            "min_child_samples": [10, 20],
            "subsample": [0.8, 0.9, 1.0],
            "colsample_bytree": [0.8, 0.9, 1.0],
            "reg_alpha": [0.0, 1.0],
            "reg_lambda": [0.0, 1.0],
        },
    }[kind]
    return ParamSpace(model=kind, choices=choices, n_iter=n_iter, seed=seed)


def cmd_tune(args) -> int:
    out = _out_dir(args)
    split = _load_split_dir(args.data)
    if args.space:
        payload = json.loads(Path(args.space).read_text(encoding="utf-8"))
        space = ParamSpace(
            model=payload.get("model", args.model),
            choices=payload["choices"],
            n_iter=payload.get("n_iter", args.n_iter),
            seed=payload.get("seed", args.seed),
        )
    else:
        space = _builtin_space(args.model, args.n_iter, args.seed)
    best, trials = evaluate.random_search(
        space, split.train, split.validation, metric=args.metric,
        train_seed=args.seed,
    )
    with open(out / "trials.jsonl", "w", encoding="utf-8") as fh:
        for trial in trials:
            fh.write(json.dumps(trial.to_dict(), sort_keys=True) + "\n")
    _write_json(out / "best_params.json", best.to_dict())
    scored = [t for t in trials if t.score is not None]
    print(f"{len(scored)}/{len(trials)} trials succeeded; best {args.metric} "
          f"{max(t.score for t in scored):.4f} -> {out / 'best_params.json'}")
    return 0


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    art = load_artifact(args.model)
    split = _load_split_dir(args.data)
    ds = getattr(split, args.split)
    classes, _ = art.predict_full_matrix(ds.values)
    cm = evaluate.confusion(classes, ds.labels)
    report = EvalReport(
        model=art.kind,
        dataset=args.split,
        confusion=cm,
        metrics=evaluate.metrics(cm),
        hyperparams=art.meta.get("params"),
        seed=art.meta.get("seed"),
        model_size_bytes=art.size_bytes,
    )
    if (ds.labels == 1).any():
        report.detection_probability = float(np.mean(classes[ds.labels == 1] == 1))
    stem = f"{art.kind}_{args.split}"
    report.to_json(out / f"{stem}.json", include_volatile=False)
    (out / f"{stem}.txt").write_text(format_report_table([report]), encoding="utf-8")
    if not args.no_figures:
        from . import report as fig

        fig.save_confusion_matrix(cm, out / f"{stem}_confusion.png",
                                  title=f"{art.kind} {args.split}")
    acc = report.metrics.get("accuracy")
    print(f"{art.kind} {args.split} accuracy "
          f"{'undefined' if acc is None else f'{acc:.4f}'}; report {out / (stem + '.json')}")
    return 0


def cmd_noise_test(args) -> int:
    out = _out_dir(args)
    art = load_artifact(args.model)
    split = _load_split_dir(args.data)
    ds = getattr(split, args.split)
    clean_classes, _ = art.predict_full_matrix(ds.values)
    clean_acc = float(np.mean(clean_classes == ds.labels))
    sigmas = [float(s) for s in args.sigmas.split(",")]
    curves: dict[str, list[float]] = {art.kind: []}
    detail = {}
    for sigma in sigmas:
        accs = []
        for k in range(args.noise_seeds):
            noisy = evaluate.inject_noise(ds, NoiseSpec(sigma=sigma, seed=args.seed + k))
            classes, _ = art.predict_full_matrix(noisy.values)
            accs.append(float(np.mean(classes == ds.labels)))
        curves[art.kind].append(float(np.mean(accs)))
        detail[str(sigma)] = {"per_seed": accs, "mean": float(np.mean(accs))}
    payload = {
        "model": art.kind,
        "split": args.split,
        "clean_accuracy": clean_acc,
        "sigmas": sigmas,
        "noisy": detail,
        "noise_seeds": args.noise_seeds,
        "seed": args.seed,
    }
    _write_json(out / f"{art.kind}_noise.json", payload)
    if not args.no_figures:
        from . import report as fig

        fig.save_noise_curve([0.0] + sigmas,
                             {art.kind: [clean_acc] + curves[art.kind]},
                             out / f"{art.kind}_noise.png")
    drops = ", ".join(
        f"sigma={s}: {100 * (clean_acc - detail[str(s)]['mean']):.2f}pt" for s in sigmas
    )
    print(f"{art.kind} clean {clean_acc:.4f}; mean degradation {drops}")
    return 0


def cmd_benchmark(args) -> int:
    out = _out_dir(args)
    split = _load_split_dir(args.data)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    reports = []
    for kind in kinds:
        hyper = _load_hyper(kind, args.params)
        report = evaluate.benchmark(
            hyper, split.train, split.test, seed=args.seed,
            repeats=args.repeats, dataset_name="test",
        )
        reports.append(report)
        print(f"{kind}: train {report.training_time_s:.3f}s "
              f"infer {report.inference_time_s:.3f}s "
              f"size {report.model_size_bytes} bytes "
              f"accuracy {report.metrics['accuracy']:.4f}")
    table = format_report_table(reports)
    (out / "benchmark.txt").write_text(table, encoding="utf-8")
    _write_json(out / "benchmark.json", [r.to_dict() for r in reports])
    if not args.no_figures:
        from . import report as fig

        fig.save_model_comparison(reports, out / "benchmark.png")
    print(table, end="")
    return 0


def _open_input(path: str):
    if path == "-":
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def _open_output(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def cmd_predict(args) -> int:
    art = load_artifact(args.model)
    mode = stream.MODE_ALERTS if args.alerts_only else stream.MODE_FULL
    infh = _open_input(args.input)
    outfh = _open_output(args.output)
    try:
        stats = stream.classify_stream(art, infh, outfh.write, mode=mode)
    finally:
        if infh is not sys.stdin:
            infh.close()
        if outfh is not sys.stdout:
            outfh.close()
    print(f"lines {stats.lines} classified {stats.records} alerts {stats.alerts} "
          f"errors {stats.errors}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    art = load_artifact(args.model)
    mode = stream.MODE_ALERTS if args.alerts_only else stream.MODE_FULL
    infh = _open_input(args.input)
    outfh = _open_output(args.output)
    stop = threading.Event()
    try:
        stats = stream.run_daemon(
            art, infh, outfh.write, mode=mode, workers=args.workers,
            queue_size=args.queue_size, follow=args.follow, stop=stop,
        )
    except KeyboardInterrupt:
        stop.set()
        print("interrupted; shutting down", file=sys.stderr)
        return 0
    finally:
        if infh is not sys.stdin:
            infh.close()
        if outfh is not sys.stdout:
            outfh.close()
    print(f"lines {stats.lines} classified {stats.records} alerts {stats.alerts} "
          f"errors {stats.errors}", file=sys.stderr)
    return 0


def cmd_inspect(args) -> int:
    art = load_artifact(args.model)
    sys.stdout.write(describe(art))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgebot",
        description="Botnet detection toolkit for edge-assisted IoT networks",
    )
    parser.add_argument("--version", action="version", version=f"edgebot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, figures: bool = False) -> None:
        p.add_argument("--seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--output-dir", default=None, help="directory for outputs")
        if figures:
            p.add_argument("--no-figures", action="store_true",
                           help="skip PNG rendering next to delimited output")

    p = sub.add_parser("synth", help="generate a synthetic labeled conn.log")
    common(p)
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--attack-fraction", type=float, default=0.5)
    p.add_argument("--name", default="flows.log")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse logs/CSVs and optionally balance")
    common(p)
    p.add_argument("--input", nargs="+", required=True,
                   help="conn.log(.labeled) or CSV files; multiple inputs pool")
    p.add_argument("--total", type=int, default=0, help="balanced subset size (0 = keep all)")
    p.add_argument("--ratio", type=float, default=0.5, help="attack fraction of the subset")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="clean, encode, scale, split")
    common(p)
    p.add_argument("--records", required=True, help="records.csv or conn.log")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("select-features", help="correlation + importance reports")
    common(p, figures=True)
    p.add_argument("--data", required=True, help="directory from preprocess")
    p.add_argument("--mode", choices=features.IMPORTANCE_MODES, default="weight")
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("train", help="train one model, save artifact")
    common(p, figures=True)
    p.add_argument("--model", choices=("rf", "xgb", "lgbm"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--params", default="table3", help="'table3' or params JSON path")
    p.add_argument("--features", default=None, help="selected.json from select-features")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="randomized hyperparameter search")
    common(p)
    p.add_argument("--model", choices=("rf", "xgb", "lgbm"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--space", default=None, help="param space JSON path")
    p.add_argument("--n-iter", type=int, default=10)
    p.add_argument("--metric", default="accuracy")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="score a saved model on one split")
    common(p, figures=True)
    p.add_argument("--model", required=True, help="model artifact path")
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=SPLIT_NAMES, default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("noise-test", help="accuracy under Gaussian corruption")
    common(p, figures=True)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=SPLIT_NAMES, default="test")
    p.add_argument("--sigmas", default="0.1", help="comma-separated noise levels")
    p.add_argument("--noise-seeds", type=int, default=10)
    p.set_defaults(func=cmd_noise_test)

    p = sub.add_parser("benchmark", help="timings, sizes, and metrics per model")
    common(p, figures=True)
    p.add_argument("--models", default="rf,xgb,lgbm")
    p.add_argument("--data", required=True)
    p.add_argument("--params", default="table3")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("predict", help="classify a log file in one pass")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-")
    p.add_argument("--output", default="-")
    p.add_argument("--alerts-only", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="streaming classification daemon")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-")
    p.add_argument("--output", default="-")
    p.add_argument("--alerts-only", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--queue-size", type=int, default=64)
    p.add_argument("--follow", action="store_true", help="keep polling the input file")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("inspect", help="text dump of a model artifact")
    common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = load_config(resolve("config", getattr(args, "config", None), {}, str, None))
    args.seed = resolve("seed", getattr(args, "seed", None), cfg, int, 0)
    args.output_dir = resolve("output_dir", getattr(args, "output_dir", None), cfg, str, ".")
    try:
        return args.func(args)
    except EdgebotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
