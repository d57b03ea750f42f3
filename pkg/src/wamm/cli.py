"""Command-line driver for the curation, training and evaluation pipeline.

Exit codes: 0 success, 1 validation error, 2 I/O error. Errors are written
to stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import augment, corpus, curation, evaluate, features, gbdt, model_io, seedcorpus
from .errors import EmptyDataset, WammError
from .fingerprints import PatternBank

log = logging.getLogger("wamm")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(path) -> corpus.Dataset:
    if path is None:
        return seedcorpus.load_seed_corpus()
    ds, report = corpus.load_dataset(path)
    if report.rejected or report.legacy:
        log.warning("%s: %d rows rejected, %d legacy rows skipped",
                    path, report.rejected, sum(report.legacy.values()))
    if not ds.records:
        raise EmptyDataset(f"{path} holds no usable records")
    return ds


def _ops(text: str) -> list[str]:
    names = [o.strip() for o in text.split(",") if o.strip()]
    for name in names:
        augment.AugmentOp(name)
    return names


# -- subcommands ---------------------------------------------------------------

def cmd_dedupe(a) -> None:
    ds = _load(a.data)
    params = curation.LshParams(k=a.k, num_perm=a.bands * a.rows, bands=a.bands, rows=a.rows,
                                jaccard_threshold=a.threshold)
    out, report = curation.lsh_dedupe(ds, params, seed=a.seed)
    corpus.save_dataset(out, a.out)
    if a.report:
        _write_json(a.report, report.to_dict())
    _emit({"input": len(ds.records), "kept": len(out.records), "removed": report.removed_total})


def cmd_flag(a) -> None:
    ds = _load(a.data)
    report = curation.flag_mislabeled(ds, PatternBank.load(a.bank))
    if a.json:
        _write_json(a.json, report.to_dict())
    _emit({"benign_total": report.benign_total, "flagged": report.total_flagged,
           "table": report.table()})


def cmd_correct(a) -> None:
    ds = _load(a.data)
    out = curation.apply_corrections(ds, a.corrections)
    corpus.save_dataset(out, a.out)
    changed = sum(x.label is not y.label for x, y in zip(ds.records, out.records))
    _emit({"records": len(out.records), "relabelled": changed})


def cmd_augment(a) -> None:
    ds = _load(a.data)
    out = augment.expand_dataset(ds, _ops(a.ops), a.variants, seed=a.seed,
                                 include_normal=a.include_normal)
    corpus.save_dataset(out, a.out)
    _emit({"input": len(ds.records), "output": len(out.records)})


def cmd_split(a) -> None:
    ds = _load(a.data)
    train, test = corpus.stratified_split(ds, a.train_fraction, seed=a.seed)
    if a.augment_after_split:
        train = augment.expand_dataset(train, _ops(a.ops), a.variants, seed=a.seed,
                                       include_normal=a.include_normal)
    corpus.save_dataset(train, a.train)
    corpus.save_dataset(test, a.test)
    _emit({"train": len(train.records), "test": len(test.records),
           "augmented": bool(a.augment_after_split)})


def _train_config(a) -> gbdt.TrainConfig:
    return gbdt.TrainConfig(
        max_depth=a.max_depth, learning_rate=a.learning_rate, max_rounds=a.max_rounds,
        early_stopping_patience=a.patience, min_samples_leaf=a.min_samples_leaf,
        min_gain=a.min_gain, validation_fraction=a.validation_fraction, seed=a.seed,
        reg_lambda=a.reg_lambda,
    )


def cmd_train(a) -> None:
    cfg = _train_config(a)
    ds = _load(a.data)
    pipe = features.FeaturePipeline.fit(ds.texts, max_features=a.max_features)
    X = pipe.matrix(ds.texts)
    weights = None if a.unweighted else corpus.class_weights(ds)
    model, tlog = gbdt.train(X, ds.labels, weights, cfg, pipe)
    model_io.save_model(model, a.out)
    if a.log:
        _write_json(a.log, tlog.to_dict())
    _emit({"records": len(ds.records), "features": pipe.width, "rounds": model.completed_rounds,
           "stopped_early": tlog.stopped_early, "model": str(a.out)})


def cmd_eval(a) -> None:
    model = model_io.load_model(a.model)
    ds = _load(a.data)
    pred = model.predict(model.pipeline.matrix(ds.texts))
    rep = evaluate.metrics(evaluate.confusion(ds.labels, pred, model.classes))
    out = {"accuracy": rep.accuracy, "macro_f1": rep.macro_f1, "metrics": rep.to_dict()}
    if a.iters > 0:
        lat = evaluate.latency_bench(model, ds.texts, warmup=min(100, a.iters), iters=a.iters,
                                     min_iters=1)
        out["inference_time_ms"] = lat.end_to_end.mean_us / 1000.0
        out["latency"] = lat.to_dict()
    if a.json:
        _write_json(a.json, out)
    print(rep.render(), file=sys.stderr)
    _emit({k: out[k] for k in ("accuracy", "macro_f1", "inference_time_ms") if k in out})


def cmd_blockrate(a) -> None:
    model = model_io.load_model(a.model)
    ds = _load(a.data)
    rows = evaluate.block_rate_table(ds, PatternBank.load(a.bank), model, raw_only=a.raw_only)
    if a.json:
        _write_json(a.json, {"raw_only": a.raw_only, "rows": [r.to_dict() for r in rows]})
    print(evaluate.render_block_rates(rows))


def cmd_bench(a) -> None:
    model = model_io.load_model(a.model)
    ds = _load(a.data)
    rep = evaluate.latency_bench(model, ds.texts, warmup=a.warmup, iters=a.iters)
    if a.json:
        _write_json(a.json, rep.to_dict())
    _emit(rep.to_dict())


def cmd_serve(a) -> None:
    from .serve import serve
    model = os.environ.get("WAMM_MODEL") or a.model
    bind = os.environ.get("WAMM_BIND") or a.bind
    if not model:
        with resources.as_file(seedcorpus.seed_model_path()) as bundled:
            serve(bundled, bind, a.workers)
        return
    serve(model, bind, a.workers)


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wamm", description="Web-attack payload classification pipeline.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("--seed", type=int, default=0)
        return sp

    def data(sp, required=False):
        sp.add_argument("--data", required=required,
                        help="JSONL or CSV corpus (default: the bundled seed corpus)")

    sp = add("dedupe", cmd_dedupe, "remove near-duplicate Normal records")
    data(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--bands", type=int, default=16)
    sp.add_argument("--rows", type=int, default=8)
    sp.add_argument("--threshold", type=float, default=0.9)
    sp.set_defaults(seed=1)

    sp = add("flag-mislabels", cmd_flag, "screen Normal records against the signature bank")
    data(sp)
    sp.add_argument("--bank")
    sp.add_argument("--json")

    sp = add("apply-corrections", cmd_correct, "relabel records from a record_id,new_class CSV")
    data(sp)
    sp.add_argument("--corrections", required=True)
    sp.add_argument("--out", required=True)

    sp = add("augment", cmd_augment, "append encoding/obfuscation variants of attack records")
    data(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--ops", default=",".join(augment.OP_NAMES))
    sp.add_argument("--variants", type=int, default=1)
    sp.add_argument("--include-normal", action="store_true",
                    help="also transform Normal records")

    sp = add("split", cmd_split, "stratified train/test split")
    data(sp)
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--train-fraction", type=float, default=0.8)
    sp.add_argument("--augment-after-split", action="store_true",
                    help="augment the train half only, after splitting")
    sp.add_argument("--ops", default=",".join(augment.OP_NAMES))
    sp.add_argument("--variants", type=int, default=1)
    sp.add_argument("--include-normal", action="store_true",
                    help="also transform Normal records")

    sp = add("train", cmd_train, "fit the feature pipeline and the boosted trees")
    data(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--log")
    sp.add_argument("--max-features", type=int, default=2000)
    sp.add_argument("--unweighted", action="store_true")
    d = gbdt.TrainConfig()
    sp.add_argument("--max-depth", type=int, default=d.max_depth)
    sp.add_argument("--learning-rate", type=float, default=d.learning_rate)
    sp.add_argument("--max-rounds", type=int, default=d.max_rounds)
    sp.add_argument("--patience", type=int, default=d.early_stopping_patience)
    sp.add_argument("--min-samples-leaf", type=int, default=d.min_samples_leaf)
    sp.add_argument("--min-gain", type=float, default=d.min_gain)
    sp.add_argument("--validation-fraction", type=float, default=d.validation_fraction)
    sp.add_argument("--reg-lambda", type=float, default=d.reg_lambda)

    sp = add("eval", cmd_eval, "accuracy, per-class metrics and inference time")
    sp.add_argument("--model", required=True)
    data(sp, required=True)
    sp.add_argument("--json")
    sp.add_argument("--iters", type=int, default=1000,
                    help="single-request timing iterations (0 skips timing)")

    sp = add("blockrate", cmd_blockrate, "per-class rule vs model block rates")
    sp.add_argument("--model", required=True)
    sp.add_argument("--bank")
    data(sp, required=True)
    sp.add_argument("--json")
    sp.add_argument("--raw-only", action="store_true",
                    help="match signatures against the raw text only, without decoding")

    sp = add("bench", cmd_bench, "single-request latency benchmark")
    sp.add_argument("--model", required=True)
    data(sp)
    sp.add_argument("--warmup", type=int, default=100)
    sp.add_argument("--iters", type=int, default=1000)
    sp.add_argument("--json")

    sp = add("serve", cmd_serve, "run the HTTP classification service")
    sp.add_argument("--model", help="model file (default: the bundled seed-corpus model)")
    sp.add_argument("--bind", default="127.0.0.1:8080")
    sp.add_argument("--workers", type=int, default=4)
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return _fail("usage", exc, 1)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.fn(args)
    except _UsageError as exc:
        return _fail("usage", exc, 1)
    except (WammError, ValueError, KeyError) as exc:
        return _fail("validation", exc, 1)
    except OSError as exc:
        return _fail("io", exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
