"""Command-line pipeline: synth / fit / eval / score-task / report.

Every run is driven by a JSON config plus a mandatory seed and is
reproducible byte-for-byte: run records contain no wall-clock entropy
(timings go to a sidecar file). Exit codes: 0 ok, 2 config error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from corrspace.cca import CcaModel, fit_cca
from corrspace.config import ExperimentConfig
from corrspace.data import (
    MultiviewDataset,
    ViewMatrix,
    load_dataset,
    save_dataset,
    synth_correlated,
)
from corrspace.dcca import DccaModel, train_dcca
from corrspace.dgcca import DgccaModel, train_dgcca
from corrspace.errors import ConfigError, CorrspaceError, DataError, NumericalError
from corrspace.retrieval import (
    RetrievalReport,
    evaluate_all_pairs,
    format_report,
    random_baseline,
)
from corrspace.scoring import (
    REFERENCE_SETS,
    load_corpus,
    score_retrieval_as_task,
)
from corrspace.training import TrainLog


def load_model(model_dir):
    """Load any persisted shared-space model by its header type."""
    model_dir = Path(model_dir)
    header_path = model_dir / "header.json"
    if not header_path.exists():
        raise DataError(f"no model header at {header_path}")
    kind = json.loads(header_path.read_text()).get("type")
    if kind == "cca":
        return CcaModel.load(model_dir)
    if kind == "dcca":
        return DccaModel.load(model_dir)
    if kind == "dgcca":
        return DgccaModel.load(model_dir)
    raise DataError(f"unknown model type {kind!r} in {header_path}")


def model_views(model) -> list[str]:
    if isinstance(model, (CcaModel, DccaModel)):
        return [model.view_x, model.view_y]
    return list(model.view_names)


def model_id(model) -> str:
    kind = {CcaModel: "cca", DccaModel: "dcca", DgccaModel: "dgcca"}[type(model)]
    return f"{kind}:" + "+".join(model_views(model))


def _split_report(model, dataset: MultiviewDataset, split: str, n: int, metric: str) -> RetrievalReport:
    idx = dataset.require_split(split)
    emb = {v: model.embed(dataset.view(v).data[idx], v) for v in model_views(model)}
    return evaluate_all_pairs(
        emb, n, metric, split=split, model_id=model_id(model),
        baseline=random_baseline(len(idx), min(n, len(idx))),
    )


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_synth(args) -> int:
    dims = _parse_int_list(args.views)
    n_per_split = _parse_int_list(args.n)
    if len(n_per_split) != 3:
        raise ConfigError("--n takes train,dev,test sizes")
    names = args.names.split(",") if args.names else None
    dataset = synth_correlated(
        tuple(n_per_split), dims, args.latent, args.noise, args.seed, view_names=names
    )
    manifest = save_dataset(dataset, args.out)
    print(manifest)
    return 0


def _fit_model(cfg: ExperimentConfig, dataset: MultiviewDataset):
    """Dispatch on method; returns (model, train log)."""
    for v in cfg.views:
        dataset.view(v)  # unknown views fail before any work
    if cfg.method == "cca":
        train_idx = dataset.require_split("train")
        x, y = (ViewMatrix(v, dataset.view(v).data[train_idx]) for v in cfg.views)
        model = fit_cca(x, y, k=cfg.k, r=cfg.r)
        log = TrainLog()
        dev_idx = dataset.require_split("dev")
        emb = {
            v: model.embed(dataset.view(v).data[dev_idx], v) for v in cfg.views
        }
        report = evaluate_all_pairs(emb, cfg.n, cfg.metric, split="dev")
        scores = {f"{p.source}->{p.reference}": p.recall for p in report.pairs}
        log.record(0, float(np.sum(model.correlations)), scores)
        log.selected_epoch = 0
        return model, log
    if cfg.method == "dcca":
        model = train_dcca(dataset, cfg.views[0], cfg.views[1], cfg)
        return model, model.log
    if cfg.method == "gcca-linear":
        model = train_dgcca(dataset, cfg.views, cfg, identity_extractors=True)
        return model, model.log
    model = train_dgcca(dataset, cfg.views, cfg)
    return model, model.log


def cmd_fit(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    out_dir = Path(args.out or cfg.out_dir)
    if not str(out_dir):
        raise ConfigError("an output directory is required (--out or config out_dir)")
    if not cfg.manifest:
        raise ConfigError("config must name a dataset manifest")
    dataset = load_dataset(cfg.manifest)
    cfg.k = cfg.resolve_k([dataset.view(v).dim for v in cfg.views])

    t0 = time.perf_counter()
    model, log = _fit_model(cfg, dataset)
    fit_seconds = time.perf_counter() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    model.save(out_dir / "model")

    t1 = time.perf_counter()
    final_reports = {}
    for split in ("dev", "test"):
        if dataset.split_indices(split).size:
            final_reports[split] = _split_report(model, dataset, split, cfg.n, cfg.metric).to_dict()
    eval_seconds = time.perf_counter() - t1

    record = {
        "config": cfg.snapshot(),
        "epochs": log.to_dict()["epochs"],
        "selected_epoch": log.selected_epoch,
        "final_reports": final_reports,
        "warnings": log.warnings,
    }
    (out_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    # wall-clock numbers live outside the (byte-reproducible) run record
    (out_dir / "run_timings.json").write_text(
        json.dumps({"fit_seconds": fit_seconds, "eval_seconds": eval_seconds}, indent=2) + "\n"
    )
    print(f"model: {out_dir / 'model'}")
    print(f"run record: {out_dir / 'run.json'}")
    print(f"selected epoch: {log.selected_epoch}")
    for split, rep in final_reports.items():
        print(f"{split} aggregate Recall@{cfg.n}: {rep['aggregate']:.2f}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    splits = [s.strip() for s in args.split.split(",") if s.strip()]
    reports = []
    for split in splits:
        report = _split_report(model, dataset, split, args.n, args.metric)
        reports.append(report)
        print(format_report(report))
        print()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
        )
        (out_dir / "report.txt").write_text(
            "\n\n".join(format_report(r) for r in reports) + "\n"
        )
    return 0


def cmd_score_task(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    corpus = load_corpus(args.corpus)
    reference_sets = [s.strip() for s in args.reference_sets.split(",") if s.strip()]
    for ref_set in reference_sets:
        if ref_set not in REFERENCE_SETS:
            raise ConfigError(f"unknown reference set {ref_set!r}; expected {REFERENCE_SETS}")

    label = args.metric.upper()
    rows = []
    for ref_set in reference_sets:
        score = score_retrieval_as_task(
            model, dataset, args.source_view, args.reference_view,
            args.source_split, ref_set, corpus, args.metric,
            distance_metric=args.distance_metric,
        )
        rows.append((ref_set, score))

    width = max(16, max(len(r) for r, _ in rows) + 2)
    print(f"Task scoring: {args.source_view} -> {args.reference_view} "
          f"({label}, source split: {args.source_split})")
    print("Reference Set".ljust(width) + label)
    for ref_set, score in rows:
        suffix = "%" if args.metric == "wer" else ""
        print(ref_set.ljust(width) + f"{score:.2f}{suffix}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "source_view": args.source_view,
            "reference_view": args.reference_view,
            "source_split": args.source_split,
            "metric": args.metric,
            "scores": {ref_set: score for ref_set, score in rows},
        }
        (out_dir / "task_scores.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_report(args) -> int:
    run_path = Path(args.run)
    if run_path.is_dir():
        run_path = run_path / "run.json"
    if not run_path.exists():
        raise DataError(f"no run record at {run_path}")
    record = json.loads(run_path.read_text())
    cfg = record.get("config", {})
    print(f"method: {cfg.get('method')}  views: {','.join(cfg.get('views', []))}  "
          f"k: {cfg.get('k')}  seed: {cfg.get('seed')}")
    print(f"selected epoch: {record.get('selected_epoch')}")
    for warning in record.get("warnings", []):
        print(f"warning: {warning}")
    for split in sorted(record.get("final_reports", {})):
        print()
        print(format_report(RetrievalReport.from_dict(record["final_reports"][split])))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrspace",
        description="Multiview correlated-representation learning and retrieval evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic correlated multiview dataset")
    p.add_argument("--views", required=True, help="comma-separated view dimensionalities")
    p.add_argument("--latent", type=int, required=True, help="shared latent dimensionality")
    p.add_argument("--n", required=True, help="train,dev,test sample counts")
    p.add_argument("--noise", type=float, default=0.0, help="isotropic noise level")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--names", default="", help="optional comma-separated view names")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a model from a JSON experiment config")
    p.add_argument("--config", required=True, help="path to the experiment config JSON")
    p.add_argument("--out", default="", help="output directory (overrides config out_dir)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="cross-view retrieval report for a fitted model")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--split", default="dev,test", help="comma-separated splits")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--metric", choices=("cosine", "euclidean"), default="cosine")
    p.add_argument("--out", default="", help="directory for report.json / report.txt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score-task", help="score top-1 retrieval with WER or BLEU")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--corpus", required=True, help="sentence file aligned with dataset rows")
    p.add_argument("--source-view", required=True)
    p.add_argument("--reference-view", required=True)
    p.add_argument("--source-split", default="test")
    p.add_argument("--reference-sets", default="train,train+test",
                   help="comma-separated subset of: test, train, train+test")
    p.add_argument("--metric", choices=("wer", "bleu"), required=True)
    p.add_argument("--distance-metric", choices=("cosine", "euclidean"), default="cosine")
    p.add_argument("--out", default="", help="directory for task_scores.json")
    p.set_defaults(func=cmd_score_task)

    p = sub.add_parser("report", help="re-render the tables of a stored run record")
    p.add_argument("--run", required=True, help="run directory or run.json path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except CorrspaceError as exc:  # fallback for any future subclass
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
