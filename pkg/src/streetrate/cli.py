"""Command-line interface wiring the pipeline stages together.

Exit codes: 0 success, 1 usage error, 2 data error. Every random choice is
controlled by an explicit --seed flag.
"""

from __future__ import annotations

import argparse
import sys

from . import dataset, features, geo, metrics, model, pipeline
from ._container import ContainerError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_edges(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bin edges: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streetrate", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("sample", parents=[], help="sample capture points along a street network")
    p.add_argument("--network", required=True, help="GeoJSON street network")
    p.add_argument("--out", required=True, help="points CSV to write")
    p.add_argument("--interval-m", type=float, default=200.0)
    p.add_argument("--flip-heading", action="store_true", help="face the other street side")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("codebook", help="build a visual-word codebook from corpus images")
    p.add_argument("--images", required=True, help="images.csv manifest")
    p.add_argument("--out", required=True, help="codebook file to write")
    p.add_argument("--k", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-descriptors", type=int, default=100_000)
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("features", help="compute visual-word features or import embeddings")
    p.add_argument("--images", help="images.csv manifest (with --codebook)")
    p.add_argument("--codebook", help="codebook file")
    p.add_argument("--import", dest="import_path", help="external embedding CSV to validate/import")
    p.add_argument("--out", required=True, help="features CSV to write")
    p.add_argument("--workers", type=int, default=0, help="0 = one per CPU, capped at 8")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("split", help="stratified dev/test split of labelled images")
    p.add_argument("--labels", required=True, help="labels.jsonl store")
    p.add_argument("--task", required=True, choices=dataset.TASKS)
    p.add_argument("--per-class-dev", type=int, default=40)
    p.add_argument("--per-class-test", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="split JSON to write")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one task's classifier")
    p.add_argument("--task", required=True, choices=dataset.TASKS)
    p.add_argument("--labels", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--per-class-dev", type=int, default=40)
    p.add_argument("--per-class-test", type=int, default=60)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--lambda-grid", default="", help="comma-separated candidates tuned on dev")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", choices=model.NORMALIZE_MODES, default="l2")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--metrics-out", help="optional metrics CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved model on labelled images")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--split", help="restrict to one side of a saved split JSON")
    p.add_argument("--subset", choices=("train", "dev", "test"), default="test")
    p.add_argument("--out", help="metrics CSV to write (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("screen", help="drop images predicted unqualified")
    p.add_argument("--images", required=True)
    p.add_argument("--model", required=True, help="qualification model")
    p.add_argument("--features", required=True)
    p.add_argument("--out-qualified", required=True)
    p.add_argument("--out-rejected", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("score", help="predict ratings and aggregate per street segment")
    p.add_argument("--images", required=True, help="qualified images manifest")
    p.add_argument("--quality-model", required=True)
    p.add_argument("--continuity-model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out-scores", required=True)
    p.add_argument("--out-predictions", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("map", help="export the segment evaluation map as GeoJSON")
    p.add_argument("--scores", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quality-bins", type=_parse_edges, default=geo.DEFAULT_QUALITY_EDGES)
    p.add_argument("--continuity-bins", type=_parse_edges, default=geo.DEFAULT_CONTINUITY_EDGES)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("validate", help="rank-correlate machine scores with survey means")
    p.add_argument("--scores", required=True)
    p.add_argument("--survey", required=True)
    p.add_argument("--out", help="optional CSV output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the labeling service")
    p.add_argument("--images", required=True, help="images.csv manifest")
    p.add_argument("--labels", required=True, help="labels.jsonl store path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--model", help="qualification model for the uncertain strategy")
    p.add_argument("--quality-model", help="quality model for the uncertain strategy")
    p.add_argument("--continuity-model", help="continuity model for the uncertain strategy")
    p.add_argument("--features", help="features CSV, required by the uncertain strategy")
    p.add_argument("--ui-dir", help="directory with the built labeling UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_sample(args) -> int:
    segments = geo.load_street_network(args.network)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        fh.write("point_id,segment_id,offset_m,lon,lat,heading_deg\n")
        for seg in sorted(segments, key=lambda s: s.segment_id):
            for pt in geo.sample_points(seg, args.interval_m, flip_heading=args.flip_heading):
                fh.write(
                    f"{pt.point_id},{pt.segment_id},{repr(pt.offset_m)},"
                    f"{repr(pt.position[0])},{repr(pt.position[1])},{repr(pt.heading_deg)}\n"
                )
    print(f"sampled {sum(len(geo.sample_points(s, args.interval_m)) for s in segments)} points "
          f"from {len(segments)} segments -> {args.out}")
    return 0


def cmd_codebook(args) -> int:
    import numpy as np

    images = dataset.read_manifest(args.images)
    chunks = [features.dense_descriptors(rec.raster_path) for rec in images]
    sample = np.concatenate(chunks, axis=0)
    sample = sample[np.linalg.norm(sample, axis=1) > 0]
    if len(sample) > args.max_descriptors:
        from .rng import SplitMix64

        idx = list(range(len(sample)))
        SplitMix64(args.seed ^ 0xC0DEB00C).shuffle(idx)
        sample = sample[sorted(idx[: args.max_descriptors])]
    book = features.build_codebook(sample, k=args.k, seed=args.seed)
    features.save_codebook(book, args.out)
    print(f"codebook {book.extractor_id}: k={book.k} from {len(sample)} descriptors -> {args.out}")
    return 0


def cmd_features(args) -> int:
    if args.import_path:
        vecs = features.import_embeddings(args.import_path)
        if not vecs:
            raise ValueError(f"{args.import_path}: no embedding rows")
    else:
        if not (args.images and args.codebook):
            raise UsageError("features needs either --import or both --images and --codebook")
        book = features.load_codebook(args.codebook)
        images = dataset.read_manifest(args.images)
        vecs = pipeline.extract_features(images, book, workers=args.workers or None)
    features.write_features_csv(vecs, args.out)
    print(f"{len(vecs)} feature vectors ({vecs[0].extractor_id}, d={vecs[0].dim}) -> {args.out}")
    return 0


def cmd_split(args) -> int:
    store = dataset.LabelStore(args.labels)
    labels = dataset.resolve_labels(store, args.task)
    split = dataset.stratified_split(labels, args.per_class_dev, args.per_class_test, args.seed)
    dataset.save_split(split, args.out)
    print(
        f"split {args.task}: train={len(split.train_ids)} dev={len(split.dev_ids)} "
        f"test={len(split.test_ids)} -> {args.out}"
    )
    return 0


def cmd_train(args) -> int:
    store = dataset.LabelStore(args.labels)
    labels = dataset.resolve_labels(store, args.task)
    feats = features.load_features_map(args.features)
    hyper = model.Hyperparams(args.lam, args.epochs, args.seed, args.normalize)
    grid = tuple(float(p) for p in args.lambda_grid.split(",") if p)
    spec = pipeline.SplitSpec(args.per_class_dev, args.per_class_test, args.split_seed)
    trained, reports, _split = pipeline.train_task(args.task, labels, feats, hyper, spec, grid)
    model.save_model(trained, args.out)
    csv_text = metrics.classification_csv({f"{args.task}/{k}": v for k, v in reports.items()})
    if trained.task == "quality":
        csv_text += metrics.mse_csv({args.task: tuple(reports[k].mse for k in ("train", "dev", "test"))})
    if args.metrics_out:
        with open(args.metrics_out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    print(csv_text, end="")
    print(f"model (lam={trained.hyper.lam}) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    trained = model.load_model(args.model)
    feats = features.load_features_map(args.features)
    labels = dataset.resolve_labels(dataset.LabelStore(args.labels), trained.task)
    if args.split:
        split = dataset.load_split(args.split)
        ids = {"train": split.train_ids, "dev": split.dev_ids, "test": split.test_ids}[args.subset]
        labels = {i: v for i, v in labels.items() if i in ids}
    ids = sorted(labels)
    missing = [i for i in ids if i not in feats]
    if missing:
        raise pipeline.MissingFeature(missing[0])
    y_true = [labels[i] for i in ids]
    y_pred = [model.predict(trained, feats[i]) for i in ids]
    if trained.task == "quality":
        rep = metrics.quality_report(y_true, y_pred)
    else:
        rep = metrics.classification_report(y_true, y_pred)
    text = metrics.classification_csv({f"{trained.task}/{args.subset or 'all'}": rep})
    if rep.mse is not None:
        text += f"mse,{rep.mse:.6g}\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def cmd_screen(args) -> int:
    images = dataset.read_manifest(args.images)
    qual_model = model.load_model(args.model)
    feats = features.load_features_map(args.features)
    qualified, rejected = pipeline.screen_qualified(images, qual_model, feats)
    dataset.write_manifest(qualified, args.out_qualified)
    dataset.write_manifest(rejected, args.out_rejected)
    total = len(images) or 1
    print(
        f"qualified {len(qualified)}, rejected {len(rejected)} "
        f"({100 * len(rejected) / total:.1f}% screened out)"
    )
    return 0


def cmd_score(args) -> int:
    images = dataset.read_manifest(args.images)
    qmodel = model.load_model(args.quality_model)
    cmodel = model.load_model(args.continuity_model)
    feats = features.load_features_map(args.features)
    scores = pipeline.score_segments(images, qmodel, cmodel, feats)
    pipeline.write_scores_csv(scores, args.out_scores)
    rows = pipeline.predict_records(images, {"quality": qmodel, "continuity": cmodel}, feats)
    pipeline.write_predictions_csv(rows, args.out_predictions)
    print(f"{len(scores)} segment scores -> {args.out_scores}; predictions -> {args.out_predictions}")
    return 0


def cmd_map(args) -> int:
    scores = pipeline.read_scores_csv(args.scores)
    segments = geo.load_street_network(args.network)
    bins = geo.BinSpec(args.quality_bins, args.continuity_bins)
    doc = geo.export_geojson(scores, segments, bins)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(geo.geojson_dumps(doc))
        fh.write("\n")
    print(f"{len(doc['features'])} features -> {args.out}")
    return 0


def cmd_validate(args) -> int:
    scores = pipeline.read_scores_csv(args.scores)
    surveys = pipeline.read_survey_csv(args.survey)
    reports = pipeline.validate_against_survey(scores, surveys)
    lines = ["feature,spearman_r,n_segments"]
    for feature in ("quality", "continuity"):
        rep = reports[feature]
        lines.append(f"{feature},{rep.spearman_r:.4f},{rep.n_segments}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .labelsvc import create_app

    models = {}
    for task, path in (
        ("qualification", args.model),
        ("quality", args.quality_model),
        ("continuity", args.continuity_model),
    ):
        if path:
            models[task] = model.load_model(path)
    feats = features.load_features_map(args.features) if args.features else None
    app = create_app(
        manifest_path=args.images,
        label_store_path=args.labels,
        models=models or None,
        features=feats,
        ui_dir=args.ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


class UsageError(ValueError):
    pass


_DATA_ERRORS = (ValueError, KeyError, OSError, RuntimeError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"streetrate: error: {exc}", file=sys.stderr)
        return 1
    except ContainerError as exc:
        print(f"streetrate: corrupt file: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"streetrate: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
