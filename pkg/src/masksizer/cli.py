"""Command-line driver for the sizing pipeline.

Subcommands: synth, validate, train, loocv, evaluate, size, report, serve.
Pipeline failures exit 1 with a structured JSON error on stderr; usage
errors exit 2.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .benchmarks import benchmark_matrices
from .errors import MaskSizerError
from .dataset import load_manifest
from .imaging import decode_image
from .network import load_model
from .pipeline import report_from_folds, run_loocv, size_image, train_full
from .sizing import ConfusionMatrix, ESON, metrics_text
from .synthetic import SynthParams, corpus_difficulty, write_corpus
from .training import TrainConfig, read_fold_results

logger = logging.getLogger(__name__)


def _crop_arg(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {value!r}") from None


def _range_arg(value: str) -> tuple[float, float]:
    try:
        lo, hi = value.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {value!r}") from None


def _train_config(args, **overrides) -> TrainConfig:
    crop_w, crop_h = args.crop
    cfg = dict(
        alpha0=args.alpha,
        drop_prob=args.drop_prob,
        max_epochs=args.epochs,
        patience=args.patience,
        base_seed=args.seed,
        stats_mode=args.stats_mode,
        n_hidden=args.hidden,
        crop_w=crop_w,
        crop_h=crop_h,
        batch_size=args.batch_size,
    )
    cfg.update(overrides)
    return TrainConfig(**cfg)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--crop", type=_crop_arg, default=(200, 150), help="crop size WxH")
    p.add_argument("--hidden", type=int, default=40)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.002)
    p.add_argument("--drop-prob", type=float, default=0.7)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--stats-mode", choices=["per-fold", "global"], default="per-fold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masksizer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=_crop_arg, default=(640, 520), help="WxH")
    p.add_argument("--alar", type=_range_arg, default=(30.0, 50.0), help="nose width range MIN:MAX mm")
    p.add_argument("--scale", type=_range_arg, default=(2.0, 6.0), help="px/mm range MIN:MAX")
    p.add_argument("--nose-box-frac", type=float, default=0.55)
    p.add_argument("--noise", type=float, default=8.0)

    p = sub.add_parser("validate", help="validate a manifest")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("train", help="train one model on all manifest samples")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model-out", required=True)
    _add_train_flags(p)

    p = sub.add_parser("loocv", help="leave-one-out evaluation with report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--subset", type=int, default=None, help="use only the first N samples")
    _add_train_flags(p)

    p = sub.add_parser("evaluate", help="metrics for stored confusion matrices")
    p.add_argument(
        "--fixtures",
        nargs="?",
        const="-",
        default=None,
        metavar="PATH",
        help="evaluate bundled benchmark matrices, or matrices from a JSON file",
    )

    p = sub.add_parser("size", help="width and size for one annotated image")
    p.add_argument("--image", required=True)
    p.add_argument("--annot", required=True, help="JSON file with annotation fields")
    p.add_argument("--model", default=None, help="model file; omit to size from manual landmarks")

    p = sub.add_parser("report", help="regenerate the metrics report from saved folds")
    p.add_argument("--folds", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--crop", type=_crop_arg, default=(200, 150))

    p = sub.add_parser("serve", help="start the annotation/review HTTP service")
    p.add_argument("--store", default=None, help="store directory (or MASKSIZER_STORE env var)")
    p.add_argument("--model", default=None, help="model file served by /predict")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8021)

    return parser


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_synth(args) -> int:
    params = SynthParams(
        seed=args.seed,
        count=args.count,
        image_w=args.image_size[0],
        image_h=args.image_size[1],
        alar_mm_min=args.alar[0],
        alar_mm_max=args.alar[1],
        scale_min=args.scale[0],
        scale_max=args.scale[1],
        nose_box_frac=args.nose_box_frac,
        noise=args.noise,
    )
    records, manifest_path = write_corpus(params, args.out)
    summary = {"manifest": str(manifest_path), "count": len(records)}
    if records:
        summary["difficulty"] = corpus_difficulty(records)
    _print(summary)
    return 0


def cmd_validate(args) -> int:
    records = load_manifest(args.manifest, chart=ESON)
    _print({"manifest": args.manifest, "samples": len(records), "valid": True})
    return 0


def cmd_train(args) -> int:
    summary = train_full(args.manifest, _train_config(args), args.model_out)
    _print(summary)
    return 0


def cmd_loocv(args) -> int:
    config = _train_config(args, repetitions=args.reps)
    summary = run_loocv(args.manifest, args.out_dir, config, subset=args.subset)
    _print(summary)
    return 0


def cmd_evaluate(args) -> int:
    if args.fixtures is None:
        print("nothing to evaluate: pass --fixtures [PATH]", file=sys.stderr)
        return 2
    if args.fixtures == "-":
        matrices = benchmark_matrices()
    else:
        doc = json.loads(Path(args.fixtures).read_text(encoding="utf-8"))
        labels = tuple(doc.get("labels", ESON.names))
        matrices = {
            name: ConfusionMatrix(counts=rows, labels=labels)
            for name, rows in doc["matrices"].items()
        }
    for name, cm in matrices.items():
        print(metrics_text(cm, title=f"{name} sizing"))
    return 0


def cmd_size(args) -> int:
    image = decode_image(Path(args.image).read_bytes())
    annot = json.loads(Path(args.annot).read_text(encoding="utf-8"))
    model = load_model(args.model) if args.model else None
    _print(size_image(image, annot, model))
    return 0


def cmd_report(args) -> int:
    folds = read_fold_results(args.folds)
    config = TrainConfig(crop_w=args.crop[0], crop_h=args.crop[1])
    _print(report_from_folds(folds, args.manifest, config))
    return 0


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service.app import create_app

    store = args.store or os.environ.get("MASKSIZER_STORE")
    if not store:
        print("no store directory: pass --store or set MASKSIZER_STORE", file=sys.stderr)
        return 2
    app = create_app(store, model_path=args.model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "train": cmd_train,
    "loocv": cmd_loocv,
    "evaluate": cmd_evaluate,
    "size": cmd_size,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MaskSizerError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
