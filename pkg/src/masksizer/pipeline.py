"""End-to-end drivers shared by the CLI and the HTTP service: full-corpus
training, leave-one-out evaluation runs with on-disk artifacts, and
single-image sizing."""

import hashlib
import json
import logging
import time
from dataclasses import asdict
from pathlib import Path

from .dataset import (
    annotation_from_dict,
    assemble_raw,
    load_manifest,
    normalize_design,
    scale_px_per_mm,
)
from .imaging import GrayImage, Point, map_point
from .network import SavedModel, save_model
from .sizing import (
    ESON,
    SizeChart,
    confusion,
    metrics_report,
    metrics_text,
    size_predictions,
    width_mm,
)
from .training import (
    TrainConfig,
    FoldResult,
    loocv,
    predict_landmarks_model,
    train_once,
    write_fold_results,
)
from .dataset import prepare_crop

logger = logging.getLogger(__name__)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def train_full(manifest_path, config: TrainConfig, model_out, chart: SizeChart = ESON) -> dict:
    """Train one model on every usable manifest sample and save it."""
    manifest_path = Path(manifest_path)
    records = load_manifest(manifest_path, chart=chart)
    raw = assemble_raw(records, config.crop_w, config.crop_h, manifest_path.parent)
    matrix, stats = normalize_design(raw)
    result = train_once(matrix, config, config.base_seed)
    model = SavedModel(
        params=result.params,
        drop_prob=config.drop_prob,
        stats=stats,
        crop_w=config.crop_w,
        crop_h=config.crop_h,
        seed=config.base_seed,
    )
    save_model(model_out, model)
    return {
        "model": str(model_out),
        "samples": matrix.rows,
        "excluded": [list(e) for e in raw.excluded],
        "epochs_run": result.epochs_run,
        "improvements": result.improvements,
        "final_alpha": result.final_alpha,
        "best_sse": result.best_sse,
    }


def predict_original(
    image: GrayImage, nose_box, model: SavedModel
) -> tuple[Point, Point, tuple[Point, Point]]:
    """Predict landmarks for one image and map them to original-image space.

    Returns (left, right) in original coordinates plus the crop-space pair.
    """
    crop_img, chain = prepare_crop(image, nose_box, model.crop_w, model.crop_h)
    crop_left, crop_right = predict_landmarks_model(model, crop_img)
    return map_point(chain, crop_left), map_point(chain, crop_right), (crop_left, crop_right)


def size_from_points(left: Point, right: Point, scale: float, chart: SizeChart = ESON) -> dict:
    """Width, chart size, and boundary-band flag for one landmark pair in
    original-image space. Single source of truth for the CLI and the service."""
    width = width_mm(left, right, scale)
    size = chart.classify(width)
    band = chart.band_for(width)
    return {
        "width_mm": width,
        "size": size,
        "scale_px_per_mm": scale,
        "landmarks": {"left": list(left), "right": list(right)},
        "boundary_band": None
        if band is None
        else {
            "boundary": band.boundary,
            "low": band.low,
            "high": band.high,
            "sizes": [band.below, band.above],
        },
    }


def size_image(
    image: GrayImage,
    annotation_obj: dict,
    model: SavedModel | None = None,
    chart: SizeChart = ESON,
) -> dict:
    """Width and size for one image: model landmarks when a model is given,
    otherwise the annotation's manual landmarks. The coin scale always comes
    from the annotation."""
    annotation = annotation_from_dict(annotation_obj)
    scale = scale_px_per_mm(annotation)
    if model is not None:
        left, right, _ = predict_original(image, annotation.nose_box, model)
        source = "model"
    else:
        left, right = annotation.left, annotation.right
        source = "annotation"
    result = size_from_points(left, right, scale, chart)
    result["source"] = source
    return result


def run_loocv(
    manifest_path,
    out_dir,
    config: TrainConfig,
    chart: SizeChart = ESON,
    subset: int | None = None,
) -> dict:
    """Full leave-one-out evaluation with on-disk artifacts.

    Writes folds.jsonl, outcomes.jsonl, report.json, report.txt (all
    byte-deterministic for a fixed manifest/config/seed) plus run.json
    with checksums and timestamps.
    """
    started = time.time()
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = load_manifest(manifest_path, chart=chart)
    if subset is not None:
        records = records[:subset]
    raw = assemble_raw(records, config.crop_w, config.crop_h, manifest_path.parent)
    by_id = {r.id: r for r in records}

    folds = loocv(records, config, manifest_path.parent, raw=raw)
    chains = dict(zip(raw.ids, raw.chains))
    predictions = {}
    for fr in folds:
        chain = chains[fr.sample_id]
        left = map_point(chain, (fr.mean[0], fr.mean[1]))
        right = map_point(chain, (fr.mean[2], fr.mean[3]))
        predictions[fr.sample_id] = (left, right)

    ordered = [by_id[i] for i in raw.ids]
    outcomes, skipped = size_predictions(ordered, predictions, chart)
    cm = confusion(outcomes, chart)
    report = metrics_report(cm)
    report["skipped"] = skipped
    report["excluded"] = [list(e) for e in raw.excluded]

    folds_path = out_dir / "folds.jsonl"
    outcomes_path = out_dir / "outcomes.jsonl"
    report_json_path = out_dir / "report.json"
    report_text_path = out_dir / "report.txt"

    write_fold_results(folds_path, folds)
    with outcomes_path.open("w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_dict(), sort_keys=True) + "\n")
    report_json_path.write_text(json.dumps(report, sort_keys=True, indent=1), encoding="utf-8")
    report_text_path.write_text(metrics_text(cm, title="Leave-one-out sizing performance"), encoding="utf-8")

    manifest_hash = sha256_file(manifest_path)
    config_doc = asdict(config)
    run_id = "run-" + hashlib.sha256(
        (manifest_hash + json.dumps(config_doc, sort_keys=True) + str(subset)).encode()
    ).hexdigest()[:12]
    run_doc = {
        "run_id": run_id,
        "created": started,
        "finished": time.time(),
        "manifest": str(manifest_path),
        "manifest_sha256": manifest_hash,
        "config": config_doc,
        "subset": subset,
        "files": {
            "folds": {"path": folds_path.name, "sha256": sha256_file(folds_path)},
            "outcomes": {"path": outcomes_path.name, "sha256": sha256_file(outcomes_path)},
            "report_json": {"path": report_json_path.name, "sha256": sha256_file(report_json_path)},
            "report_text": {"path": report_text_path.name, "sha256": sha256_file(report_text_path)},
        },
    }
    (out_dir / "run.json").write_text(json.dumps(run_doc, sort_keys=True, indent=1), encoding="utf-8")

    return {
        "run_id": run_id,
        "out_dir": str(out_dir),
        "samples": len(folds),
        "accuracy": report["accuracy"],
        "within_one": report["within_one"],
        "skipped": skipped,
        "excluded": report["excluded"],
        "seconds": run_doc["finished"] - started,
    }


def report_from_folds(folds: list[FoldResult], manifest_path, config: TrainConfig,
                      chart: SizeChart = ESON) -> dict:
    """Recompute sizing outcomes and the metrics report from saved folds."""
    manifest_path = Path(manifest_path)
    records = load_manifest(manifest_path, chart=chart)
    wanted = {fr.sample_id for fr in folds}
    records = [r for r in records if r.id in wanted]
    raw = assemble_raw(records, config.crop_w, config.crop_h, manifest_path.parent)
    chains = dict(zip(raw.ids, raw.chains))
    predictions = {}
    for fr in folds:
        chain = chains.get(fr.sample_id)
        if chain is None:
            continue
        predictions[fr.sample_id] = (
            map_point(chain, (fr.mean[0], fr.mean[1])),
            map_point(chain, (fr.mean[2], fr.mean[3])),
        )
    outcomes, skipped = size_predictions(records, predictions, chart)
    cm = confusion(outcomes, chart)
    report = metrics_report(cm)
    report["skipped"] = skipped
    return report
