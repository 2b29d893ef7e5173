"""FastAPI application wrapping the sizing library for the annotation UI.

The service performs no sizing arithmetic of its own: every number it
returns comes from the same library calls the CLI uses. Images are
immutable once uploaded; annotations and predictions are versioned with
all prior versions retained.
"""

import json
import logging
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from ..dataset import (
    CALIPER_MAX_MM,
    CALIPER_MIN_MM,
    scale_px_per_mm,
    validate_coin,
    validate_landmark_pair,
    Annotation,
)
from ..errors import FormatError, MaskSizerError, ShapeError, ValidationError
from ..imaging import PGM_MEDIA_TYPE, PNG_MEDIA_TYPE, RectRegion, decode_image
from ..network import load_model
from ..pipeline import predict_original, run_loocv, size_from_points
from ..sizing import ESON
from ..training import TrainConfig
from .schemas import (
    AnnotationIn,
    AnnotationOut,
    PredictionOut,
    RunInfo,
    RunRequest,
    SampleCreated,
    SampleInfo,
    SizeOut,
    SizeRequest,
)
from .store import SampleStore

logger = logging.getLogger(__name__)

_ACCEPTED_TYPES = {PGM_MEDIA_TYPE, PNG_MEDIA_TYPE}


def create_app(store_dir, model_path=None, chart=ESON) -> FastAPI:
    app = FastAPI(title="masksizer", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SampleStore(store_dir)
    app.state.store = store
    app.state.model_path = model_path
    app.state.model = None
    app.state.model_lock = threading.Lock()

    def get_model():
        if app.state.model_path is None:
            raise HTTPException(409, "no model configured; start the service with --model")
        with app.state.model_lock:
            if app.state.model is None:
                try:
                    app.state.model = load_model(app.state.model_path)
                except (ShapeError, OSError) as exc:
                    raise HTTPException(422, f"model: {exc}") from exc
        return app.state.model

    def need_sample(sample_id: str) -> None:
        if not store.has_sample(sample_id):
            raise HTTPException(404, f"unknown sample {sample_id!r}")

    def image_of(sample_id: str):
        data, meta = store.read_image(sample_id)
        return decode_image(data), meta

    @app.post("/samples", response_model=SampleCreated, status_code=201)
    async def upload_sample(request: Request):
        content_type = (request.headers.get("content-type") or "").split(";")[0].strip()
        if content_type not in _ACCEPTED_TYPES:
            raise HTTPException(415, f"unsupported content type {content_type!r}; "
                                     f"expected one of {sorted(_ACCEPTED_TYPES)}")
        data = await request.body()
        try:
            img = decode_image(data)
        except FormatError as exc:
            raise HTTPException(422, f"image: {exc}") from exc
        sample_id = store.add_image(data, content_type, img.width, img.height)
        return SampleCreated(id=sample_id)

    @app.get("/samples")
    def list_samples() -> list[str]:
        return store.list_samples()

    @app.get("/samples/{sample_id}", response_model=SampleInfo)
    def sample_info(sample_id: str):
        need_sample(sample_id)
        _, meta = store.read_image(sample_id)
        ann = store.get_annotation(sample_id)
        pred = store.get_prediction(sample_id)
        return SampleInfo(
            id=sample_id,
            content_type=meta["content_type"],
            width=meta["width"],
            height=meta["height"],
            annotation_version=ann[0] if ann else None,
            prediction_version=pred[0] if pred else None,
        )

    @app.get("/samples/{sample_id}/image")
    def sample_image(sample_id: str):
        need_sample(sample_id)
        data, meta = store.read_image(sample_id)
        return Response(content=data, media_type=meta["content_type"])

    @app.put("/samples/{sample_id}/annotation", response_model=AnnotationOut)
    def put_annotation(sample_id: str, body: AnnotationIn):
        need_sample(sample_id)
        _, meta = store.read_image(sample_id)
        doc = body.model_dump(exclude_none=True)
        try:
            _validate_annotation_doc(doc, meta["width"], meta["height"])
        except ValidationError as exc:
            raise HTTPException(422, str(exc)) from exc
        version = store.put_annotation(sample_id, doc)
        return AnnotationOut(version=version, annotation=doc)

    @app.get("/samples/{sample_id}/annotation", response_model=AnnotationOut)
    def get_annotation(sample_id: str):
        need_sample(sample_id)
        stored = store.get_annotation(sample_id)
        if stored is None:
            raise HTTPException(404, f"sample {sample_id!r} has no annotation")
        return AnnotationOut(version=stored[0], annotation=stored[1])

    @app.post("/samples/{sample_id}/predict", response_model=PredictionOut)
    def predict(sample_id: str):
        need_sample(sample_id)
        stored = store.get_annotation(sample_id)
        if stored is None or "nose_box" not in stored[1]:
            raise HTTPException(409, "prediction needs an annotation with a nose_box")
        model = get_model()
        img, _ = image_of(sample_id)
        try:
            nose_box = RectRegion.from_list(stored[1]["nose_box"])
            left, right, crop_pair = predict_original(img, nose_box, model)
        except (ShapeError, MaskSizerError) as exc:
            raise HTTPException(422, str(exc)) from exc
        doc = {
            "landmarks": {"left": list(left), "right": list(right)},
            "crop_landmarks": {"left": list(crop_pair[0]), "right": list(crop_pair[1])},
            "model_seed": model.seed,
        }
        version = store.put_prediction(sample_id, doc)
        return PredictionOut(
            version=version,
            landmarks=doc["landmarks"],
            crop_landmarks=doc["crop_landmarks"],
        )

    @app.post("/samples/{sample_id}/size", response_model=SizeOut)
    def size(sample_id: str, body: SizeRequest | None = None):
        need_sample(sample_id)
        source = (body.source if body else "auto")
        stored = store.get_annotation(sample_id)
        if stored is None or "coin" not in stored[1]:
            raise HTTPException(409, "sizing needs an annotation with coin scale")
        ann_doc = stored[1]
        coin = ann_doc["coin"]
        try:
            annotation_scale = scale_px_per_mm(
                Annotation(
                    left=(0.0, 0.0),
                    right=(1.0, 1.0),
                    coin_p1=tuple(coin["p1"]) if "p1" in coin else None,
                    coin_p2=tuple(coin["p2"]) if "p2" in coin else None,
                    px_per_mm=coin.get("px_per_mm"),
                )
            )
        except ValidationError as exc:
            raise HTTPException(422, str(exc)) from exc

        landmarks = ann_doc.get("landmarks")
        prediction = store.get_prediction(sample_id)
        if source == "annotation" and landmarks is None:
            raise HTTPException(409, "no manual landmarks annotated")
        if source == "prediction" and prediction is None:
            raise HTTPException(409, "no prediction stored; run predict first")
        if source == "auto":
            source = "annotation" if landmarks is not None else ("prediction" if prediction else None)
        if source is None:
            raise HTTPException(409, "no landmarks available: annotate them or run predict first")

        if source == "annotation":
            left = tuple(landmarks["left"])
            right = tuple(landmarks["right"])
        else:
            left = tuple(prediction[1]["landmarks"]["left"])
            right = tuple(prediction[1]["landmarks"]["right"])
        result = size_from_points(left, right, annotation_scale, chart)
        result["source"] = source
        return SizeOut(**result)

    # -- background evaluation runs --------------------------------------

    def _run_job(run_id: str, req: RunRequest) -> None:
        run_dir = store.run_dir(run_id)
        doc = store.read_run(run_id)
        try:
            manifest_path = run_dir / "manifest.jsonl"
            count = _write_store_manifest(store, manifest_path, req.sample_ids)
            doc["samples"] = count
            store.write_run(run_id, doc)
            config = TrainConfig(
                base_seed=req.seed,
                repetitions=req.repetitions,
                max_epochs=req.max_epochs,
                patience=req.patience,
                crop_w=req.crop_w,
                crop_h=req.crop_h,
                n_hidden=req.n_hidden,
                drop_prob=req.drop_prob,
                stats_mode=req.stats_mode,
            )
            summary = run_loocv(manifest_path, run_dir / "artifacts", config)
            doc.update(status="done", summary=summary)
        except Exception as exc:  # job boundary: persist the failure
            logger.exception("run %s failed", run_id)
            doc.update(status="failed", error=str(exc))
        store.write_run(run_id, doc)

    @app.post("/runs", response_model=RunInfo, status_code=202)
    def start_run(req: RunRequest):
        run_id = store.new_run_id()
        doc = {
            "id": run_id,
            "status": "running",
            "created": time.time(),
            "config": req.model_dump(),
        }
        store.write_run(run_id, doc)
        thread = threading.Thread(target=_run_job, args=(run_id, req), daemon=True)
        thread.start()
        return RunInfo(**doc)

    @app.get("/runs")
    def list_runs() -> list[RunInfo]:
        return [RunInfo(**doc) for doc in store.list_runs()]

    @app.get("/runs/{run_id}", response_model=RunInfo)
    def run_info(run_id: str):
        doc = store.read_run(run_id)
        if doc is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        return RunInfo(**doc)

    @app.get("/runs/{run_id}/report")
    def run_report(run_id: str):
        doc = store.read_run(run_id)
        if doc is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        report_path = store.run_dir(run_id) / "artifacts" / "report.json"
        if not report_path.is_file():
            raise HTTPException(409, f"run {run_id!r} has no report (status: {doc['status']})")
        return json.loads(report_path.read_text(encoding="utf-8"))

    return app


def _validate_annotation_doc(doc: dict, width: int, height: int) -> None:
    """Apply the dataset validation rules to whichever fields are present."""
    lm = doc.get("landmarks")
    if lm is not None:
        validate_landmark_pair(tuple(lm["left"]), tuple(lm["right"]))
    coin = doc.get("coin")
    if coin is not None:
        validate_coin(
            tuple(coin["p1"]) if coin.get("p1") is not None else None,
            tuple(coin["p2"]) if coin.get("p2") is not None else None,
            coin.get("px_per_mm"),
        )
        # strip nulls left behind by the optional fields
        doc["coin"] = {k: v for k, v in coin.items() if v is not None}
    for key in ("face_box", "nose_box"):
        if doc.get(key) is not None:
            try:
                box = RectRegion.from_list(doc[key])
            except Exception as exc:
                raise ValidationError(f"{key}: {exc}") from exc
            if not box.inside(width, height):
                raise ValidationError(
                    f"{key}: {box.as_list()} not inside the {width}x{height} image"
                )
    alar = doc.get("alar_mm")
    if alar is not None and not (CALIPER_MIN_MM < alar < CALIPER_MAX_MM):
        raise ValidationError(
            f"alar_mm: {alar} outside sanity bounds ({CALIPER_MIN_MM}, {CALIPER_MAX_MM})"
        )


def _write_store_manifest(store: SampleStore, manifest_path: Path, sample_ids) -> int:
    """Materialize a manifest of fully annotated store samples for a run."""
    ids = sample_ids if sample_ids is not None else store.list_samples()
    lines = []
    for sample_id in ids:
        if not store.has_sample(sample_id):
            raise ValidationError(f"unknown sample {sample_id!r}")
        stored = store.get_annotation(sample_id)
        if stored is None:
            continue
        doc = stored[1]
        if not all(k in doc for k in ("landmarks", "coin", "face_box", "nose_box", "alar_mm")):
            continue
        record = {
            "id": sample_id,
            "image": f"../../samples/{sample_id}/image.bin",
            "landmarks": doc["landmarks"],
            "coin": doc["coin"],
            "face_box": doc["face_box"],
            "nose_box": doc["nose_box"],
            "alar_mm": doc["alar_mm"],
        }
        if doc.get("size") is not None:
            record["size"] = doc["size"]
        lines.append(json.dumps(record, sort_keys=True))
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return len(lines)
