"""Flat-file persistence for the annotation service.

Layout under the store root:

    samples/{id}/image.bin          uploaded bytes, content-addressed id
    samples/{id}/meta.json          content type and image dimensions
    samples/{id}/annotations/vNNNN.json   every annotation version, retained
    samples/{id}/predictions/vNNNN.json   every model prediction, retained
    runs/{run_id}/run.json (+ folds/outcomes/report artifacts)

Writes are serialized per sample id; everything survives a restart.
"""

import hashlib
import json
import threading
import time
from collections import defaultdict
from pathlib import Path


class SampleStore:
    def __init__(self, root):
        self.root = Path(root)
        (self.root / "samples").mkdir(parents=True, exist_ok=True)
        (self.root / "runs").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def lock(self, sample_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[sample_id]

    # -- samples ---------------------------------------------------------

    def _sample_dir(self, sample_id: str) -> Path:
        return self.root / "samples" / sample_id

    def add_image(self, data: bytes, content_type: str, width: int, height: int) -> str:
        sample_id = hashlib.sha256(data).hexdigest()[:16]
        d = self._sample_dir(sample_id)
        with self.lock(sample_id):
            d.mkdir(parents=True, exist_ok=True)
            (d / "image.bin").write_bytes(data)
            (d / "meta.json").write_text(
                json.dumps(
                    {
                        "content_type": content_type,
                        "width": width,
                        "height": height,
                        "created": time.time(),
                    },
                    sort_keys=True,
                ),
                encoding="utf-8",
            )
        return sample_id

    def has_sample(self, sample_id: str) -> bool:
        return (self._sample_dir(sample_id) / "image.bin").is_file()

    def read_image(self, sample_id: str) -> tuple[bytes, dict]:
        d = self._sample_dir(sample_id)
        data = (d / "image.bin").read_bytes()
        meta = json.loads((d / "meta.json").read_text(encoding="utf-8"))
        return data, meta

    def list_samples(self) -> list[str]:
        return sorted(p.name for p in (self.root / "samples").iterdir() if p.is_dir())

    # -- versioned documents ---------------------------------------------

    def _latest_version(self, directory: Path) -> int | None:
        if not directory.is_dir():
            return None
        versions = [int(p.stem[1:]) for p in directory.glob("v*.json")]
        return max(versions) if versions else None

    def _put_versioned(self, sample_id: str, kind: str, doc: dict) -> int:
        d = self._sample_dir(sample_id) / kind
        with self.lock(sample_id):
            d.mkdir(parents=True, exist_ok=True)
            version = (self._latest_version(d) or 0) + 1
            (d / f"v{version:04d}.json").write_text(
                json.dumps(doc, sort_keys=True), encoding="utf-8"
            )
        return version

    def _get_versioned(self, sample_id: str, kind: str) -> tuple[int, dict] | None:
        d = self._sample_dir(sample_id) / kind
        version = self._latest_version(d)
        if version is None:
            return None
        doc = json.loads((d / f"v{version:04d}.json").read_text(encoding="utf-8"))
        return version, doc

    def put_annotation(self, sample_id: str, doc: dict) -> int:
        return self._put_versioned(sample_id, "annotations", doc)

    def get_annotation(self, sample_id: str) -> tuple[int, dict] | None:
        return self._get_versioned(sample_id, "annotations")

    def put_prediction(self, sample_id: str, doc: dict) -> int:
        return self._put_versioned(sample_id, "predictions", doc)

    def get_prediction(self, sample_id: str) -> tuple[int, dict] | None:
        return self._get_versioned(sample_id, "predictions")

    # -- runs --------------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def new_run_id(self) -> str:
        existing = [p.name for p in (self.root / "runs").iterdir() if p.is_dir()]
        n = 1 + max((int(name.split("-")[1]) for name in existing if name.startswith("job-")), default=0)
        return f"job-{n:04d}"

    def write_run(self, run_id: str, doc: dict) -> None:
        d = self.run_dir(run_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "run.json").write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")

    def read_run(self, run_id: str) -> dict | None:
        p = self.run_dir(run_id) / "run.json"
        if not p.is_file():
            return None
        return json.loads(p.read_text(encoding="utf-8"))

    def list_runs(self) -> list[dict]:
        out = []
        for p in sorted((self.root / "runs").iterdir()):
            doc = self.read_run(p.name)
            if doc is not None:
                out.append(doc)
        return out
