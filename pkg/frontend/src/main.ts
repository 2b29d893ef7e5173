/** DOM bootstrap: upload, role selection, canvas events, size display. */

import { AnnotationController, draggablePoints, pickPoint } from "./annotate.js";
import { ApiClient } from "./api.js";
import { drawScene } from "./render.js";
import type { Point, PointRole, SizeResponse } from "./types.js";
import { ViewTransform, fitImage, identityView, pan, screenToImage, zoomAt } from "./view.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8021";

const api = new ApiClient(SERVICE_URL);

const canvas = document.getElementById("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const sizeEl = document.getElementById("size-panel")!;
const bandEl = document.getElementById("band-badge")!;
const fileInput = document.getElementById("file-input") as HTMLInputElement;
const roleButtons = Array.from(document.querySelectorAll<HTMLButtonElement>("[data-role]"));
const predictBtn = document.getElementById("predict-btn") as HTMLButtonElement;
const acceptBtn = document.getElementById("accept-btn") as HTMLButtonElement;
const saveBtn = document.getElementById("save-btn") as HTMLButtonElement;

let view: ViewTransform = identityView();
let controller: AnnotationController | null = null;
let image: HTMLImageElement | null = null;
let dragging: ReturnType<typeof pickPoint> = null;
let panning = false;
let lastPointer: Point = [0, 0];

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.className = isError ? "error" : "";
}

function showSize(size: SizeResponse | null): void {
  if (!size) {
    sizeEl.textContent = "size: annotate coin + landmarks (or accept a prediction)";
    bandEl.hidden = true;
    return;
  }
  sizeEl.textContent =
    `width ${size.width_mm.toFixed(2)} mm  ·  size ${size.size}` +
    `  ·  scale ${size.scale_px_per_mm.toFixed(3)} px/mm  ·  from ${size.source}`;
  if (size.boundary_band) {
    bandEl.textContent = `near ${size.boundary_band.boundary} mm boundary: either ${size.boundary_band.sizes.join(" or ")} acceptable`;
    bandEl.hidden = false;
  } else {
    bandEl.hidden = true;
  }
}

function redraw(): void {
  if (!controller) return;
  drawScene(
    ctx,
    view,
    image,
    image ? { width: image.naturalWidth, height: image.naturalHeight } : null,
    controller.draft,
    controller.prediction,
  );
}

function makeController(sampleId: string): AnnotationController {
  return new AnnotationController(api, sampleId, {
    onDraftChanged: () => redraw(),
    onSize: (s) => showSize(s),
    onPrediction: () => redraw(),
    onError: (message) => setStatus(message, true),
  });
}

async function openSample(sampleId: string): Promise<void> {
  controller = makeController(sampleId);
  await controller.loadExisting();
  image = new Image();
  image.crossOrigin = "anonymous";
  image.onload = () => {
    view = fitImage(image!.naturalWidth, image!.naturalHeight, canvas.width, canvas.height);
    redraw();
  };
  image.src = api.imageUrl(sampleId);
  setStatus(`sample ${sampleId}`);
  showSize(null);
  await controller.refreshSize();
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const type = file.name.endsWith(".pgm") ? "image/x-portable-graymap" : "image/png";
  try {
    const { id } = await api.uploadSample(await file.arrayBuffer(), type);
    await openSample(id);
  } catch (err) {
    setStatus(err instanceof Error ? err.message : String(err), true);
  }
});

for (const btn of roleButtons) {
  btn.addEventListener("click", () => {
    if (!controller) return;
    controller.activeRole = btn.dataset.role as PointRole;
    roleButtons.forEach((b) => b.classList.toggle("active", b === btn));
  });
}

predictBtn.addEventListener("click", () => controller?.requestPrediction());
acceptBtn.addEventListener("click", () => controller?.acceptCurrentPrediction());
saveBtn.addEventListener("click", () => controller?.save());

function pointerPos(ev: MouseEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return [ev.clientX - rect.left, ev.clientY - rect.top];
}

canvas.addEventListener("mousedown", (ev) => {
  if (!controller) return;
  const p = pointerPos(ev);
  lastPointer = p;
  dragging = pickPoint(view, draggablePoints(controller.draft), p);
  if (!dragging && ev.shiftKey) panning = true;
  if (!dragging && !ev.shiftKey) {
    controller.placeAt(screenToImage(view, p));
    void controller.save();
  }
});

canvas.addEventListener("mousemove", (ev) => {
  if (!controller) return;
  const p = pointerPos(ev);
  if (dragging) {
    controller.dragTo(dragging, screenToImage(view, p));
  } else if (panning) {
    view = pan(view, p[0] - lastPointer[0], p[1] - lastPointer[1]);
    redraw();
  }
  lastPointer = p;
});

window.addEventListener("mouseup", () => {
  if (dragging && controller) {
    // drop completes the correction: persist, then the size re-queries
    if (dragging.kind === "predicted") {
      controller.prediction = controller.draft.acceptedPrediction ?? null;
      void controller.refreshSize();
    } else {
      void controller.save();
    }
  }
  dragging = null;
  panning = false;
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  view = zoomAt(view, pointerPos(ev), ev.deltaY < 0 ? 1.15 : 1 / 1.15);
  redraw();
});

setStatus(`service: ${SERVICE_URL} — upload an image to begin`);
