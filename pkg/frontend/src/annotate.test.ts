import { describe, expect, it } from "vitest";

import { AnnotationController, draggablePoints, pickPoint } from "./annotate.js";
import { ApiClient, FetchLike } from "./api.js";
import { emptyDraft, placePoint, acceptPrediction } from "./draft.js";
import type { SizeResponse } from "./types.js";
import { identityView } from "./view.js";

describe("hit testing", () => {
  it("picks the nearest point within the radius, in screen space", () => {
    let draft = emptyDraft("s");
    draft = placePoint(draft, "left", [100, 100]);
    draft = placePoint(draft, "right", [140, 100]);
    const picked = pickPoint(identityView(), draggablePoints(draft), [103, 101]);
    expect(picked?.role).toBe("left");
    expect(pickPoint(identityView(), draggablePoints(draft), [120, 140])).toBeNull();
  });

  it("hit radius follows zoom (screen distance, not image distance)", () => {
    let draft = emptyDraft("s");
    draft = placePoint(draft, "left", [100, 100]);
    const zoomedIn = { zoom: 10, panX: 0, panY: 0 };
    // 2 image px away = 20 screen px: outside the 9 px radius when zoomed in
    expect(pickPoint(zoomedIn, draggablePoints(draft), [1020, 1000])).toBeNull();
    expect(pickPoint(zoomedIn, draggablePoints(draft), [1004, 1000])?.role).toBe("left");
  });

  it("exposes accepted prediction points as draggable", () => {
    const draft = acceptPrediction(emptyDraft("s"), { left: [5, 5], right: [9, 5] });
    const kinds = draggablePoints(draft).map((d) => d.kind);
    expect(kinds).toEqual(["predicted", "predicted"]);
  });
});

interface Recorded {
  url: string;
  method: string;
  body?: unknown;
}

function serviceStub(widthFor: (landmarks: { left: number[]; right: number[] }) => number) {
  const calls: Recorded[] = [];
  let storedAnnotation: Record<string, unknown> = {};
  const fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ url, method, body });
    const respond = (status: number, payload: unknown) =>
      new Response(JSON.stringify(payload), { status });

    if (url.endsWith("/annotation") && method === "PUT") {
      storedAnnotation = body as Record<string, unknown>;
      return respond(200, { version: 1, annotation: storedAnnotation });
    }
    if (url.endsWith("/annotation") && method === "GET") {
      return respond(404, { detail: "none" });
    }
    if (url.endsWith("/predict")) {
      return respond(200, {
        version: 1,
        landmarks: { left: [100, 200], right: [180, 200] },
        crop_landmarks: { left: [10, 20], right: [90, 20] },
      });
    }
    if (url.endsWith("/size")) {
      const lm = storedAnnotation.landmarks as { left: number[]; right: number[] };
      const width = widthFor(lm);
      const payload: SizeResponse = {
        width_mm: width,
        size: width < 37 ? "S" : width < 41 ? "M" : width < 45 ? "L" : "TL",
        scale_px_per_mm: 2,
        landmarks: lm,
        source: "annotation",
        boundary_band: null,
      };
      return respond(200, payload);
    }
    return respond(404, { detail: `unhandled ${method} ${url}` });
  };
  return { fetch, calls };
}

function widthFromLandmarks(lm: { left: number[]; right: number[] }): number {
  return Math.hypot(lm.right[0] - lm.left[0], lm.right[1] - lm.left[1]) / 2;
}

describe("annotation controller", () => {
  async function makeSession() {
    const stub = serviceStub(widthFromLandmarks);
    const sizes: (SizeResponse | null)[] = [];
    const errors: string[] = [];
    const controller = new AnnotationController(
      new ApiClient("http://svc", stub.fetch),
      "sample-1",
      {
        onDraftChanged: () => {},
        onSize: (s) => sizes.push(s),
        onPrediction: () => {},
        onError: (m) => errors.push(m),
      },
    );
    return { controller, stub, sizes, errors };
  }

  it("displays exactly what the server returns after annotate + save", async () => {
    const { controller, sizes, errors } = await makeSession();
    controller.activeRole = "coinP1";
    controller.placeAt([0, 0]);
    controller.activeRole = "coinP2";
    controller.placeAt([57.3, 0]);
    controller.activeRole = "left";
    controller.placeAt([100, 300]);
    controller.activeRole = "right";
    controller.placeAt([179.4, 300]);
    await controller.save();
    expect(errors).toEqual([]);
    const size = sizes.at(-1);
    expect(size?.width_mm).toBeCloseTo(39.7, 9);
    expect(size?.size).toBe("M");
  });

  it("drag-correcting a predicted landmark outward re-queries and grows the width", async () => {
    const { controller, sizes, errors } = await makeSession();
    controller.activeRole = "coinP1";
    controller.placeAt([0, 0]);
    controller.activeRole = "coinP2";
    controller.placeAt([57.3, 0]);
    await controller.requestPrediction();
    await controller.acceptCurrentPrediction();
    const before = sizes.at(-1)!;
    expect(before.width_mm).toBeCloseTo(40, 6);

    const target = draggablePoints(controller.draft).find(
      (d) => d.kind === "predicted" && d.role === "right",
    )!;
    controller.dragTo(target, [200, 200]); // 20 px outward
    await controller.refreshSize();
    const after = sizes.at(-1)!;
    expect(errors).toEqual([]);
    expect(after.width_mm).toBeGreaterThan(before.width_mm);
    expect(after.width_mm).toBeCloseTo(50, 6);
  });

  it("does not request a size before the gate is satisfied", async () => {
    const { controller, stub, sizes } = await makeSession();
    controller.activeRole = "left";
    controller.placeAt([10, 10]);
    controller.activeRole = "right";
    controller.placeAt([20, 10]);
    await controller.save();
    expect(sizes.at(-1)).toBeNull();
    expect(stub.calls.filter((c) => c.url.endsWith("/size"))).toHaveLength(0);
  });
});
