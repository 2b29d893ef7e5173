import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, FetchLike } from "./api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeFetch(
  responder: (url: string, init?: RequestInit) => { status: number; body: unknown },
): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetch: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const { status, body } = responder(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch, calls };
}

describe("api client", () => {
  it("uploads raw bytes with the negotiated content type", async () => {
    const { fetch, calls } = fakeFetch(() => ({ status: 201, body: { id: "abc" } }));
    const api = new ApiClient("http://svc:8021/", fetch);
    const res = await api.uploadSample(new Uint8Array([80, 53]), "image/x-portable-graymap");
    expect(res.id).toBe("abc");
    expect(calls[0].url).toBe("http://svc:8021/samples");
    expect(calls[0].init?.method).toBe("POST");
    expect((calls[0].init?.headers as Record<string, string>)["Content-Type"]).toBe(
      "image/x-portable-graymap",
    );
  });

  it("sends annotations as original-image coordinates, unchanged", async () => {
    const { fetch, calls } = fakeFetch(() => ({
      status: 200,
      body: { version: 1, annotation: {} },
    }));
    const api = new ApiClient("http://svc:8021", fetch);
    const doc = {
      landmarks: { left: [312.4, 401.8] as [number, number], right: [400.25, 403.5] as [number, number] },
      coin: { p1: [10, 10] as [number, number], p2: [67.3, 10] as [number, number] },
    };
    await api.putAnnotation("abc", doc);
    expect(calls[0].url).toBe("http://svc:8021/samples/abc/annotation");
    expect(calls[0].init?.method).toBe("PUT");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual(doc);
  });

  it("requests size with the chosen source", async () => {
    const { fetch, calls } = fakeFetch(() => ({
      status: 200,
      body: {
        width_mm: 39.7,
        size: "M",
        scale_px_per_mm: 2.0,
        landmarks: { left: [0, 0], right: [79.4, 0] },
        source: "annotation",
        boundary_band: null,
      },
    }));
    const api = new ApiClient("http://svc:8021", fetch);
    const size = await api.size("abc", "prediction");
    expect(size.size).toBe("M");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({ source: "prediction" });
  });

  it("surfaces server validation details as ApiError", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 422,
      body: { detail: "landmarks: left and right nasal-wall points must be distinct" },
    }));
    const api = new ApiClient("http://svc:8021", fetch);
    await expect(api.putAnnotation("abc", {})).rejects.toThrowError(ApiError);
    await expect(api.putAnnotation("abc", {})).rejects.toThrowError(/distinct/);
  });

  it("builds the image url from the sample id", () => {
    const api = new ApiClient("http://svc:8021");
    expect(api.imageUrl("xyz")).toBe("http://svc:8021/samples/xyz/image");
  });
});
