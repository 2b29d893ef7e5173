/**
 * Thin typed client for the sizing service. All numbers shown in the UI
 * originate from these responses; the fetch implementation is injectable
 * so tests can run without a server.
 */

import type {
  AnnotationDoc,
  PredictionResponse,
  SampleInfo,
  SizeResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  uploadSample(data: ArrayBuffer | Uint8Array, contentType: string): Promise<{ id: string }> {
    const body: ArrayBuffer = data instanceof Uint8Array ? new Uint8Array(data).buffer : data;
    return this.request("/samples", {
      method: "POST",
      headers: { "Content-Type": contentType },
      body,
    });
  }

  listSamples(): Promise<string[]> {
    return this.request("/samples");
  }

  sampleInfo(id: string): Promise<SampleInfo> {
    return this.request(`/samples/${id}`);
  }

  imageUrl(id: string): string {
    return `${this.baseUrl}/samples/${id}/image`;
  }

  putAnnotation(id: string, doc: AnnotationDoc): Promise<{ version: number; annotation: AnnotationDoc }> {
    return this.request(`/samples/${id}/annotation`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  getAnnotation(id: string): Promise<{ version: number; annotation: AnnotationDoc }> {
    return this.request(`/samples/${id}/annotation`);
  }

  predict(id: string): Promise<PredictionResponse> {
    return this.request(`/samples/${id}/predict`, { method: "POST" });
  }

  size(id: string, source: "auto" | "annotation" | "prediction" = "auto"): Promise<SizeResponse> {
    return this.request(`/samples/${id}/size`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ source }),
    });
  }
}
