import type { AgreementResponse, LabelAck, NextResponse, Scheme } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/**
 * Thin typed client over the annotation service API.
 *
 * Label submission is idempotent on the server (keyed by post + annotator),
 * so retrying a submit after a dropped response can never duplicate a label.
 */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly token: string | null = null,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok) {
      let detail = `${res.status}`;
      try {
        const body = await res.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  scheme(): Promise<Scheme> {
    return this.request<Scheme>("/api/scheme", { headers: this.headers(false) });
  }

  next(sampleId: string, annotator: string): Promise<NextResponse> {
    const q = encodeURIComponent(annotator);
    return this.request<NextResponse>(
      `/api/samples/${encodeURIComponent(sampleId)}/next?annotator=${q}`,
      { headers: this.headers(false) },
    );
  }

  submitLabel(
    sampleId: string,
    annotator: string,
    postId: string,
    classId: string,
  ): Promise<LabelAck> {
    return this.request<LabelAck>(
      `/api/samples/${encodeURIComponent(sampleId)}/labels`,
      {
        method: "POST",
        headers: this.headers(true),
        body: JSON.stringify({
          annotator,
          post_id: postId,
          class_id: classId,
        }),
      },
    );
  }

  agreement(sampleId: string): Promise<AgreementResponse> {
    return this.request<AgreementResponse>(
      `/api/samples/${encodeURIComponent(sampleId)}/agreement`,
      { headers: this.headers(false) },
    );
  }

  submitResolution(
    sampleId: string,
    postId: string,
    classId: string,
  ): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>(
      `/api/samples/${encodeURIComponent(sampleId)}/resolutions`,
      {
        method: "POST",
        headers: this.headers(true),
        body: JSON.stringify({ post_id: postId, class_id: classId }),
      },
    );
  }

  exportCsv(sampleId: string): Promise<string> {
    return this.fetchImpl(
      `${this.base}/api/samples/${encodeURIComponent(sampleId)}/export.csv`,
      { headers: this.headers(false) },
    ).then((res) => {
      if (!res.ok) throw new ApiError(res.status, `${res.status}`);
      return res.text();
    });
  }
}
