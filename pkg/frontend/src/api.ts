/** Typed client for the annotation service HTTP API. */

export interface ManifestEntry {
  video_id: string;
  frame: number;
  reason: "low_score" | "outlier";
  status: "pending" | "done";
  keypoints?: [number, number][];
}

export interface Skeleton {
  joints: string[];
  edges: [number, number][];
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(body.error ?? `request failed (${response.status})`, response.status);
    }
    return body as T;
  }

  async manifest(video: string, status?: "pending" | "done"): Promise<ManifestEntry[]> {
    const query = status ? `&status=${status}` : "";
    const doc = await this.getJson<{ entries: ManifestEntry[] }>(
      `/api/manifest?video=${encodeURIComponent(video)}${query}`,
    );
    return doc.entries;
  }

  async skeleton(): Promise<Skeleton> {
    return this.getJson<Skeleton>("/api/skeleton");
  }

  frameUrl(video: string, frame: number): string {
    return `${this.baseUrl}/api/frames/${encodeURIComponent(video)}/${frame}`;
  }

  async submit(videoId: string, frame: number, keypoints: [number, number][]): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ video_id: videoId, frame, keypoints }),
    });
    if (!response.ok) {
      const body = await response.json().catch(() => ({}));
      throw new ApiError(body.error ?? `submission failed (${response.status})`, response.status);
    }
  }
}
