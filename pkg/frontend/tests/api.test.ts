import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("fetches the pending manifest with the status filter", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ entries: [{ video_id: "v1", frame: 3, reason: "low_score", status: "pending" }] }),
    );
    const client = new ApiClient("http://api", fetchFn);
    const entries = await client.manifest("v1", "pending");
    expect(fetchFn.mock.calls[0]?.[0]).toBe("http://api/api/manifest?video=v1&status=pending");
    expect(entries).toHaveLength(1);
    expect(entries[0]?.frame).toBe(3);
  });

  it("posts submissions with the wire field names", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ ok: true }));
    const client = new ApiClient("http://api", fetchFn);
    const points = Array.from({ length: 17 }, (_, i) => [i, i * 2] as [number, number]);
    await client.submit("v1", 52, points);
    const [url, init] = fetchFn.mock.calls[0]!;
    expect(url).toBe("http://api/api/annotations");
    expect(JSON.parse((init as RequestInit).body as string)).toEqual({
      video_id: "v1",
      frame: 52,
      keypoints: points,
    });
  });

  it("surfaces server validation errors verbatim", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ error: "keypoints must be a finite 17x2 list" }, 422));
    const client = new ApiClient("http://api", fetchFn);
    await expect(client.submit("v1", 52, [[1, 2]])).rejects.toThrowError(
      new ApiError("keypoints must be a finite 17x2 list", 422),
    );
  });

  it("builds frame image urls", () => {
    const client = new ApiClient("http://api");
    expect(client.frameUrl("v 1", 52)).toBe("http://api/api/frames/v%201/52");
  });
});
