/** Thin typed client for the retrieval service. Every error surfaces as an
 * ApiError carrying the HTTP status (0 for connection failures) and the
 * service's JSON error message when one was sent. */

import type { IndexStats, QueryResponse, Rect, RoiMatchResponse } from "./types.js";

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function throwFromResponse(resp: Response): Promise<never> {
  let message = `service error (HTTP ${resp.status})`;
  try {
    const body = (await resp.json()) as { error?: unknown };
    if (body && typeof body.error === "string") {
      message = body.error;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(resp.status, message);
}

async function guarded<T>(work: () => Promise<T>): Promise<T> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) throw err;
    throw new ApiError(0, "cannot reach the retrieval service");
  }
}

export interface ApiClient {
  fetchStats(): Promise<IndexStats>;
  postQuery(image: Blob, k1?: number, k2?: number): Promise<QueryResponse>;
  postRoiMatch(queryId: string, roi: Rect, targetIds: string[]): Promise<RoiMatchResponse>;
  fetchStoredImage(imageId: string): Promise<Blob>;
  imageUrl(imageId: string): string;
}

export function createApiClient(base = ""): ApiClient {
  return {
    fetchStats(): Promise<IndexStats> {
      return guarded(async () => {
        const resp = await fetch(`${base}/api/index/stats`);
        if (!resp.ok) await throwFromResponse(resp);
        return (await resp.json()) as IndexStats;
      });
    },

    postQuery(image: Blob, k1?: number, k2?: number): Promise<QueryResponse> {
      return guarded(async () => {
        const form = new FormData();
        form.append("image", image, "query.pgm");
        if (k1 !== undefined) form.append("k1", String(k1));
        if (k2 !== undefined) form.append("k2", String(k2));
        const resp = await fetch(`${base}/api/query`, { method: "POST", body: form });
        if (!resp.ok) await throwFromResponse(resp);
        return (await resp.json()) as QueryResponse;
      });
    },

    postRoiMatch(queryId: string, roi: Rect, targetIds: string[]): Promise<RoiMatchResponse> {
      return guarded(async () => {
        const resp = await fetch(`${base}/api/roi-match`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify({ query_id: queryId, roi, target_ids: targetIds }),
        });
        if (!resp.ok) await throwFromResponse(resp);
        return (await resp.json()) as RoiMatchResponse;
      });
    },

    fetchStoredImage(imageId: string): Promise<Blob> {
      return guarded(async () => {
        const resp = await fetch(`${base}/api/images/${encodeURIComponent(imageId)}`);
        if (!resp.ok) await throwFromResponse(resp);
        return await resp.blob();
      });
    },

    imageUrl(imageId: string): string {
      return `${base}/api/images/${encodeURIComponent(imageId)}?format=png`;
    },
  };
}
