// Thin fetch wrapper over the tuning service endpoints.

import type { PipelineParams, SessionSummary, UpdateResponse } from "./types.js";
import { serializeParams } from "./params.js";

export interface MetaFields {
  source_id: string;
  magnification: number;
  hfw_um: number;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function reject(response: Response): Promise<never> {
  let reason = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; detail?: unknown };
    reason = body.error ?? JSON.stringify(body.detail ?? body);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(response.status, reason);
}

export class ServiceClient {
  constructor(public baseUrl: string = "") {}

  async createSession(image: Blob, filename: string, meta: MetaFields): Promise<SessionSummary> {
    const form = new FormData();
    form.append("image", image, filename);
    form.append("meta", JSON.stringify(meta));
    const r = await fetch(`${this.baseUrl}/sessions`, { method: "POST", body: form });
    if (!r.ok) await reject(r);
    return (await r.json()) as SessionSummary;
  }

  async updateParams(sessionId: string, params: PipelineParams): Promise<UpdateResponse> {
    const r = await fetch(`${this.baseUrl}/sessions/${sessionId}/params`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: serializeParams(params),
    });
    if (!r.ok) await reject(r);
    return (await r.json()) as UpdateResponse;
  }

  stageUrl(sessionId: string, revision: number, stage: string, scale?: number, full = false): string {
    const q = new URLSearchParams();
    if (scale !== undefined) q.set("scale", String(scale));
    if (full) q.set("full", "true");
    const query = q.size ? `?${q.toString()}` : "";
    return `${this.baseUrl}/sessions/${sessionId}/stages/${revision}/${stage}${query}`;
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }

  async deleteSession(sessionId: string): Promise<void> {
    const r = await fetch(`${this.baseUrl}/sessions/${sessionId}`, { method: "DELETE" });
    if (!r.ok && r.status !== 404) await reject(r);
  }
}
