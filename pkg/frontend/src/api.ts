import type {
  CreateSessionResponse,
  NextQueryPayload,
  ResponseBody,
  SlicePayload,
  StatusPayload,
} from "./types.js";

export class ConflictError extends Error {}

async function check<T>(response: Response): Promise<T> {
  if (response.status === 409) {
    throw new ConflictError(await response.text());
  }
  if (!response.ok) {
    throw new Error(`${response.status}: ${await response.text()}`);
  }
  return (await response.json()) as T;
}

/** Thin typed client over the session service. */
export class SessionApi {
  constructor(private readonly base: string = "") {}

  createSession(config: unknown): Promise<CreateSessionResponse> {
    return fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    }).then((r) => check<CreateSessionResponse>(r));
  }

  getNext(id: string): Promise<NextQueryPayload> {
    return fetch(`${this.base}/sessions/${id}/next`).then((r) => check<NextQueryPayload>(r));
  }

  postResponse(id: string, body: ResponseBody): Promise<StatusPayload> {
    return fetch(`${this.base}/sessions/${id}/responses`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => check<StatusPayload>(r));
  }

  getStatus(id: string): Promise<StatusPayload> {
    return fetch(`${this.base}/sessions/${id}/status`).then((r) => check<StatusPayload>(r));
  }

  getSlice(id: string, dimX = 0, dimY = 1, resolution = 64): Promise<SlicePayload> {
    const params = new URLSearchParams({
      dim_x: String(dimX),
      dim_y: String(dimY),
      resolution: String(resolution),
    });
    return fetch(`${this.base}/sessions/${id}/slice?${params}`).then((r) =>
      check<SlicePayload>(r),
    );
  }

  exportSession(id: string): Promise<unknown> {
    return fetch(`${this.base}/sessions/${id}/export`).then((r) => check<unknown>(r));
  }

  finishSession(id: string): Promise<unknown> {
    return fetch(`${this.base}/sessions/${id}/finish`, { method: "POST" }).then((r) =>
      check<unknown>(r),
    );
  }
}
