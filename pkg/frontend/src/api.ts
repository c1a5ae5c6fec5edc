import { ActionJson, ApiError, FinishResponse, SessionView } from "./types.js";

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (e) {
    throw new ApiError(0, `connection failed: ${e}`);
  }
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
  }
  return body as T;
}

export class EvalApi {
  constructor(private base: string) {}

  health(): Promise<{ ok: boolean; instances: number }> {
    return request(`${this.base}/health`);
  }

  createSession(system: string, domain?: string, instanceId?: string): Promise<SessionView> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ system, domain, instance_id: instanceId }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return request(`${this.base}/sessions/${sessionId}`);
  }

  postAction(sessionId: string, action: ActionJson): Promise<SessionView> {
    return request(`${this.base}/sessions/${sessionId}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action }),
    });
  }

  finish(sessionId: string): Promise<FinishResponse> {
    return request(`${this.base}/sessions/${sessionId}/finish`, { method: "POST" });
  }

  results(): Promise<string> {
    return fetch(`${this.base}/results`).then((r) => r.text());
  }
}
