// Session view-model: mirrors the server state and exposes the gestures the
// page can perform. All mutation goes through acknowledged requests; renders
// happen only after the server confirms (no optimistic updates).

import { EvalApi } from "./api.js";
import { ActionJson, ApiError, SessionView } from "./types.js";

export type Phase = "idle" | "active" | "finished" | "error";

export interface Result {
  success: boolean;
}

const SHIFT: ActionJson = { type: "shift", args: {} };

function sameAction(a: ActionJson, b: ActionJson): boolean {
  return (
    a.type === b.type &&
    JSON.stringify(a.args ?? {}) === JSON.stringify(b.args ?? {})
  );
}

export class SessionViewModel {
  view: SessionView | null = null;
  phase: Phase = "idle";
  result: Result | null = null;
  lastError: string | null = null;
  busy = false;

  constructor(private api: EvalApi) {}

  get sessionId(): string {
    if (!this.view) throw new Error("no active session");
    return this.view.session_id;
  }

  /** Enabled affordances mirror the server's valid actions exactly. */
  get validActions(): ActionJson[] {
    return this.view?.valid_actions ?? [];
  }

  get instruction(): string | null {
    return this.view?.instruction ?? null;
  }

  isValid(action: ActionJson): boolean {
    return this.validActions.some((a) => sameAction(a, action));
  }

  async start(system: string, domain?: string, instanceId?: string): Promise<SessionView> {
    this.busy = true;
    try {
      this.view = await this.api.createSession(system, domain, instanceId);
      this.phase = "active";
      this.result = null;
      this.lastError = null;
      return this.view;
    } catch (e) {
      this.phase = "error";
      this.lastError = String(e);
      throw e;
    } finally {
      this.busy = false;
    }
  }

  /** Perform a world action; the rendered state updates only from the
   * server's acknowledgment. 400s leave the session untouched. */
  async perform(action: ActionJson): Promise<SessionView> {
    if (this.phase !== "active") throw new Error("session is not active");
    this.busy = true;
    try {
      this.view = await this.api.postAction(this.sessionId, action);
      this.lastError = null;
      return this.view;
    } catch (e) {
      if (e instanceof ApiError && e.status === 400) {
        this.lastError = e.message; // state unchanged server-side
        return this.view!;
      }
      this.phase = "error";
      this.lastError = String(e);
      throw e;
    } finally {
      this.busy = false;
    }
  }

  /** The explicit "next instruction" gesture (the shift analogue). */
  nextInstruction(): Promise<SessionView> {
    return this.perform(SHIFT);
  }

  async finish(): Promise<Result> {
    if (this.phase !== "active") throw new Error("session is not active");
    this.busy = true;
    try {
      const resp = await this.api.finish(this.sessionId);
      this.phase = "finished";
      this.result = { success: resp.success };
      return this.result;
    } catch (e) {
      if (e instanceof ApiError && e.status === 409) {
        this.phase = "finished";
        return this.result ?? { success: false };
      }
      this.phase = "error";
      this.lastError = String(e);
      throw e;
    } finally {
      this.busy = false;
    }
  }

  async refresh(): Promise<void> {
    if (this.view) {
      this.view = await this.api.getSession(this.sessionId);
    }
  }
}
