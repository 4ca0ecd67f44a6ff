// Typed client for the dialog service HTTP API.

export interface TurnResult {
  turn: number;
  user: string;
  system: string;
  template: string;
  belief: Record<string, string>;
  api_call: string | null;
  kb_count: number | null;
  entity_index: number | null;
  entity_name: string | null;
  kb_indicator: number;
}

export interface SlotBelief {
  values: string[];
  probs: number[];
  argmax: string;
}

export interface KbSnapshot {
  call: string;
  count: number;
  names: string[];
  pointer: number;
}

export interface SessionState {
  session_id: string;
  turns: number;
  belief: Record<string, SlotBelief>;
  kb: KbSnapshot | null;
  transcript: TurnResult[];
}

export interface ModelMeta {
  variant: string;
  slots: Record<string, number>;
  n_candidates: number;
  vocab_size: number;
  max_entities: number;
  kb_size: number;
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export class DialogApi {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const message =
        body && typeof body.error === "string"
          ? body.error
          : `request failed (${response.status})`;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  meta(): Promise<ModelMeta> {
    return this.request<ModelMeta>("/api/meta");
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request<{ session_id: string }>("/api/session", { method: "POST" });
  }

  sendMessage(sessionId: string, text: string): Promise<TurnResult> {
    return this.request<TurnResult>(`/api/session/${sessionId}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  state(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(`/api/session/${sessionId}/state`);
  }

  deleteSession(sessionId: string): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>(`/api/session/${sessionId}`, {
      method: "DELETE",
    });
  }
}
