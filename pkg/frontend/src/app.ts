// Page state and wiring: one session, one in-flight request at a time.

import { ApiError, DialogApi } from "./api.js";
import type { TurnResult } from "./api.js";
import { renderBeliefBars } from "./bars.js";
import { renderEntityList } from "./entities.js";
import { renderTranscript } from "./transcript.js";

export interface AppElements {
  transcript: HTMLElement;
  belief: HTMLElement;
  entities: HTMLElement;
  apiBadge: HTMLElement;
  meta: HTMLElement;
  form: HTMLFormElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  status: HTMLElement;
}

export function findElements(doc: Document): AppElements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = doc.getElementById(id);
    if (!el) {
      throw new Error(`missing #${id} in the page`);
    }
    return el as T;
  };
  return {
    transcript: byId("transcript"),
    belief: byId("belief"),
    entities: byId("entities"),
    apiBadge: byId("api-badge"),
    meta: byId("meta"),
    form: byId<HTMLFormElement>("composer"),
    input: byId<HTMLInputElement>("message"),
    send: byId<HTMLButtonElement>("send"),
    status: byId("status"),
  };
}

export class App {
  private sessionId: string | null = null;
  private turns: TurnResult[] = [];
  private inFlight = false;

  constructor(
    private readonly api: DialogApi,
    private readonly el: AppElements,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  get session(): string | null {
    return this.sessionId;
  }

  async start(): Promise<void> {
    renderTranscript(this.el.transcript, []);
    renderBeliefBars(this.el.belief, {});
    renderEntityList(this.el.entities, null);
    try {
      const meta = await this.api.meta();
      this.el.meta.textContent =
        `${meta.variant} · ${Object.keys(meta.slots).length} slots · ` +
        `${meta.n_candidates} templates · ${meta.kb_size} kb entities`;
      const created = await this.api.createSession();
      this.sessionId = created.session_id;
      this.setStatus(`session ${this.sessionId}`);
    } catch (err) {
      this.setStatus(this.describe(err), true);
    }
  }

  async send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.inFlight || this.sessionId === null) {
      return;
    }
    this.setBusy(true);
    try {
      const turn = await this.api.sendMessage(this.sessionId, trimmed);
      this.turns.push(turn);
      renderTranscript(this.el.transcript, this.turns);
      if (turn.api_call) {
        this.el.apiBadge.textContent = turn.api_call;
        this.el.apiBadge.removeAttribute("hidden");
      }
      const state = await this.api.state(this.sessionId);
      renderBeliefBars(this.el.belief, state.belief);
      renderEntityList(this.el.entities, state.kb);
      this.setStatus(`session ${this.sessionId} · turn ${state.turns}`);
    } catch (err) {
      this.setStatus(this.describe(err), true);
    } finally {
      this.setBusy(false);
    }
  }

  private setBusy(busy: boolean): void {
    this.inFlight = busy;
    this.el.input.disabled = busy;
    this.el.send.disabled = busy;
    if (busy) {
      this.setStatus("thinking ...");
    } else {
      this.el.input.value = "";
      this.el.input.focus();
    }
  }

  private setStatus(text: string, isError = false): void {
    this.el.status.textContent = text;
    this.el.status.classList.toggle("error", isError);
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError) {
      return `service error ${err.status}: ${err.message}`;
    }
    return err instanceof Error ? err.message : String(err);
  }
}

export function boot(doc: Document, base = ""): App {
  const el = findElements(doc);
  const app = new App(new DialogApi(base), el);
  el.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void app.send(el.input.value);
  });
  void app.start();
  return app;
}
