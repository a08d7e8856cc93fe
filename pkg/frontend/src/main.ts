// DOM bootstrap: wires the pure renderers to the service client.
// At most one mutation request is in flight at any time.

import { SessionApi } from "./api.js";
import { renderApp } from "./app.js";
import type { SessionState } from "./types.js";

const POLL_MS = Number(new URLSearchParams(location.search).get("poll")) || 0;

class App {
  private api = new SessionApi();
  private sessionId: string;
  private root: HTMLElement;
  private state: SessionState | null = null;
  private history: number[] = [];
  private endOfStream = false;
  private busy = false;
  private autoStep = false;

  constructor(root: HTMLElement, sessionId: string) {
    this.root = root;
    this.sessionId = sessionId;
    root.addEventListener("click", (ev) => this.onClick(ev));
    root.addEventListener("change", (ev) => this.onChange(ev));
    document.addEventListener("keydown", (ev) => this.onKey(ev));
    if (POLL_MS > 0) setInterval(() => void this.refresh(), POLL_MS);
    void this.refresh();
  }

  private async refresh(): Promise<void> {
    this.state = await this.api.getState(this.sessionId);
    this.endOfStream =
      this.state.stream_position >= this.state.stream_length &&
      this.state.pending === null;
    this.history.push(this.state.query_rate);
    if (this.history.length > 200) this.history.shift();
    this.root.innerHTML = renderApp(this.state, this.history, this.endOfStream);
    if (this.autoStep && !this.state.pending && !this.endOfStream) {
      void this.step();
    }
  }

  private async step(): Promise<void> {
    if (this.busy || this.state?.pending) return;
    this.busy = true;
    try {
      const result = await this.api.step(this.sessionId);
      this.endOfStream = result.status === "end_of_stream";
    } finally {
      this.busy = false;
    }
    await this.refresh();
  }

  private async answer(same: boolean): Promise<void> {
    const pending = this.state?.pending;
    if (!pending || this.busy) return;
    this.busy = true;
    try {
      await this.api.answer(this.sessionId, pending.query_id, same);
    } finally {
      this.busy = false;
    }
    await this.refresh();
  }

  private onClick(ev: Event): void {
    const target = (ev.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) return;
    switch (target.dataset["action"]) {
      case "same":
        void this.answer(true);
        break;
      case "different":
        void this.answer(false);
        break;
      case "step":
        void this.step();
        break;
    }
  }

  private onChange(ev: Event): void {
    const target = ev.target as HTMLInputElement;
    if (target.dataset["action"] === "autostep") {
      this.autoStep = target.checked;
      if (this.autoStep) void this.step();
    }
  }

  private onKey(ev: KeyboardEvent): void {
    if (ev.key === "s" || ev.key === "S") void this.answer(true);
    else if (ev.key === "d" || ev.key === "D") void this.answer(false);
    else if (ev.key === "Enter") void this.step();
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const params = new URLSearchParams(location.search);
  let sessionId = params.get("session");
  if (!sessionId) {
    const api = new SessionApi();
    const manifest = params.get("manifest") ?? "manifest.json";
    const alpha = Number(params.get("alpha") ?? "0.5");
    const created = await api.createSession({ manifest, alpha });
    sessionId = created.session_id;
    params.set("session", sessionId);
    history.replaceState(null, "", `?${params}`);
  }
  new App(root, sessionId);
}

void boot();
