/** Chat application: sessions, message flow, chart fetching, trace display.
 *
 * Read-only with respect to the market data: the client calls only the
 * documented session/chart endpoints. One in-flight message per session;
 * the send control is disabled while a reply is pending.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./charts.js";
import { buildTracePanel } from "./trace.js";
import type { AgentTurn } from "./types.js";

const SESSION_KEY = "marketlens.session";

export interface AppOptions {
  api?: ApiClient;
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
}

export class ChatApp {
  private api: ApiClient;
  private storage: Pick<Storage, "getItem" | "setItem" | "removeItem">;
  private doc: Document;
  private root: HTMLElement;
  private messages!: HTMLElement;
  private input!: HTMLTextAreaElement;
  private sendButton!: HTMLButtonElement;
  private errorBanner!: HTMLElement;
  private busy = false;

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.root = root;
    this.doc = root.ownerDocument;
    this.api = options.api ?? new ApiClient();
    this.storage = options.storage ?? window.localStorage;
    this.buildSkeleton();
  }

  private buildSkeleton(): void {
    this.root.innerHTML = `
      <header class="topbar">
        <h1>marketlens</h1>
        <button class="new-conversation" type="button">new conversation</button>
      </header>
      <div class="error-banner" hidden></div>
      <main class="messages" aria-live="polite"></main>
      <footer class="composer">
        <textarea class="composer-input" rows="2"
          placeholder="Ask about skills, roles, salaries…"></textarea>
        <button class="send" type="button" disabled>send</button>
      </footer>`;
    this.messages = this.root.querySelector(".messages") as HTMLElement;
    this.input = this.root.querySelector(".composer-input") as HTMLTextAreaElement;
    this.sendButton = this.root.querySelector(".send") as HTMLButtonElement;
    this.errorBanner = this.root.querySelector(".error-banner") as HTMLElement;

    this.input.addEventListener("input", () => this.syncSendState());
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && !event.shiftKey) {
        event.preventDefault();
        void this.send();
      }
    });
    this.sendButton.addEventListener("click", () => void this.send());
    (this.root.querySelector(".new-conversation") as HTMLButtonElement).addEventListener(
      "click",
      () => this.newConversation(),
    );
  }

  private syncSendState(): void {
    this.sendButton.disabled = this.busy || this.input.value.trim() === "";
  }

  private showError(message: string, retry?: () => void): void {
    this.errorBanner.textContent = message;
    this.errorBanner.hidden = false;
    if (retry) {
      const button = this.doc.createElement("button");
      button.type = "button";
      button.className = "retry";
      button.textContent = "retry";
      button.addEventListener("click", () => {
        this.clearError();
        retry();
      });
      this.errorBanner.appendChild(button);
    }
  }

  private clearError(): void {
    this.errorBanner.hidden = true;
    this.errorBanner.textContent = "";
  }

  newConversation(): void {
    this.storage.removeItem(SESSION_KEY);
    this.messages.innerHTML = "";
    this.clearError();
  }

  private async ensureSession(): Promise<string> {
    const existing = this.storage.getItem(SESSION_KEY);
    if (existing) return existing;
    const sessionId = await this.api.createSession();
    this.storage.setItem(SESSION_KEY, sessionId);
    return sessionId;
  }

  private bubble(author: "user" | "agent", text: string): HTMLElement {
    const node = this.doc.createElement("div");
    node.className = `message message-${author}`;
    const body = this.doc.createElement("div");
    body.className = "message-text";
    body.textContent = text;
    node.appendChild(body);
    this.messages.appendChild(node);
    return node;
  }

  private async renderTurn(turn: AgentTurn): Promise<void> {
    const text =
      turn.status === "ok"
        ? turn.final_answer
        : turn.status === "step_limit"
          ? "(the agent hit its step limit before finishing)"
          : "(the model provider failed; partial trace below)";
    const node = this.bubble("agent", text);
    node.dataset.status = turn.status;

    for (const chartId of turn.charts) {
      const holder = this.doc.createElement("div");
      holder.className = "chart-holder";
      holder.dataset.chartId = chartId;
      try {
        const spec = await this.api.getChart(chartId);
        holder.innerHTML = renderChart(spec);
      } catch (error) {
        holder.innerHTML = `<div class="chart-placeholder" role="alert">chart ${chartId} unavailable</div>`;
      }
      node.appendChild(holder);
    }
    node.appendChild(buildTracePanel(this.doc, turn));
  }

  async send(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.busy) return;
    this.busy = true;
    this.syncSendState();
    this.clearError();
    try {
      const sessionId = await this.ensureSession();
      this.bubble("user", text);
      const turn = await this.api.sendMessage(sessionId, text);
      this.input.value = "";
      await this.renderTurn(turn);
    } catch (error) {
      if (error instanceof ApiError && error.status === 422) {
        this.showError(`message rejected: ${error.message}`);
      } else if (error instanceof ApiError && error.status === 404) {
        // stale session after a server reset: start fresh, keep the input
        this.storage.removeItem(SESSION_KEY);
        this.showError("session expired; press retry to resend", () => void this.send());
      } else {
        const message = error instanceof Error ? error.message : String(error);
        this.showError(`network failure: ${message}`, () => void this.send());
      }
    } finally {
      this.busy = false;
      this.syncSendState();
    }
  }
}

export function mountApp(root: HTMLElement, options: AppOptions = {}): ChatApp {
  return new ChatApp(root, options);
}
