// Chat transcript: user/system bubbles, API-call turns get a chip.

import type { TurnResult } from "./api.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTranscript(root: HTMLElement, turns: TurnResult[]): void {
  if (turns.length === 0) {
    root.innerHTML = '<p class="placeholder">ask for a restaurant to get started</p>';
    return;
  }
  root.innerHTML = turns
    .map((turn) => {
      const chip = turn.api_call
        ? `<span class="chip" data-api-call="${escapeHtml(turn.api_call)}">${escapeHtml(turn.api_call)}</span>`
        : "";
      return `
        <div class="exchange" data-turn="${turn.turn}">
          <div class="msg user">${escapeHtml(turn.user)}</div>
          ${chip}
          <div class="msg system">${escapeHtml(turn.system)}</div>
        </div>`;
    })
    .join("");
  root.scrollTop = root.scrollHeight;
}
