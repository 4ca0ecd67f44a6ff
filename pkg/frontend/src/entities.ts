// Ranked KB result list with the offer pointer.

import type { KbSnapshot } from "./api.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderEntityList(root: HTMLElement, kb: KbSnapshot | null): void {
  if (kb === null) {
    root.innerHTML = '<p class="placeholder">no query issued yet</p>';
    return;
  }
  const items = kb.names
    .map((name, i) => {
      const offered = i < kb.pointer ? " offered" : "";
      return `
        <li class="entity${offered}" data-name="${escapeHtml(name)}" data-rank="${i}">
          <span class="entity-rank">${i + 1}</span>
          <span class="entity-name">${escapeHtml(name)}</span>
          ${i < kb.pointer ? '<span class="entity-flag">offered</span>' : ""}
        </li>`;
    })
    .join("");
  root.innerHTML = `
    <div class="kb-call" data-call="${escapeHtml(kb.call)}">${escapeHtml(kb.call)}</div>
    <div class="kb-count">${kb.count} match${kb.count === 1 ? "" : "es"}</div>
    <ul class="entity-list">${items}</ul>`;
}
