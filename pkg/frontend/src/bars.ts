// Belief-state probability bars, one block per slot.

import type { SlotBelief } from "./api.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBeliefBars(
  root: HTMLElement,
  belief: Record<string, SlotBelief>,
  topK = 5,
): void {
  const slots = Object.keys(belief);
  if (slots.length === 0) {
    root.innerHTML = '<p class="placeholder">no belief yet , say something</p>';
    return;
  }
  root.innerHTML = slots
    .map((slot) => {
      const { values, probs, argmax } = belief[slot];
      const ranked = values
        .map((value, i) => ({ value, prob: probs[i] ?? 0 }))
        .sort((a, b) => b.prob - a.prob)
        .slice(0, topK);
      const bars = ranked
        .map(({ value, prob }) => {
          const pct = Math.round(prob * 100);
          return `
            <div class="bar-row" data-value="${escapeHtml(value)}">
              <span class="bar-label">${escapeHtml(value)}</span>
              <span class="bar-track"><span class="bar-fill" style="width:${pct}%"></span></span>
              <span class="bar-pct">${pct}%</span>
            </div>`;
        })
        .join("");
      return `
        <div class="slot-block" data-slot="${escapeHtml(slot)}">
          <div class="slot-head">
            <span class="slot-name">${escapeHtml(slot)}</span>
            <span class="slot-argmax" data-argmax="${escapeHtml(argmax)}">${escapeHtml(argmax)}</span>
          </div>
          ${bars}
        </div>`;
    })
    .join("");
}
