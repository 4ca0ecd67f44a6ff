// Loads the real page skeleton into the test DOM (scripts/styles stripped).

import html from "../index.html?raw";

export function mountPage(): void {
  const body = html
    .replace(/<script[\s\S]*?<\/script>/g, "")
    .replace(/<link[^>]*>/g, "");
  const match = body.match(/<body>([\s\S]*)<\/body>/);
  if (!match) {
    throw new Error("index.html has no body");
  }
  document.body.innerHTML = match[1];
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export function argmaxOf(slot: string): string | null {
  const el = document.querySelector(`[data-slot="${slot}"] .slot-argmax`);
  return el ? el.textContent : null;
}

export function listedEntities(): (string | null)[] {
  return [...document.querySelectorAll("#entities .entity")].map((li) =>
    li.getAttribute("data-name"),
  );
}
