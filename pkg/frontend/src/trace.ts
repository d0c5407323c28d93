/** Collapsible reasoning-trace panel: steps rendered verbatim, in order. */

import type { AgentTurn } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function buildTracePanel(doc: Document, turn: AgentTurn): HTMLElement {
  const details = el(doc, "details", "trace-panel");
  const summary = el(doc, "summary", "trace-summary", `trace (${turn.steps.length} steps)`);
  details.appendChild(summary);

  if (turn.status === "step_limit") {
    details.appendChild(el(doc, "div", "trace-banner", "step limit reached"));
  } else if (turn.status === "provider_error") {
    details.appendChild(el(doc, "div", "trace-banner", "provider error: turn aborted"));
  }

  for (const step of turn.steps) {
    const card = el(doc, "div", "trace-step");
    card.dataset.index = String(step.index);
    card.appendChild(el(doc, "div", "trace-thought", `thought: ${step.thought}`));
    card.appendChild(
      el(doc, "div", "trace-action", `action: ${step.tool}(${JSON.stringify(step.args)})`),
    );
    card.appendChild(el(doc, "div", "trace-observation", `observation: ${step.observation}`));
    details.appendChild(card);
  }
  return details;
}
