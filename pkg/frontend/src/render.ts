/**
 * Pure HTML renderers for the transcript and evidence panel.
 *
 * Kept DOM-free (string in, string out) so they are testable without a
 * browser; main.ts injects the results into the page.
 */

import { buildEvidencePanel } from "./evidence.js";
import type { ChatState } from "./session.js";
import type { ChatMessage } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderMessage(message: ChatMessage): string {
  const classes = ["bubble", message.role];
  if (message.error) classes.push("error", message.error.kind);
  if (message.response?.needs_clarification) classes.push("clarification");
  const parts: string[] = [
    `<div class="${classes.join(" ")}" data-role="${message.role}">`,
    `<p class="text">${escapeHtml(message.text)}</p>`,
  ];
  if (message.role === "assistant" && message.response) {
    parts.push(renderEvidence(message));
    parts.push(
      `<span class="meta">${escapeHtml(message.response.pipeline)} · ${escapeHtml(
        message.response.category,
      )}</span>`,
    );
  }
  if (message.error && message.error.kind !== "unavailable") {
    parts.push(`<button class="retry" data-question="${escapeHtml(message.error.question)}">retry</button>`);
  }
  parts.push("</div>");
  return parts.join("");
}

export function renderEvidence(message: ChatMessage): string {
  const panel = buildEvidencePanel(message);
  const parts: string[] = ['<details class="evidence"><summary>evidence</summary>'];
  for (const entity of panel.warnings) {
    parts.push(`<span class="warning">unverified: ${escapeHtml(entity)}</span>`);
  }
  if (panel.kind === "query" && panel.queryText) {
    parts.push(`<pre class="query">${escapeHtml(panel.queryText)}</pre>`);
  }
  if (panel.docIds.length > 0) {
    const items = panel.docIds
      .map((id) => `<li class="doc-id">${escapeHtml(id)}</li>`)
      .join("");
    parts.push(`<ul class="doc-ids">${items}</ul>`);
  }
  if (panel.kind === "empty") {
    parts.push('<p class="no-evidence">no evidence</p>');
  }
  parts.push("</details>");
  return parts.join("");
}

export function renderTranscript(state: ChatState): string {
  return state.messages.map(renderMessage).join("");
}

export function renderBanner(state: ChatState): string {
  if (state.unavailable) {
    return '<div class="banner unavailable">model unavailable</div>';
  }
  if (state.awaitingClarification) {
    return '<div class="banner clarify">please answer the clarification question above</div>';
  }
  return "";
}

export function renderSessionBadge(state: ChatState): string {
  if (!state.sessionId) return "";
  return `<span class="session-badge">session ${escapeHtml(state.sessionId.slice(0, 8))}</span>`;
}
