// Pure HTML-string renderers; app.ts mounts them into the page. Keeping
// them DOM-free makes the acceptance checks runnable under node.

import { byteSpansToSegments } from "./highlight.js";
import type {
  AdaptResponse,
  ExcerptPayload,
  HandbookMeta,
  SessionRecord,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderExcerpt(excerpt: ExcerptPayload): string {
  const segments = byteSpansToSegments(excerpt.text, excerpt.match_spans);
  const body = segments
    .map((segment) =>
      segment.highlighted
        ? `<mark>${escapeHtml(segment.text)}</mark>`
        : escapeHtml(segment.text),
    )
    .join("");
  const cite = `${excerpt.jurisdiction_id} &#182;${excerpt.paragraph_index}`;
  return (
    `<blockquote class="excerpt" data-paragraph="${excerpt.paragraph_index}">` +
    `<p>${body}</p><cite>${cite}</cite></blockquote>`
  );
}

export function renderGenericBadge(): string {
  return (
    '<span class="badge badge-generic">generic answer: ' +
    "no matching local rule</span>"
  );
}

export function renderResult(result: AdaptResponse): string {
  const parts: string[] = [];
  parts.push(`<p class="instruction">${escapeHtml(result.instruction)}</p>`);
  if (result.generic) {
    parts.push(renderGenericBadge());
  }
  parts.push(
    `<p class="keywords">keywords: ${result.keywords
      .map((k) => `<code>${escapeHtml(k)}</code>`)
      .join(", ")}</p>`,
  );
  for (const excerpt of result.excerpts) {
    parts.push(renderExcerpt(excerpt));
  }
  return `<article class="result" data-trace="${escapeHtml(result.trace_id)}">${parts.join("")}</article>`;
}

export function renderSession(session: SessionRecord): string {
  return renderResult({
    trace_id: session.trace_id,
    instruction: session.plan.instruction,
    generic: session.plan.generic,
    keywords: session.tre.keywords,
    excerpts: session.tre.excerpts,
    latency_ms: session.latency_ms,
  });
}

export interface HistoryEntry {
  trace_id: string;
  plan: string;
  target: string;
}

export function renderHistory(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return (
      '<p class="hint">No questions yet. Describe your plan and what is ' +
      "happening around you, and the assistant will adapt the plan to the " +
      "local rules.</p>"
    );
  }
  const items = entries
    .map(
      (entry) =>
        `<li><a href="#${escapeHtml(entry.trace_id)}" data-trace="${escapeHtml(entry.trace_id)}">` +
        `${escapeHtml(entry.plan)} <small>in ${escapeHtml(entry.target)}</small></a></li>`,
    )
    .join("");
  return `<ul class="history">${items}</ul>`;
}

export function renderTargetOptions(
  metas: HandbookMeta[],
  selected?: string,
): string {
  return metas
    .map((meta) => {
      const flag = meta.jurisdiction_id === selected ? " selected" : "";
      return (
        `<option value="${escapeHtml(meta.jurisdiction_id)}"${flag}>` +
        `${escapeHtml(meta.display_name)}</option>`
      );
    })
    .join("");
}

export function renderInlineError(message: string): string {
  return `<span class="error">${escapeHtml(message)}</span>`;
}

export function renderNotice(message: string): string {
  return `<p class="notice">${escapeHtml(message)}</p>`;
}
