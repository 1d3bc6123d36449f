// Page wiring: form lifecycle, history, deep links, offline handling.

import { ApiError, Client, describeError } from "./api.js";
import { apiBase } from "./config.js";
import {
  HistoryEntry,
  renderHistory,
  renderInlineError,
  renderNotice,
  renderResult,
  renderSession,
  renderTargetOptions,
} from "./render.js";
import type { SessionRecord } from "./types.js";

const client = new Client(apiBase());

const history: HistoryEntry[] = [];
let pending = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setBusy(busy: boolean): void {
  pending = busy;
  refreshSubmitState();
}

function refreshSubmitState(): void {
  const submit = el<HTMLButtonElement>("submit");
  submit.disabled = pending || !navigator.onLine;
  el<HTMLElement>("offline").hidden = navigator.onLine;
}

function clearErrors(): void {
  for (const id of ["target-error", "plan-error", "form-error"]) {
    el<HTMLElement>(id).innerHTML = "";
  }
}

function showError(err: unknown): void {
  const { field, message } = describeError(err);
  const slot =
    field === "target" ? "target-error" : field === "plan" ? "plan-error" : "form-error";
  el<HTMLElement>(slot).innerHTML = renderInlineError(message);
}

function pushHistory(entry: HistoryEntry): void {
  history.unshift(entry);
  el<HTMLElement>("history").innerHTML = renderHistory(history);
}

function fillForm(query: SessionRecord["query"]): void {
  el<HTMLInputElement>("origin").value = query.origin_jurisdiction;
  el<HTMLSelectElement>("target").value = query.target_jurisdiction;
  el<HTMLTextAreaElement>("plan").value = query.nominal_plan;
  el<HTMLTextAreaElement>("situation").value =
    query.unexpected_situation === "normal status" ? "" : query.unexpected_situation;
  el<HTMLTextAreaElement>("scene").value = query.scene_description;
}

async function showSession(traceId: string): Promise<void> {
  clearErrors();
  try {
    const session = await client.getSession(traceId);
    el<HTMLElement>("result").innerHTML = renderSession(session);
    fillForm(session.query);
  } catch (err) {
    if (err instanceof ApiError && err.code === "unknown_session") {
      el<HTMLElement>("result").innerHTML = renderNotice("Session expired.");
    } else {
      showError(err);
    }
  }
}

async function submitQuery(event: Event): Promise<void> {
  event.preventDefault();
  if (pending) return;
  clearErrors();
  setBusy(true);
  try {
    const result = await client.adapt({
      origin_jurisdiction: el<HTMLInputElement>("origin").value,
      target_jurisdiction: el<HTMLSelectElement>("target").value,
      nominal_plan: el<HTMLTextAreaElement>("plan").value,
      unexpected_situation: el<HTMLTextAreaElement>("situation").value,
      scene_description: el<HTMLTextAreaElement>("scene").value,
    });
    el<HTMLElement>("result").innerHTML = renderResult(result);
    pushHistory({
      trace_id: result.trace_id,
      plan: el<HTMLTextAreaElement>("plan").value,
      target: el<HTMLSelectElement>("target").value,
    });
    window.location.hash = result.trace_id;
  } catch (err) {
    showError(err);
  } finally {
    setBusy(false);
  }
}

async function boot(): Promise<void> {
  el<HTMLFormElement>("query-form").addEventListener("submit", submitQuery);
  window.addEventListener("online", refreshSubmitState);
  window.addEventListener("offline", refreshSubmitState);
  window.addEventListener("hashchange", () => {
    const trace = window.location.hash.slice(1);
    if (trace) void showSession(trace);
  });
  el<HTMLElement>("history").innerHTML = renderHistory(history);
  refreshSubmitState();

  try {
    const handbooks = await client.listHandbooks();
    el<HTMLSelectElement>("target").innerHTML = renderTargetOptions(handbooks);
  } catch (err) {
    showError(err);
  }

  const trace = window.location.hash.slice(1);
  if (trace) await showSession(trace);
}

document.addEventListener("DOMContentLoaded", () => {
  void boot();
});
