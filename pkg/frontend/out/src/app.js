// Page wiring: form lifecycle, history, deep links, offline handling.
import { ApiError, Client, describeError } from "./api.js";
import { apiBase } from "./config.js";
import { renderHistory, renderInlineError, renderNotice, renderResult, renderSession, renderTargetOptions, } from "./render.js";
const client = new Client(apiBase());
const history = [];
let pending = false;
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function setBusy(busy) {
    pending = busy;
    refreshSubmitState();
}
function refreshSubmitState() {
    const submit = el("submit");
    submit.disabled = pending || !navigator.onLine;
    el("offline").hidden = navigator.onLine;
}
function clearErrors() {
    for (const id of ["target-error", "plan-error", "form-error"]) {
        el(id).innerHTML = "";
    }
}
function showError(err) {
    const { field, message } = describeError(err);
    const slot = field === "target" ? "target-error" : field === "plan" ? "plan-error" : "form-error";
    el(slot).innerHTML = renderInlineError(message);
}
function pushHistory(entry) {
    history.unshift(entry);
    el("history").innerHTML = renderHistory(history);
}
function fillForm(query) {
    el("origin").value = query.origin_jurisdiction;
    el("target").value = query.target_jurisdiction;
    el("plan").value = query.nominal_plan;
    el("situation").value =
        query.unexpected_situation === "normal status" ? "" : query.unexpected_situation;
    el("scene").value = query.scene_description;
}
async function showSession(traceId) {
    clearErrors();
    try {
        const session = await client.getSession(traceId);
        el("result").innerHTML = renderSession(session);
        fillForm(session.query);
    }
    catch (err) {
        if (err instanceof ApiError && err.code === "unknown_session") {
            el("result").innerHTML = renderNotice("Session expired.");
        }
        else {
            showError(err);
        }
    }
}
async function submitQuery(event) {
    event.preventDefault();
    if (pending)
        return;
    clearErrors();
    setBusy(true);
    try {
        const result = await client.adapt({
            origin_jurisdiction: el("origin").value,
            target_jurisdiction: el("target").value,
            nominal_plan: el("plan").value,
            unexpected_situation: el("situation").value,
            scene_description: el("scene").value,
        });
        el("result").innerHTML = renderResult(result);
        pushHistory({
            trace_id: result.trace_id,
            plan: el("plan").value,
            target: el("target").value,
        });
        window.location.hash = result.trace_id;
    }
    catch (err) {
        showError(err);
    }
    finally {
        setBusy(false);
    }
}
async function boot() {
    el("query-form").addEventListener("submit", submitQuery);
    window.addEventListener("online", refreshSubmitState);
    window.addEventListener("offline", refreshSubmitState);
    window.addEventListener("hashchange", () => {
        const trace = window.location.hash.slice(1);
        if (trace)
            void showSession(trace);
    });
    el("history").innerHTML = renderHistory(history);
    refreshSubmitState();
    try {
        const handbooks = await client.listHandbooks();
        el("target").innerHTML = renderTargetOptions(handbooks);
    }
    catch (err) {
        showError(err);
    }
    const trace = window.location.hash.slice(1);
    if (trace)
        await showSession(trace);
}
document.addEventListener("DOMContentLoaded", () => {
    void boot();
});
