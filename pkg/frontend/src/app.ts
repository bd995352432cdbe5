import { ConflictError, SessionApi } from "./api.js";
import { gaugeLabel, mapStatusToGauge } from "./gauge.js";
import { renderSlice } from "./heatmap.js";
import { buildResponsePayload, choiceFromKey, type Choice } from "./payloads.js";
import type { NextQueryPayload, StatusPayload } from "./types.js";

const POLL_INTERVAL_MS = 1000;

const api = new SessionApi("");

interface AppState {
  sessionId: string | null;
  pending: NextQueryPayload | null;
  posting: boolean;
  log: { trial: number; response: number }[];
  dimNames: string[];
}

const state: AppState = { sessionId: null, pending: null, posting: false, log: [], dimNames: [] };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setNotice(text: string) {
  el<HTMLDivElement>("notice").textContent = text;
}

function setControlsEnabled(enabled: boolean) {
  el<HTMLButtonElement>("btn-correct").disabled = !enabled;
  el<HTMLButtonElement>("btn-incorrect").disabled = !enabled;
}

function renderPending() {
  const target = el<HTMLDivElement>("stimulus");
  if (!state.pending) {
    target.textContent = "no pending query";
    return;
  }
  const parts = state.pending.stimulus.map((v, i) => {
    const name = state.dimNames[i] ?? `dim ${i}`;
    return `${name} = ${v.toPrecision(6)}`;
  });
  const origin = state.pending.was_random_exploration ? "random exploration" : "acquisition";
  target.innerHTML =
    `<div class="trial">trial ${state.pending.trial_index} <span class="origin">(${origin})</span></div>` +
    parts.map((p) => `<div class="dim">${p}</div>`).join("");
}

function renderStatus(status: StatusPayload) {
  const gauge = mapStatusToGauge(status);
  const badge = el<HTMLSpanElement>("badge");
  badge.textContent = gauge.badge;
  badge.className = `badge ${gauge.badge}`;
  el<HTMLDivElement>("gauge-detail").textContent = gaugeLabel(gauge);
  el<HTMLSpanElement>("trials").textContent = String(status.trial_count);
  el<HTMLSpanElement>("counts").textContent =
    `${status.class_counts["1"]} correct / ${status.class_counts["0"]} incorrect`;
  const log = el<HTMLUListElement>("log");
  log.innerHTML = state.log
    .slice(-50)
    .map((e) => `<li>trial ${e.trial}: ${e.response ? "correct" : "incorrect"}</li>`)
    .reverse()
    .join("");
}

async function refreshSlice() {
  if (!state.sessionId) return;
  try {
    const slice = await api.getSlice(state.sessionId, 0, 1, 64);
    const model = renderSlice(slice, state.dimNames);
    paintHeatmap(model, slice.axis_x, slice.axis_y);
  } catch (err) {
    // slices are unavailable for 1D sessions; leave the canvas blank
  }
}

function paintHeatmap(
  model: ReturnType<typeof renderSlice>,
  axisX: number[],
  axisY: number[],
) {
  const canvas = el<HTMLCanvasElement>("heatmap");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const n = model.resolution;
  const cw = canvas.width / n;
  const ch = canvas.height / n;
  for (const cell of model.cells) {
    ctx.fillStyle = cell.color;
    // canvas y grows downward; flip so axis_y increases upward
    ctx.fillRect(cell.ix * cw, canvas.height - (cell.iy + 1) * ch, cw + 1, ch + 1);
  }
  const x0 = axisX[0]!;
  const x1 = axisX[axisX.length - 1]!;
  const y0 = axisY[0]!;
  const y1 = axisY[axisY.length - 1]!;
  for (const marker of model.markers) {
    const px = ((marker.x - x0) / (x1 - x0)) * canvas.width;
    const py = canvas.height - ((marker.y - y0) / (y1 - y0)) * canvas.height;
    ctx.beginPath();
    ctx.arc(px, py, marker.recent ? 5 : 3, 0, 2 * Math.PI);
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = marker.recent ? 3 : 1;
    ctx.stroke();
    ctx.fillStyle = "#111111";
    ctx.fill();
  }
  el<HTMLSpanElement>("axis-x-label").textContent =
    `${model.axisX.label}: ${x0.toPrecision(4)} .. ${x1.toPrecision(4)}`;
  el<HTMLSpanElement>("axis-y-label").textContent =
    `${model.axisY.label}: ${y0.toPrecision(4)} .. ${y1.toPrecision(4)}`;
}

async function fetchNext() {
  if (!state.sessionId) return;
  state.pending = await api.getNext(state.sessionId);
  renderPending();
  setControlsEnabled(true);
}

async function submit(choice: Choice) {
  if (!state.sessionId || !state.pending || state.posting) return;
  state.posting = true;
  setControlsEnabled(false);
  const payload = buildResponsePayload(state.pending, choice);
  try {
    const status = await api.postResponse(state.sessionId, payload);
    state.log.push({ trial: state.pending.trial_index, response: payload.response });
    state.pending = null;
    renderStatus(status);
    await fetchNext();
    await refreshSlice();
    setNotice("");
  } catch (err) {
    if (err instanceof ConflictError) {
      setNotice("stale query; refreshed the pending stimulus");
      await fetchNext();
    } else {
      setNotice(String(err));
      setControlsEnabled(true);
    }
  } finally {
    state.posting = false;
  }
}

async function poll() {
  if (state.sessionId && !state.posting) {
    try {
      renderStatus(await api.getStatus(state.sessionId));
    } catch {
      // transient polling errors surface on the next action instead
    }
  }
  window.setTimeout(poll, POLL_INTERVAL_MS);
}

async function createSession() {
  const configText = el<HTMLTextAreaElement>("config").value;
  let config: unknown;
  try {
    config = JSON.parse(configText);
  } catch (err) {
    setNotice(`config is not valid JSON: ${err}`);
    return;
  }
  try {
    const created = await api.createSession(config);
    adoptSession(created.id, config);
  } catch (err) {
    setNotice(String(err));
  }
}

async function loadSession() {
  const id = el<HTMLInputElement>("session-id").value.trim();
  if (!id) return;
  try {
    await api.getStatus(id);
    adoptSession(id, null);
  } catch (err) {
    setNotice(String(err));
  }
}

function adoptSession(id: string, config: unknown) {
  state.sessionId = id;
  state.log = [];
  const names = (config as { dim_names?: string[] } | null)?.dim_names;
  state.dimNames = Array.isArray(names) ? names : [];
  el<HTMLSpanElement>("session-label").textContent = id;
  setNotice("");
  void fetchNext().then(refreshSlice);
}

async function exportSession() {
  if (!state.sessionId) return;
  const doc = await api.exportSession(state.sessionId);
  const blob = new Blob([JSON.stringify(doc)], { type: "application/json" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = `session-${state.sessionId}.json`;
  link.click();
}

async function finishSession() {
  if (!state.sessionId) return;
  await api.finishSession(state.sessionId);
  setNotice(`session ${state.sessionId} finished`);
  state.sessionId = null;
  state.pending = null;
  renderPending();
  setControlsEnabled(false);
}

export function main() {
  el<HTMLButtonElement>("btn-create").addEventListener("click", () => void createSession());
  el<HTMLButtonElement>("btn-load").addEventListener("click", () => void loadSession());
  el<HTMLButtonElement>("btn-correct").addEventListener("click", () => void submit("correct"));
  el<HTMLButtonElement>("btn-incorrect").addEventListener("click", () => void submit("incorrect"));
  el<HTMLButtonElement>("btn-export").addEventListener("click", () => void exportSession());
  el<HTMLButtonElement>("btn-finish").addEventListener("click", () => void finishSession());
  document.addEventListener("keydown", (event) => {
    const choice = choiceFromKey(event.key);
    if (choice && !state.posting && state.pending) void submit(choice);
  });
  setControlsEnabled(false);
  void poll();
}

if (typeof document !== "undefined" && document.getElementById("btn-create")) {
  main();
}
