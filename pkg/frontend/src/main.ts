/**
 * Browser entry point: DOM wiring around the client, store, and chart.
 *
 * All behavior worth testing lives in the imported modules; this file only
 * binds buttons to client calls and paints state changes.
 */

import { ConsoleClient } from "./client.js";
import type { SocketLike } from "./client.js";
import { canToggleLaser } from "./store.js";
import type { ConsoleState } from "./store.js";
import { DEFAULT_WINDOW_S, drawChart, layoutChart, STAGE_COLORS } from "./chart.js";

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (event) => like.onmessage?.({ data: event.data });
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onerror?.();
  return like;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const addressInput = el<HTMLInputElement>("address");
const connectButton = el<HTMLButtonElement>("connect");
const statusDot = el<HTMLSpanElement>("status");
const scenarioSelect = el<HTMLSelectElement>("scenario");
const createButton = el<HTMLButtonElement>("create");
const laserButton = el<HTMLButtonElement>("laser");
const resetButton = el<HTMLButtonElement>("reset");
const endButton = el<HTMLButtonElement>("end");
const stagePill = el<HTMLSpanElement>("stage");
const alarmBanner = el<HTMLDivElement>("alarm");
const toastBox = el<HTMLDivElement>("toasts");
const sessionLabel = el<HTMLSpanElement>("session");
const scrollback = el<HTMLInputElement>("scrollback");
const canvas = el<HTMLCanvasElement>("chart");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("canvas 2d context unavailable");

let client: ConsoleClient | null = null;

function render(state: ConsoleState): void {
  statusDot.dataset["state"] = state.connection;
  statusDot.textContent = state.connection;

  sessionLabel.textContent = state.sessionId
    ? `${state.sessionId} [${state.lifecycle}]`
    : "no session";

  connectButton.disabled = state.connection !== "disconnected";
  createButton.disabled =
    state.connection !== "connected" || state.scenarios.length === 0;

  if (scenarioSelect.options.length !== state.scenarios.length) {
    scenarioSelect.innerHTML = "";
    for (const name of state.scenarios) {
      const option = document.createElement("option");
      option.value = option.textContent = name;
      scenarioSelect.appendChild(option);
    }
  }

  laserButton.disabled = !canToggleLaser(state);
  laserButton.textContent = state.laserOn ? "laser OFF" : "laser ON";
  laserButton.classList.toggle("armed", state.laserOn);
  resetButton.disabled = state.sessionId === null ||
    state.connection !== "connected" || state.pendingCommand !== null;
  endButton.disabled = resetButton.disabled || state.lifecycle === "stopped";

  stagePill.textContent = state.stage ? `stage ${state.stage}` : "stage –";
  stagePill.style.background = state.stage
    ? STAGE_COLORS[state.stage]
    : "#444a55";

  alarmBanner.hidden = !state.alarm;
  if (state.alarm && state.alarmSince !== null) {
    alarmBanner.textContent =
      `OVERTREATMENT – late decline since ${state.alarmSince.toFixed(1)} s` +
      " (latched; reset session to clear)";
  }

  toastBox.innerHTML = "";
  state.toasts.forEach((toast, index) => {
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = `${toast.code}: ${toast.message}`;
    node.onclick = () => client?.store.dispatch({ kind: "dismiss-toast", index });
    toastBox.appendChild(node);
  });

  paint(state);
}

function paint(state: ConsoleState): void {
  const follow = Number(scrollback.value) >= 100;
  const lastT = state.points.length > 0
    ? state.points[state.points.length - 1]!.t
    : 0;
  const span = Math.max(lastT, DEFAULT_WINDOW_S);
  const endTime = follow
    ? undefined
    : DEFAULT_WINDOW_S +
      (Number(scrollback.value) / 100) * (span - DEFAULT_WINDOW_S);
  const layout = layoutChart(state, {
    width: canvas.width,
    height: canvas.height,
    windowSeconds: DEFAULT_WINDOW_S,
    endTime,
  });
  drawChart(ctx!, layout);
}

connectButton.onclick = () => {
  client?.dispose();
  client = new ConsoleClient({
    url: `ws://${addressInput.value}`,
    factory: browserSocket,
  });
  client.store.subscribe(render);
  client.connect();
};

createButton.onclick = () =>
  client?.createSession(scenarioSelect.value);
laserButton.onclick = () => client?.toggleLaser();
resetButton.onclick = () => client?.sendControl("reset");
endButton.onclick = () => client?.sendControl("end_session");
scrollback.oninput = () => {
  if (client) paint(client.store.getState());
};
