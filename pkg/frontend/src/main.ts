// Browser bootstrap: wire the controller, stream and renderer to the DOM.

import { GatewayApi } from "./api.js";
import { ConsoleController } from "./controller.js";
import { render } from "./render.js";
import { ReconnectingStream } from "./wsclient.js";

function tokenFromPage(): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get("token");
  if (fromQuery) {
    localStorage.setItem("neoward-token", fromQuery);
    return fromQuery;
  }
  const stored = localStorage.getItem("neoward-token");
  if (stored) {
    return stored;
  }
  const entered = window.prompt("gateway bearer token") ?? "";
  localStorage.setItem("neoward-token", entered);
  return entered;
}

function main(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const base = window.location.origin;
  const token = tokenFromPage();
  const api = new GatewayApi(base, token);
  const controller = new ConsoleController(api, (state) => {
    root.innerHTML = render(state);
  });

  controller.dispatch({ type: "tick", now_ms: Date.now() });
  setInterval(() => controller.dispatch({ type: "tick", now_ms: Date.now() }), 1000);
  setInterval(() => {
    api.syncStatus().then(
      (status) => controller.dispatch({ type: "sync", status }),
      () => controller.dispatch({ type: "connection", status: "disconnected" }),
    );
  }, 5000);

  const wsUrl = `${base.replace(/^http/, "ws")}/ws/stream?token=${encodeURIComponent(token)}`;
  const stream = new ReconnectingStream(
    wsUrl,
    (message) => controller.dispatch(message),
    (status) => controller.dispatch({ type: "connection", status }),
    (url) => new WebSocket(url) as unknown as import("./wsclient.js").SocketLike,
  );
  stream.start();

  controller.loadSnapshots().catch(() => {
    controller.dispatch({ type: "connection", status: "disconnected" });
  });

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("button[data-action]");
    if (!(target instanceof HTMLButtonElement) || target.disabled) {
      return;
    }
    const action = target.dataset.action;
    if (action === "ack") {
      void controller.ackAlert(Number(target.dataset.alertId));
    } else if (action === "start-session") {
      void controller.startSession(target.dataset.deviceId ?? "");
    } else if (action === "stop-session") {
      const tile = target.closest("[data-device-id]") as HTMLElement | null;
      void controller.stopSession(tile?.dataset.deviceId ?? "", target.dataset.sessionId ?? "");
    } else if (action === "sync-trigger") {
      void controller.triggerSync();
    }
  });
}

window.addEventListener("load", main);
