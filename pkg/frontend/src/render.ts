// Deterministic HTML renderer: ConsoleState in, markup string out.
// Keeping this a pure string function makes UI snapshots trivially
// comparable across replays.

import {
  acknowledgedAlerts,
  activeAlerts,
  alertBadges,
  isStale,
  sessionDurationMs,
  sortedTiles,
  type ConsoleState,
  type TileState,
} from "./store.js";
import type { AlertInfo } from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function formatDuration(ms: number): string {
  const totalSeconds = Math.floor(ms / 1000);
  const h = Math.floor(totalSeconds / 3600);
  const m = Math.floor((totalSeconds % 3600) / 60);
  const s = totalSeconds % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return h > 0 ? `${h}:${mm}:${ss}` : `${m}:${ss}`;
}

function centi(value: number, digits = 1): string {
  return (value / 100).toFixed(digits);
}

export function sparklinePath(points: { hr: number }[], width = 120, height = 28): string {
  if (points.length < 2) {
    return "";
  }
  const values = points.map((p) => p.hr / 100);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  return values
    .map((v, i) => {
      const x = ((i / (points.length - 1)) * width).toFixed(1);
      const y = (height - ((v - lo) / span) * height).toFixed(1);
      return `${x},${y}`;
    })
    .join(" ");
}

function alertChip(alert: AlertInfo): string {
  return (
    `<li class="alert alert-${alert.state}" data-alert-id="${alert.alert_id}">` +
    `dev ${esc(alert.device_id)} ${esc(alert.vital)} ${esc(alert.direction)}` +
    ` x${alert.event_count} p=${alert.posterior.toFixed(2)}` +
    (alert.state === "raised"
      ? ` <button data-action="ack" data-alert-id="${alert.alert_id}">ack</button>`
      : "") +
    `</li>`
  );
}

function renderTile(state: ConsoleState, tile: TileState): string {
  const stale = isStale(tile, state.nowMs);
  const badges = alertBadges(state, tile.deviceId);
  const latest = tile.latest;
  const age =
    tile.receivedMs === null ? "never" : `${Math.floor((state.nowMs - tile.receivedMs) / 1000)}s ago`;
  const duration = sessionDurationMs(tile, state.nowMs);
  const sessionActive = tile.session !== null && tile.session.end_ms === null;

  const vitals = latest
    ? `<div class="vitals">` +
      `<span class="hr">${centi(latest.hr, 0)} bpm</span>` +
      `<span class="spo2">${centi(latest.spo2)}%</span>` +
      `<span class="rr">${centi(latest.rr, 0)}/min</span>` +
      `<span class="temp">${centi(latest.temp)}&deg;C</span>` +
      `</div>`
    : `<div class="vitals vitals-empty">no data</div>`;

  const sessionLine =
    duration === null
      ? `<span class="session session-none">no session</span>`
      : `<span class="session ${sessionActive ? "session-active" : "session-done"}">` +
        `${sessionActive ? "in session" : "last session"} ${formatDuration(duration)}</span>`;

  const sessionButton = tile.sessionPending
    ? `<button disabled>...</button>`
    : sessionActive
      ? `<button data-action="stop-session" data-session-id="${esc(tile.session!.session_id)}">stop</button>`
      : `<button data-action="start-session" data-device-id="${esc(tile.deviceId)}">start</button>`;

  return (
    `<article class="tile${stale ? " tile-stale" : ""}" data-device-id="${esc(tile.deviceId)}">` +
    `<header>dev ${esc(tile.deviceId)} <small>${esc(tile.category)}</small>` +
    (stale ? `<span class="badge badge-stale">stale</span>` : "") +
    badges.map((b) => `<span class="badge badge-alert">${esc(b.vital)} ${esc(b.direction)}</span>`).join("") +
    `</header>` +
    vitals +
    `<svg class="sparkline" viewBox="0 0 120 28"><polyline points="${sparklinePath(tile.sparkline)}"/></svg>` +
    `<footer><span class="age">${age}</span>${sessionLine}${sessionButton}</footer>` +
    `</article>`
  );
}

function renderSync(state: ConsoleState): string {
  if (state.connection === "disconnected") {
    return `<section class="sync sync-disconnected">gateway disconnected</section>`;
  }
  const sync = state.sync;
  if (!sync || !sync.configured) {
    return `<section class="sync">sync not configured</section>`;
  }
  const last = sync.last_success_ms == null ? "never" : `${formatDuration(Math.max(0, state.nowMs - sync.last_success_ms))} ago`;
  return (
    `<section class="sync">` +
    `cursor ${sync.cursor ?? 0} | pending ${sync.pending ?? 0} | last success ${last}` +
    (sync.running ? ` | <em>syncing</em>` : "") +
    ` <button data-action="sync-trigger"${sync.running ? " disabled" : ""}>sync now</button>` +
    `</section>`
  );
}

export function render(state: ConsoleState): string {
  const tiles = sortedTiles(state).map((tile) => renderTile(state, tile)).join("\n");
  const active = activeAlerts(state).map(alertChip).join("");
  const acked = acknowledgedAlerts(state).map(alertChip).join("");
  const toasts = state.toasts.map((t) => `<div class="toast">${esc(t)}</div>`).join("");
  return (
    `<div class="console connection-${state.connection}">` +
    `<header class="topbar">ward console <span class="conn">${state.connection}</span></header>` +
    renderSync(state) +
    `<div class="toasts">${toasts}</div>` +
    `<section class="alerts"><h2>active</h2><ul>${active}</ul>` +
    `<h2>acknowledged</h2><ul>${acked}</ul></section>` +
    `<main class="tiles">\n${tiles}\n</main>` +
    `</div>`
  );
}
