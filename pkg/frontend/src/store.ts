// Console state as a pure fold over the event log.  No IO in here: the
// same log always produces the same state, which is what the replay
// snapshot tests rely on.

import type {
  AlertInfo,
  ConsoleEvent,
  DeviceInfo,
  SessionInfo,
  SyncStatus,
  VitalsSample,
} from "./types.js";

export const SPARKLINE_POINTS = 300;
export const STALE_AFTER_MS = 10_000;
export const MAX_TOASTS = 5;

export interface SparkPoint {
  t_ms: number;
  hr: number;
  spo2: number;
}

export interface TileState {
  deviceId: string;
  category: string;
  latest: VitalsSample | null;
  receivedMs: number | null; // console clock at last sample
  sparkline: SparkPoint[];
  session: SessionInfo | null; // active or most recently closed
  sessionPending: boolean;
}

export type ConnectionStatus = "connected" | "reconnecting" | "disconnected";

export interface ConsoleState {
  nowMs: number;
  connection: ConnectionStatus;
  tiles: Record<string, TileState>;
  alerts: Record<number, AlertInfo>;
  pendingAcks: number[];
  sync: SyncStatus | null;
  toasts: string[];
}

export function initialState(): ConsoleState {
  return {
    nowMs: 0,
    connection: "disconnected",
    tiles: {},
    alerts: {},
    pendingAcks: [],
    sync: null,
    toasts: [],
  };
}

function emptyTile(deviceId: string): TileState {
  return {
    deviceId,
    category: "term",
    latest: null,
    receivedMs: null,
    sparkline: [],
    session: null,
    sessionPending: false,
  };
}

function withTile(
  state: ConsoleState,
  deviceId: string,
  update: (tile: TileState) => TileState,
): ConsoleState {
  const tile = state.tiles[deviceId] ?? emptyTile(deviceId);
  return { ...state, tiles: { ...state.tiles, [deviceId]: update(tile) } };
}

function pushToast(state: ConsoleState, message: string): ConsoleState {
  return { ...state, toasts: [...state.toasts, message].slice(-MAX_TOASTS) };
}

function applyDeviceSnapshot(state: ConsoleState, devices: DeviceInfo[]): ConsoleState {
  let next = state;
  for (const device of devices) {
    next = withTile(next, device.device_id, (tile) => ({
      ...tile,
      category: device.category,
      session: device.active_session ?? tile.session,
    }));
  }
  return next;
}

export function reduce(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.type) {
    case "tick":
      return { ...state, nowMs: event.now_ms };

    case "connection":
      return { ...state, connection: event.status };

    case "devices-snapshot":
      return applyDeviceSnapshot(state, event.devices);

    case "alerts-snapshot": {
      const alerts = { ...state.alerts };
      for (const alert of event.alerts) {
        alerts[alert.alert_id] = alert;
      }
      return { ...state, alerts };
    }

    case "vitals": {
      const sample = event.sample;
      return withTile(state, sample.device_id, (tile) => ({
        ...tile,
        latest: sample,
        receivedMs: state.nowMs,
        sparkline: [
          ...tile.sparkline,
          { t_ms: sample.t_ms, hr: sample.hr, spo2: sample.spo2 },
        ].slice(-SPARKLINE_POINTS),
      }));
    }

    case "alert":
      return { ...state, alerts: { ...state.alerts, [event.alert.alert_id]: event.alert } };

    case "sync":
      return { ...state, sync: event.status };

    case "ack-pending":
      return state.pendingAcks.includes(event.alert_id)
        ? state
        : { ...state, pendingAcks: [...state.pendingAcks, event.alert_id] };

    case "ack-confirmed":
      return {
        ...state,
        alerts: { ...state.alerts, [event.alert.alert_id]: event.alert },
        pendingAcks: state.pendingAcks.filter((id) => id !== event.alert.alert_id),
      };

    case "ack-failed":
      return pushToast(
        { ...state, pendingAcks: state.pendingAcks.filter((id) => id !== event.alert_id) },
        `ack failed: ${event.reason}`,
      );

    case "session-pending":
      return withTile(state, event.device_id, (tile) => ({ ...tile, sessionPending: true }));

    case "session-confirmed":
      return withTile(state, event.session.device_id, (tile) => ({
        ...tile,
        session: event.session,
        sessionPending: false,
      }));

    case "session-failed":
      return pushToast(
        withTile(state, event.device_id, (tile) => ({ ...tile, sessionPending: false })),
        `session change rejected: ${event.reason}`,
      );
  }
}

export function replay(events: ConsoleEvent[], start?: ConsoleState): ConsoleState {
  return events.reduce(reduce, start ?? initialState());
}

// -- selectors ---------------------------------------------------------------

export function isStale(tile: TileState, nowMs: number): boolean {
  return tile.receivedMs !== null && nowMs - tile.receivedMs > STALE_AFTER_MS;
}

// Optimistically acknowledged alerts leave the active pane immediately;
// a failed ack puts them back by clearing the pending mark.
export function activeAlerts(state: ConsoleState): AlertInfo[] {
  return Object.values(state.alerts)
    .filter((a) => a.state === "raised" && !state.pendingAcks.includes(a.alert_id))
    .sort((a, b) => a.alert_id - b.alert_id);
}

export function acknowledgedAlerts(state: ConsoleState): AlertInfo[] {
  return Object.values(state.alerts)
    .filter(
      (a) =>
        a.state === "acknowledged" ||
        (a.state === "raised" && state.pendingAcks.includes(a.alert_id)),
    )
    .sort((a, b) => a.alert_id - b.alert_id);
}

export function alertBadges(state: ConsoleState, deviceId: string): AlertInfo[] {
  return activeAlerts(state).filter((a) => a.device_id === deviceId);
}

export function sessionDurationMs(tile: TileState, nowMs: number): number | null {
  if (!tile.session) {
    return null;
  }
  const end = tile.session.end_ms ?? nowMs;
  return Math.max(0, end - tile.session.start_ms);
}

export function sortedTiles(state: ConsoleState): TileState[] {
  return Object.values(state.tiles).sort((a, b) => {
    const na = Number(a.deviceId);
    const nb = Number(b.deviceId);
    return Number.isNaN(na) || Number.isNaN(nb) ? a.deviceId.localeCompare(b.deviceId) : na - nb;
  });
}
