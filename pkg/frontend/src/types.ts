// Shapes mirroring the gateway's JSON exactly.

export interface VitalsSample {
  device_id: string;
  t_ms: number;
  hr: number; // centi-bpm
  spo2: number; // centi-percent
  rr: number; // centi-breaths/min
  temp: number; // centi-degC
  motion: number;
  flags: number;
}

export type AlertState = "raised" | "acknowledged" | "suppressed";

export interface AlertInfo {
  alert_id: number;
  device_id: string;
  vital: string;
  direction: "low" | "high";
  first_t_ms: number;
  last_t_ms: number;
  event_count: number;
  posterior: number;
  state: AlertState;
}

export interface SessionInfo {
  session_id: string;
  device_id: string;
  start_ms: number;
  end_ms: number | null;
  initiator: string;
}

export interface DeviceInfo {
  device_id: string;
  last_seen_ms: number | null;
  category: string;
  active_session: SessionInfo | null;
}

export interface SyncStatus {
  configured: boolean;
  running?: boolean;
  cursor?: number;
  last_success_ms?: number | null;
  pending?: number;
}

export type StreamMessage =
  | { type: "vitals"; sample: VitalsSample }
  | { type: "alert"; alert: AlertInfo }
  | { type: "sync"; status: SyncStatus };

// Everything the reducer consumes: stream messages plus console-local
// events (REST snapshots, clock ticks, connection and mutation phases).
export type ConsoleEvent =
  | StreamMessage
  | { type: "devices-snapshot"; devices: DeviceInfo[] }
  | { type: "alerts-snapshot"; alerts: AlertInfo[] }
  | { type: "tick"; now_ms: number }
  | { type: "connection"; status: "connected" | "reconnecting" | "disconnected" }
  | { type: "ack-pending"; alert_id: number }
  | { type: "ack-confirmed"; alert: AlertInfo }
  | { type: "ack-failed"; alert_id: number; reason: string }
  | { type: "session-pending"; device_id: string }
  | { type: "session-confirmed"; session: SessionInfo }
  | { type: "session-failed"; device_id: string; reason: string };
