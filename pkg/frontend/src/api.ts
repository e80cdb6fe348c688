// Thin typed client over the gateway REST API.

import type { AlertInfo, DeviceInfo, SessionInfo, SyncStatus } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayApi {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      ...(body !== undefined ? { body: JSON.stringify(body) } : {}),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) {
          detail = payload.detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  devices(): Promise<DeviceInfo[]> {
    return this.request("GET", "/api/devices");
  }

  alerts(state?: string): Promise<AlertInfo[]> {
    return this.request("GET", `/api/alerts${state ? `?state=${state}` : ""}`);
  }

  ackAlert(alertId: number): Promise<AlertInfo> {
    return this.request("POST", `/api/alerts/${alertId}/ack`);
  }

  startSession(deviceId: string): Promise<SessionInfo> {
    return this.request("POST", "/api/sessions/start", { device_id: deviceId });
  }

  stopSession(sessionId: string): Promise<SessionInfo> {
    return this.request("POST", `/api/sessions/${sessionId}/stop`);
  }

  syncStatus(): Promise<SyncStatus> {
    return this.request("GET", "/api/sync/status");
  }

  syncTrigger(): Promise<SyncStatus> {
    return this.request("POST", "/api/sync/trigger");
  }
}
