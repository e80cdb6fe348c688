// Binds the pure store to the API: optimistic mutations dispatched as
// pending events, reconciled (or rolled back) when the server answers.
// All server mutations run through a single promise chain, so they hit
// the gateway strictly in user order.

import { ApiError, GatewayApi } from "./api.js";
import { initialState, reduce, type ConsoleState } from "./store.js";
import type { ConsoleEvent } from "./types.js";

export class ConsoleController {
  private state: ConsoleState = initialState();
  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: GatewayApi,
    private readonly onChange: (state: ConsoleState) => void = () => {},
  ) {}

  current(): ConsoleState {
    return this.state;
  }

  dispatch(event: ConsoleEvent): ConsoleState {
    this.state = reduce(this.state, event);
    this.onChange(this.state);
    return this.state;
  }

  private enqueue(work: () => Promise<void>): Promise<void> {
    this.queue = this.queue.then(work, work);
    return this.queue;
  }

  async loadSnapshots(): Promise<void> {
    const [devices, alerts, sync] = await Promise.all([
      this.api.devices(),
      this.api.alerts(),
      this.api.syncStatus(),
    ]);
    this.dispatch({ type: "devices-snapshot", devices });
    this.dispatch({ type: "alerts-snapshot", alerts });
    this.dispatch({ type: "sync", status: sync });
  }

  ackAlert(alertId: number): Promise<void> {
    this.dispatch({ type: "ack-pending", alert_id: alertId });
    return this.enqueue(async () => {
      try {
        const alert = await this.api.ackAlert(alertId);
        this.dispatch({ type: "ack-confirmed", alert });
      } catch (error) {
        this.dispatch({ type: "ack-failed", alert_id: alertId, reason: describe(error) });
      }
    });
  }

  startSession(deviceId: string): Promise<void> {
    this.dispatch({ type: "session-pending", device_id: deviceId });
    return this.enqueue(async () => {
      try {
        const session = await this.api.startSession(deviceId);
        this.dispatch({ type: "session-confirmed", session });
      } catch (error) {
        this.dispatch({ type: "session-failed", device_id: deviceId, reason: describe(error) });
      }
    });
  }

  stopSession(deviceId: string, sessionId: string): Promise<void> {
    this.dispatch({ type: "session-pending", device_id: deviceId });
    return this.enqueue(async () => {
      try {
        const session = await this.api.stopSession(sessionId);
        this.dispatch({ type: "session-confirmed", session });
      } catch (error) {
        this.dispatch({ type: "session-failed", device_id: deviceId, reason: describe(error) });
      }
    });
  }

  triggerSync(): Promise<void> {
    return this.enqueue(async () => {
      try {
        const status = await this.api.syncTrigger();
        this.dispatch({ type: "sync", status: { ...status, configured: true } });
      } catch {
        // status endpoint keeps polling; a failed trigger is not fatal
      }
    });
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.status}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}
