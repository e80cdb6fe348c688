import { describe, expect, it } from "vitest";

import {
  SPARKLINE_POINTS,
  STALE_AFTER_MS,
  activeAlerts,
  acknowledgedAlerts,
  alertBadges,
  initialState,
  isStale,
  reduce,
  replay,
  sessionDurationMs,
  sortedTiles,
} from "../src/store.js";
import type { AlertInfo, ConsoleEvent, VitalsSample } from "../src/types.js";

function sample(deviceId: string, tMs: number, hr = 14000): VitalsSample {
  return { device_id: deviceId, t_ms: tMs, hr, spo2: 9700, rr: 4800, temp: 3680, motion: 20, flags: 0 };
}

function alert(id: number, deviceId = "1", state: AlertInfo["state"] = "raised"): AlertInfo {
  return {
    alert_id: id,
    device_id: deviceId,
    vital: "spo2",
    direction: "low",
    first_t_ms: 0,
    last_t_ms: 0,
    event_count: 1,
    posterior: 0.66,
    state,
  };
}

describe("tiles", () => {
  it("creates one tile per device", () => {
    let state = initialState();
    for (let d = 1; d <= 20; d++) {
      state = reduce(state, { type: "vitals", sample: sample(String(d), 1000) });
    }
    expect(sortedTiles(state)).toHaveLength(20);
    expect(sortedTiles(state).map((t) => t.deviceId)).toEqual(
      Array.from({ length: 20 }, (_, i) => String(i + 1)),
    );
  });

  it("keeps the latest sample and stamps receipt time", () => {
    let state = reduce(initialState(), { type: "tick", now_ms: 5000 });
    state = reduce(state, { type: "vitals", sample: sample("1", 1000) });
    state = reduce(state, { type: "vitals", sample: sample("1", 2000, 15000) });
    const tile = state.tiles["1"];
    expect(tile.latest?.hr).toBe(15000);
    expect(tile.receivedMs).toBe(5000);
  });

  it("caps the sparkline ring at 300 points", () => {
    let state = initialState();
    for (let t = 0; t < 350; t++) {
      state = reduce(state, { type: "vitals", sample: sample("1", t * 1000, 14000 + t) });
    }
    const ring = state.tiles["1"].sparkline;
    expect(ring).toHaveLength(SPARKLINE_POINTS);
    expect(ring[0].hr).toBe(14000 + 50); // oldest 50 dropped
    expect(ring[ring.length - 1].hr).toBe(14000 + 349);
  });

  it("flags tiles stale after 10 s of silence", () => {
    let state = reduce(initialState(), { type: "tick", now_ms: 0 });
    state = reduce(state, { type: "vitals", sample: sample("1", 0) });
    state = reduce(state, { type: "tick", now_ms: STALE_AFTER_MS });
    expect(isStale(state.tiles["1"], state.nowMs)).toBe(false);
    state = reduce(state, { type: "tick", now_ms: STALE_AFTER_MS + 1 });
    expect(isStale(state.tiles["1"], state.nowMs)).toBe(true);
  });

  it("is a pure function of the log", () => {
    const log: ConsoleEvent[] = [
      { type: "tick", now_ms: 1000 },
      { type: "vitals", sample: sample("1", 0) },
      { type: "alert", alert: alert(1) },
      { type: "tick", now_ms: 2000 },
    ];
    expect(replay(log)).toEqual(replay(log));
  });
});

describe("alerts", () => {
  it("raised alerts badge their device tile", () => {
    let state = reduce(initialState(), { type: "vitals", sample: sample("1", 0) });
    state = reduce(state, { type: "alert", alert: alert(1, "1") });
    expect(alertBadges(state, "1")).toHaveLength(1);
    expect(alertBadges(state, "2")).toHaveLength(0);
  });

  it("optimistic ack moves the alert out of the active pane", () => {
    let state = reduce(initialState(), { type: "alert", alert: alert(1) });
    expect(activeAlerts(state)).toHaveLength(1);
    state = reduce(state, { type: "ack-pending", alert_id: 1 });
    expect(activeAlerts(state)).toHaveLength(0);
    expect(acknowledgedAlerts(state)).toHaveLength(1);
  });

  it("confirmed ack reconciles with the server copy", () => {
    let state = reduce(initialState(), { type: "alert", alert: alert(1) });
    state = reduce(state, { type: "ack-pending", alert_id: 1 });
    state = reduce(state, { type: "ack-confirmed", alert: alert(1, "1", "acknowledged") });
    expect(state.pendingAcks).toHaveLength(0);
    expect(acknowledgedAlerts(state)).toHaveLength(1);
    expect(activeAlerts(state)).toHaveLength(0);
  });

  it("failed ack rolls back and raises a toast", () => {
    let state = reduce(initialState(), { type: "alert", alert: alert(1) });
    state = reduce(state, { type: "ack-pending", alert_id: 1 });
    state = reduce(state, { type: "ack-failed", alert_id: 1, reason: "409: conflict" });
    expect(activeAlerts(state)).toHaveLength(1);
    expect(state.toasts.some((t) => t.includes("409"))).toBe(true);
  });

  it("does not re-badge when an acknowledged alert updates in place", () => {
    // Within the gateway quiet period, repeats fold into the acknowledged
    // alert; the console sees at most an updated copy with the same id.
    let state = reduce(initialState(), { type: "alert", alert: alert(1) });
    state = reduce(state, { type: "ack-confirmed", alert: alert(1, "1", "acknowledged") });
    const updated = { ...alert(1, "1", "acknowledged"), event_count: 3 };
    state = reduce(state, { type: "alert", alert: updated });
    expect(activeAlerts(state)).toHaveLength(0);
    expect(alertBadges(state, "1")).toHaveLength(0);
    expect(acknowledgedAlerts(state)[0].event_count).toBe(3);
  });
});

describe("sessions", () => {
  const session = (endMs: number | null) => ({
    session_id: "s-1-3",
    device_id: "3",
    start_ms: 1_000_000,
    end_ms: endMs,
    initiator: "nurse",
  });

  it("running session duration tracks the clock", () => {
    let state = reduce(initialState(), { type: "session-confirmed", session: session(null) });
    state = reduce(state, { type: "tick", now_ms: 1_000_000 + 90_000 });
    expect(sessionDurationMs(state.tiles["3"], state.nowMs)).toBe(90_000);
  });

  it("stopped session shows its final duration", () => {
    let state = reduce(initialState(), { type: "session-confirmed", session: session(null) });
    state = reduce(state, { type: "session-confirmed", session: session(1_000_000 + 600_000) });
    state = reduce(state, { type: "tick", now_ms: 99_999_999 });
    expect(sessionDurationMs(state.tiles["3"], state.nowMs)).toBe(600_000);
  });

  it("conflict rolls back the pending flag with a toast", () => {
    let state = reduce(initialState(), { type: "session-pending", device_id: "3" });
    expect(state.tiles["3"].sessionPending).toBe(true);
    state = reduce(state, { type: "session-failed", device_id: "3", reason: "409: already active" });
    expect(state.tiles["3"].sessionPending).toBe(false);
    expect(state.toasts).toHaveLength(1);
  });
});

describe("sync panel", () => {
  it("tracks the latest status", () => {
    let state = reduce(initialState(), {
      type: "sync",
      status: { configured: true, cursor: 12, pending: 3 },
    });
    expect(state.sync?.pending).toBe(3);
    state = reduce(state, { type: "sync", status: { configured: true, cursor: 15, pending: 0 } });
    expect(state.sync?.cursor).toBe(15);
  });

  it("reflects connection loss", () => {
    const state = reduce(initialState(), { type: "connection", status: "disconnected" });
    expect(state.connection).toBe("disconnected");
  });
});
