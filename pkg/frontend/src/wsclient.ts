// Reconnecting stream consumer with the transport backoff schedule.
// Socket and timer factories are injectable so tests can drive it.

import { nextBackoffMs } from "./backoff.js";
import type { StreamMessage } from "./types.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;
export type Scheduler = (fn: () => void, delayMs: number) => void;

export class ReconnectingStream {
  private attempt = 0;
  private stopped = false;
  private socket: SocketLike | null = null;

  constructor(
    private readonly url: string,
    private readonly onEvent: (message: StreamMessage) => void,
    private readonly onStatus: (status: "connected" | "reconnecting" | "disconnected") => void,
    private readonly factory: SocketFactory,
    private readonly scheduler: Scheduler = (fn, ms) => void setTimeout(fn, ms),
  ) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
    this.onStatus("disconnected");
  }

  private connect(): void {
    if (this.stopped) {
      return;
    }
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.onStatus("connected");
    };
    socket.onmessage = (event) => {
      let parsed: StreamMessage;
      try {
        parsed = JSON.parse(event.data) as StreamMessage;
      } catch {
        return; // tolerate malformed frames, the stream carries on
      }
      this.onEvent(parsed);
    };
    socket.onclose = () => {
      if (this.stopped) {
        return;
      }
      this.onStatus("reconnecting");
      const delay = nextBackoffMs(this.attempt);
      this.attempt += 1;
      this.scheduler(() => this.connect(), delay);
    };
  }
}
