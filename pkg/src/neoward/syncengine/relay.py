"""Impaired TCP relay: wraps any client/server pair on the wire.

Latency applies per forwarded chunk; loss is connection-level (a doomed
connection is accepted and then aborted), since dropping individual TCP
segments is not expressible at socket level.  Deterministic per seed.
"""

from __future__ import annotations

import socket
import threading

import numpy as np


def run_relay(
    listen_addr: tuple,
    target_addr: tuple,
    latency_lo_ms: float = 50.0,
    latency_hi_ms: float = 2000.0,
    loss: float = 0.0,
    seed: int = 0,
    stop_event: threading.Event | None = None,
) -> None:
    rng = np.random.default_rng(seed)
    rng_lock = threading.Lock()
    stop = stop_event or threading.Event()
    srv = socket.create_server(listen_addr)
    srv.settimeout(0.2)
    print(f"netsim: {listen_addr} -> {target_addr} latency {latency_lo_ms}..{latency_hi_ms} ms loss {loss}")

    def draw():
        with rng_lock:
            return float(rng.uniform(latency_lo_ms, latency_hi_ms)), float(rng.random()) < loss

    def pump(src: socket.socket, dst: socket.socket, delay_ms: float):
        try:
            while True:
                chunk = src.recv(65536)
                if not chunk:
                    break
                if delay_ms > 0:
                    stop.wait(delay_ms / 1000.0)
                dst.sendall(chunk)
        except OSError:
            pass
        finally:
            for s in (src, dst):
                try:
                    s.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass

    def handle(conn: socket.socket):
        delay_ms, doomed = draw()
        if doomed:
            conn.close()
            return
        try:
            upstream = socket.create_connection(target_addr)
        except OSError:
            conn.close()
            return
        threading.Thread(target=pump, args=(conn, upstream, delay_ms), daemon=True).start()
        threading.Thread(target=pump, args=(upstream, conn, delay_ms), daemon=True).start()

    try:
        while not stop.is_set():
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            handle(conn)
    except KeyboardInterrupt:
        pass
    finally:
        srv.close()
