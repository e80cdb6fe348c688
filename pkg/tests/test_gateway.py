import json
import threading

import pytest

from neoward.alerts import AlertEngine
from neoward.clock import SimClock
from neoward.gateway import (
    ACCEPTED,
    KIND_ANNOTATION,
    KIND_DEVICE_META,
    KIND_VITAL,
    RingBuffer,
    SessionConflict,
    SessionNotFound,
    GatewayService,
    Store,
    StoreError,
    UnknownCursorError,
    pack_vital,
    sign_token,
    verify_token,
)
from neoward.gateway.tokens import BadSignature, ExpiredToken, MalformedToken
from neoward.transport import TYPE_STATIC, FrameReceiver, FrameSender
from neoward.vitalsim import builtin_scenario, run_device

from conftest import make_sample

KEY = bytes(range(32))
DEVICE_KEYS = {d: bytes([d]) * 32 for d in range(1, 32)}


def make_service(tmp_path, store_key, clock=None, **kwargs):
    store = Store(tmp_path / "store", store_key)
    service = GatewayService(
        store,
        FrameReceiver(DEVICE_KEYS),
        AlertEngine(),
        clock=clock or SimClock(),
        **kwargs,
    )
    return service, store


class TestRingBuffer:
    def test_push_pop(self):
        ring = RingBuffer(4)
        assert ring.push("a") == ACCEPTED
        assert ring.pop() == "a"
        assert ring.pop() is None

    def test_overwrite_oldest(self):
        ring = RingBuffer(4)
        for i in range(5):
            ring.push(i)
        assert ring.dropped_count == 1
        assert [ring.pop() for _ in range(4)] == [1, 2, 3, 4]

    def test_capacity_must_be_power_of_two(self):
        with pytest.raises(ValueError):
            RingBuffer(3)

    def test_spsc_stress_consumer_sees_subsequence(self):
        # Linearizability against the sequential oracle: the consumer's view
        # must be a strictly increasing subsequence of what was produced,
        # and drops must account exactly for the difference.
        ring = RingBuffer(1024)
        total = 1_000_000
        consumed = []
        done = threading.Event()

        def producer():
            for i in range(total):
                ring.push(i)
            done.set()

        def consumer():
            while True:
                item = ring.pop()
                if item is not None:
                    consumed.append(item)
                elif done.is_set() and len(ring) == 0:
                    return

        threads = [threading.Thread(target=producer), threading.Thread(target=consumer)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=120)
        assert all(b > a for a, b in zip(consumed, consumed[1:]))
        assert len(consumed) + ring.dropped_count == total


class TestStore:
    def test_append_and_get(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        record = store.append(KIND_ANNOTATION, 1, "a-1", 1000, b"note")
        assert record.version == 1 and record.cursor == 1
        assert store.get(KIND_ANNOTATION, 1, "a-1").payload == b"note"

    def test_version_increments_on_mutation(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        store.append(KIND_ANNOTATION, 1, "a-1", 1000, b"v1")
        record = store.append(KIND_ANNOTATION, 1, "a-1", 2000, b"v2")
        assert record.version == 2
        assert store.get(KIND_ANNOTATION, 1, "a-1").payload == b"v2"

    def test_query_vitals_window(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        for t in (1000, 2000, 3000):
            store.append(KIND_VITAL, 5, str(t), t, pack_vital(make_sample(device_id=5, t_ms=t)))
        assert [s.t_ms for s in store.query_vitals(5, 1500, 5000)] == [2000, 3000]
        assert store.query_vitals(5, 4000, 9000) == []
        assert store.query_vitals(404, 0, 10**9) == []  # unknown device: empty

    def test_reopen_preserves_everything(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        for t in range(50):
            store.append(KIND_VITAL, 2, str(t), t, pack_vital(make_sample(device_id=2, t_ms=t)))
        store.append(KIND_ANNOTATION, 2, "note", 99, b"hello")
        digest = store.digest()
        store.close()
        reopened = Store(tmp_path, store_key)
        assert reopened.digest() == digest
        assert reopened.max_cursor == 51

    def test_crash_truncates_torn_tail(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        for t in range(20):
            store.append(KIND_VITAL, 2, str(t), t, pack_vital(make_sample(device_id=2, t_ms=t)))
        store.flush()
        store.close()
        log = tmp_path / "vital.log"
        blob = log.read_bytes()
        log.write_bytes(blob[: len(blob) - 7])  # torn mid-record
        reopened = Store(tmp_path, store_key)
        records = reopened.records(KIND_VITAL)
        assert len(records) == 19  # only the torn final record lost
        # the store remains appendable after truncation
        reopened.append(KIND_VITAL, 2, "99", 99_000, pack_vital(make_sample(device_id=2, t_ms=99_000)))
        reopened.flush()
        reopened.close()
        assert len(Store(tmp_path, store_key).records(KIND_VITAL)) == 20

    def test_at_rest_confidentiality(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        sentinel = b"\xde\xad\xbe\xef-sentinel-annotation-payload"
        store.append(KIND_ANNOTATION, 9, "s", 1, sentinel)
        sample = make_sample(device_id=9, t_ms=123456789, hr=12345, spo2=6789)
        store.append(KIND_VITAL, 9, "v", sample.t_ms, pack_vital(sample))
        store.flush()
        for log in tmp_path.glob("*.log"):
            raw = log.read_bytes()
            assert sentinel not in raw
            assert pack_vital(sample) not in raw

    def test_records_after_latest_only(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        store.append(KIND_ANNOTATION, 1, "x", 1, b"v1")
        cursor = store.max_cursor
        store.append(KIND_ANNOTATION, 1, "x", 2, b"v2")
        store.append(KIND_ANNOTATION, 1, "y", 3, b"w1")
        deltas = store.records_after(cursor)
        assert [(r.record_id, r.version) for r in deltas] == [("x", 2), ("y", 1)]

    def test_unknown_cursor(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        with pytest.raises(UnknownCursorError):
            store.records_after(99)

    def test_bad_key_length(self, tmp_path):
        with pytest.raises(StoreError):
            Store(tmp_path, b"short")

    def test_compact_vitals(self, tmp_path, store_key):
        store = Store(tmp_path, store_key)
        for t in range(10):
            store.append(KIND_VITAL, 3, str(t * 1000), t * 1000, pack_vital(make_sample(device_id=3, t_ms=t * 1000)))
        store.append(KIND_ANNOTATION, 3, "keep", 0, b"x")
        dropped = store.compact_vitals(cutoff_ms=5000)
        assert dropped == 5
        store.close()
        reopened = Store(tmp_path, store_key)
        assert len(reopened.records(KIND_VITAL)) == 5
        assert reopened.get(KIND_ANNOTATION, 3, "keep") is not None


class TestTokens:
    def test_roundtrip(self):
        token = sign_token(KEY, "nurse", "provider", 10_000)
        auth = verify_token(token, KEY, 5_000)
        assert auth.subject == "nurse" and auth.role == "provider"

    def test_expired(self):
        token = sign_token(KEY, "nurse", "provider", 10_000)
        with pytest.raises(ExpiredToken):
            verify_token(token, KEY, 10_000)

    def test_flipped_signature_bit(self):
        token = sign_token(KEY, "nurse", "provider", 10_000)
        head, body, mac = token.split(".")
        flipped = chr(ord(mac[0]) ^ 1) + mac[1:]
        with pytest.raises(BadSignature):
            verify_token(f"{head}.{body}.{flipped}", KEY, 0)

    def test_tampered_claims(self):
        token = sign_token(KEY, "parent1", "parent", 10_000, device_id=7)
        head, body, mac = token.split(".")
        import base64

        claims = json.loads(base64.urlsafe_b64decode(body + "=" * (-len(body) % 4)))
        claims["role"] = "provider"
        forged = base64.urlsafe_b64encode(json.dumps(claims).encode()).rstrip(b"=").decode()
        with pytest.raises(BadSignature):
            verify_token(f"{head}.{forged}.{mac}", KEY, 0)

    def test_malformed(self):
        with pytest.raises(MalformedToken):
            verify_token("only.two", KEY, 0)

    def test_parent_device_scope(self):
        token = sign_token(KEY, "mom", "parent", 10_000, device_id=42)
        assert verify_token(token, KEY, 0).device_id == 42


class TestServiceIngestion:
    def test_valid_batch_returns_count_and_persists(self, tmp_path, store_key):
        service, store = make_service(tmp_path, store_key)
        sender = FrameSender(DEVICE_KEYS[1], 1)
        samples = [make_sample(device_id=1, t_ms=t * 1000) for t in range(5)]
        assert service.ingest(sender.send_batch(samples)) == 5
        assert len(store.query_vitals(1, 0, 10**9)) == 5

    def test_garbage_frame_rejected_metric(self, tmp_path, store_key):
        service, store = make_service(tmp_path, store_key)
        assert service.ingest(b"garbage") == 0
        assert service.metrics.rejects == 1
        assert store.latest() == []

    def test_static_frame_batched_until_flush(self, tmp_path, store_key):
        clock = SimClock()
        service, store = make_service(tmp_path, store_key, clock=clock, batch_flush_s=60.0)
        sender = FrameSender(DEVICE_KEYS[2], 2)
        frame = sender.send_payload(json.dumps({"birth_weight_g": 1800}).encode(), TYPE_STATIC)
        assert service.ingest(frame) == 0
        assert store.get(KIND_DEVICE_META, 2, "static-features") is None
        clock.advance(60_001)
        sender2 = FrameSender(DEVICE_KEYS[3], 3)
        samples = [make_sample(device_id=3)]
        service.ingest(sender2.send_batch(samples))  # any traffic past deadline flushes
        assert store.get(KIND_DEVICE_META, 2, "static-features") is not None

    def test_twenty_devices_exact_count(self, tmp_path, store_key):
        service, store = make_service(tmp_path, store_key)
        duration = 30
        for device in range(1, 21):
            sender = FrameSender(DEVICE_KEYS[device], device)
            run_device(
                builtin_scenario("stable", duration, seed=device),
                lambda b, s=sender: service.ingest(s.send_batch(b)),
                device,
                update_interval_s=1,
            )
        assert service.metrics.samples == 20 * duration
        assert service.ring.dropped_count == 0

    def test_replayed_frame_rejected(self, tmp_path, store_key):
        service, store = make_service(tmp_path, store_key)
        sender = FrameSender(DEVICE_KEYS[1], 1)
        frame = sender.send_batch([make_sample(device_id=1)])
        assert service.ingest(frame) == 1
        assert service.ingest(frame) == 0
        assert service.metrics.rejects == 1

    def test_alert_fanout(self, tmp_path, store_key):
        service, _ = make_service(tmp_path, store_key)
        q = service.subscribe()
        sender = FrameSender(DEVICE_KEYS[1], 1)
        service.ingest(sender.send_batch([make_sample(device_id=1, spo2=8500)]))
        messages = []
        while not q.empty():
            messages.append(q.get_nowait())
        assert {m["type"] for m in messages} == {"vitals", "alert"}


class TestSessions:
    def test_start_stop_duration(self, tmp_path, store_key):
        clock = SimClock()
        service, _ = make_service(tmp_path, store_key, clock=clock)
        session = service.session_start(1, "nurse")
        clock.advance(3_600_000)
        stopped = service.session_stop(session.session_id)
        assert stopped.end_ms - stopped.start_ms == 3_600_000

    def test_double_start_conflict(self, tmp_path, store_key):
        service, _ = make_service(tmp_path, store_key)
        service.session_start(1, "nurse")
        with pytest.raises(SessionConflict):
            service.session_start(1, "other")

    def test_stop_unknown(self, tmp_path, store_key):
        service, _ = make_service(tmp_path, store_key)
        with pytest.raises(SessionNotFound):
            service.session_stop("nope")

    def test_stop_then_sessions_shows_one_closed(self, tmp_path, store_key):
        clock = SimClock()
        service, store = make_service(tmp_path, store_key, clock=clock)
        session = service.session_start(1, "nurse")
        clock.advance(1000)
        service.session_stop(session.session_id)
        sessions = service.sessions()
        assert len(sessions) == 1 and sessions[0].end_ms is not None
        # persisted with a version bump
        record = store.get("session", 1, session.session_id)
        assert record.version == 2

    def test_sessions_recovered_on_restart(self, tmp_path, store_key):
        clock = SimClock()
        service, store = make_service(tmp_path, store_key, clock=clock)
        session = service.session_start(7, "nurse")
        store.flush()
        service2 = GatewayService(store, FrameReceiver(DEVICE_KEYS), AlertEngine(), clock=clock)
        with pytest.raises(SessionConflict):
            service2.session_start(7, "someone")
        service2.session_stop(session.session_id)
