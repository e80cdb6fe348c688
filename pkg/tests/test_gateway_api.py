import json

import pytest
from fastapi.testclient import TestClient

from neoward.alerts import AlertEngine
from neoward.clock import SimClock
from neoward.gateway import GatewayService, Store, create_app, sign_token
from neoward.transport import FrameReceiver, FrameSender

from conftest import make_sample

TOKEN_KEY = b"t" * 32
DEVICE_KEYS = {d: bytes([d]) * 32 for d in range(1, 25)}


@pytest.fixture
def harness(tmp_path, store_key):
    clock = SimClock(start_ms=1_000_000)
    store = Store(tmp_path / "store", store_key)
    service = GatewayService(store, FrameReceiver(DEVICE_KEYS), AlertEngine(), clock=clock)
    app = create_app(service, TOKEN_KEY)
    client = TestClient(app)
    provider = sign_token(TOKEN_KEY, "nurse", "provider", clock.now_ms() + 3_600_000)
    parent = sign_token(TOKEN_KEY, "mom", "parent", clock.now_ms() + 3_600_000, device_id=1)
    return client, service, clock, provider, parent


def bearer(token):
    return {"Authorization": f"Bearer {token}"}


def ingest_sample(service, device_id=1, t_ms=0, **kwargs):
    sender = FrameSender(DEVICE_KEYS[device_id], device_id)
    service.ingest(sender.send_batch([make_sample(device_id=device_id, t_ms=t_ms, **kwargs)]))
    return sender


class TestAuth:
    def test_missing_token(self, harness):
        client, *_ = harness
        assert client.get("/api/devices").status_code == 401

    def test_expired_token(self, harness):
        client, service, clock, *_ = harness
        stale = sign_token(TOKEN_KEY, "nurse", "provider", clock.now_ms() - 1)
        assert client.get("/api/devices", headers=bearer(stale)).status_code == 401

    def test_tampered_token(self, harness):
        client, _, clock, provider, _ = harness
        assert client.get("/api/devices", headers=bearer(provider[:-2] + "zz")).status_code == 401

    def test_parent_cannot_post(self, harness):
        client, service, _, _, parent = harness
        response = client.post(
            "/api/devices/1/annotations", json={"text": "hi"}, headers=bearer(parent)
        )
        assert response.status_code == 403


class TestVitalsApi:
    def test_vitals_window(self, harness):
        client, service, _, provider, _ = harness
        sender = FrameSender(DEVICE_KEYS[1], 1)
        samples = [make_sample(device_id=1, t_ms=t * 1000) for t in range(5)]
        service.ingest(sender.send_batch(samples))
        response = client.get(
            "/api/devices/1/vitals", params={"from": 1000, "to": 3000}, headers=bearer(provider)
        )
        assert response.status_code == 200
        assert [s["t_ms"] for s in response.json()] == [1000, 2000, 3000]

    def test_parent_sees_own_device_only(self, harness):
        client, service, _, _, parent = harness
        ingest_sample(service, 1)
        ingest_sample(service, 2)
        assert client.get("/api/devices/1/vitals", headers=bearer(parent)).status_code == 200
        assert client.get("/api/devices/2/vitals", headers=bearer(parent)).status_code == 403
        devices = client.get("/api/devices", headers=bearer(parent)).json()
        assert [d["device_id"] for d in devices] == ["1"]

    def test_devices_listing(self, harness):
        client, service, _, provider, _ = harness
        ingest_sample(service, 1)
        ingest_sample(service, 2)
        devices = client.get("/api/devices", headers=bearer(provider)).json()
        assert [d["device_id"] for d in devices] == ["1", "2"]


class TestSessionsApi:
    def test_start_stop_roundtrip(self, harness):
        client, service, clock, provider, _ = harness
        started = client.post(
            "/api/sessions/start", json={"device_id": "3"}, headers=bearer(provider)
        )
        assert started.status_code == 200
        session_id = started.json()["session_id"]
        clock.advance(600_000)
        stopped = client.post(f"/api/sessions/{session_id}/stop", headers=bearer(provider))
        assert stopped.json()["end_ms"] - stopped.json()["start_ms"] == 600_000

    def test_double_start_409(self, harness):
        client, _, _, provider, _ = harness
        client.post("/api/sessions/start", json={"device_id": "3"}, headers=bearer(provider))
        second = client.post("/api/sessions/start", json={"device_id": "3"}, headers=bearer(provider))
        assert second.status_code == 409

    def test_stop_unknown_404(self, harness):
        client, _, _, provider, _ = harness
        assert client.post("/api/sessions/zzz/stop", headers=bearer(provider)).status_code == 404


class TestAlertsApi:
    def test_alert_lifecycle(self, harness):
        client, service, _, provider, _ = harness
        ingest_sample(service, 1, spo2=8500)
        alerts = client.get("/api/alerts", params={"state": "raised"}, headers=bearer(provider)).json()
        assert len(alerts) == 1
        alert_id = alerts[0]["alert_id"]
        acked = client.post(f"/api/alerts/{alert_id}/ack", headers=bearer(provider))
        assert acked.json()["state"] == "acknowledged"
        assert client.get("/api/alerts", params={"state": "raised"}, headers=bearer(provider)).json() == []

    def test_ack_unknown_404(self, harness):
        client, _, _, provider, _ = harness
        assert client.post("/api/alerts/12345/ack", headers=bearer(provider)).status_code == 404


class TestAnnotationsApi:
    def test_post_annotation(self, harness):
        client, service, _, provider, _ = harness
        response = client.post(
            "/api/devices/4/annotations", json={"text": "fed 30ml"}, headers=bearer(provider)
        )
        assert response.status_code == 200
        record_id = response.json()["record_id"]
        record = service.store.get("annotation", 4, record_id)
        assert json.loads(record.payload)["text"] == "fed 30ml"


class TestSyncApi:
    def test_unconfigured_status(self, harness):
        client, _, _, provider, _ = harness
        assert client.get("/api/sync/status", headers=bearer(provider)).json() == {"configured": False}
        assert client.post("/api/sync/trigger", headers=bearer(provider)).status_code == 409


class TestWebSocket:
    def test_stream_delivers_vitals_and_alerts(self, harness):
        client, service, _, provider, _ = harness
        with client.websocket_connect(f"/ws/stream?token={provider}") as ws:
            ingest_sample(service, 1, spo2=8500)
            kinds = set()
            for _ in range(2):
                message = ws.receive_json()
                kinds.add(message["type"])
            assert kinds == {"vitals", "alert"}

    def test_stream_rejects_bad_token(self, harness):
        client, *_ = harness
        with pytest.raises(Exception):
            with client.websocket_connect("/ws/stream?token=bogus") as ws:
                ws.receive_json()
