"""HTTP and WebSocket surface of the gateway."""

from __future__ import annotations

import asyncio
import queue
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..alerts.clustering import InvalidTransition
from ..alerts.engine import AlertNotFound
from .service import GatewayService, SessionConflict, SessionNotFound, alert_to_json, sample_to_json
from .tokens import ROLE_PROVIDER, AuthToken, ExpiredToken, TokenError, verify_token


class AnnotationBody(BaseModel):
    text: str


class SessionStartBody(BaseModel):
    device_id: str


class AckBody(BaseModel):
    pass


def create_app(
    service: GatewayService,
    token_key: bytes,
    console_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="neoward gateway")

    def _verify(raw: str) -> AuthToken:
        try:
            return verify_token(raw, token_key, service.clock.now_ms())
        except ExpiredToken as exc:
            raise HTTPException(status_code=401, detail=f"expired: {exc}") from exc
        except TokenError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from exc

    def auth(authorization: str = Header(default="")) -> AuthToken:
        if not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        return _verify(authorization[len("Bearer ") :])

    def provider_only(token: AuthToken = Depends(auth)) -> AuthToken:
        if token.role != ROLE_PROVIDER:
            raise HTTPException(status_code=403, detail="provider role required")
        return token

    @app.get("/api/devices")
    def devices(token: AuthToken = Depends(auth)):
        states = service.devices()
        if token.role != ROLE_PROVIDER:
            states = [s for s in states if s.device_id == token.device_id]
        out = []
        for s in states:
            session = service.active_session_of(s.device_id)
            out.append(
                {
                    "device_id": str(s.device_id),
                    "last_seen_ms": s.last_seen_ms,
                    "category": s.category,
                    "active_session": session.to_json() if session else None,
                }
            )
        return out

    @app.get("/api/devices/{device_id}/vitals")
    def vitals(
        device_id: str,
        token: AuthToken = Depends(auth),
        from_ms: int = Query(default=0, alias="from"),
        to_ms: int = Query(default=2**62, alias="to"),
    ):
        dev = int(device_id)
        if token.role != ROLE_PROVIDER and token.device_id != dev:
            raise HTTPException(status_code=403, detail="vitals of another device")
        samples = service.store.query_vitals(dev, from_ms, to_ms)
        return [sample_to_json(s) for s in samples]

    @app.post("/api/devices/{device_id}/annotations")
    def annotate(device_id: str, body: AnnotationBody, token: AuthToken = Depends(provider_only)):
        record_id = service.add_annotation(int(device_id), body.text, token.subject)
        return {"record_id": record_id}

    @app.post("/api/sessions/start")
    def session_start(body: SessionStartBody, token: AuthToken = Depends(provider_only)):
        try:
            session = service.session_start(int(body.device_id), token.subject)
        except SessionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return session.to_json()

    @app.post("/api/sessions/{session_id}/stop")
    def session_stop(session_id: str, token: AuthToken = Depends(provider_only)):
        try:
            session = service.session_stop(session_id)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}") from exc
        except SessionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return session.to_json()

    @app.get("/api/alerts")
    def alerts(state: Optional[str] = None, token: AuthToken = Depends(provider_only)):
        return [alert_to_json(a) for a in service.alerts.alerts(state)]

    @app.post("/api/alerts/{alert_id}/ack")
    def ack(alert_id: int, token: AuthToken = Depends(provider_only)):
        try:
            # No explicit time: the engine anchors the quiet period on the
            # alert's own event timeline, which stays valid even when
            # device timestamps and the gateway clock disagree.
            alert = service.alerts.acknowledge(alert_id, token.subject)
        except AlertNotFound as exc:
            raise HTTPException(status_code=404, detail=f"unknown alert {alert_id}") from exc
        except InvalidTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return alert_to_json(alert)

    @app.get("/api/sync/status")
    def sync_status(token: AuthToken = Depends(provider_only)):
        if service.sync_controller is None:
            return {"configured": False}
        return service.sync_controller.status()

    @app.post("/api/sync/trigger")
    def sync_trigger(token: AuthToken = Depends(provider_only)):
        if service.sync_controller is None:
            raise HTTPException(status_code=409, detail="sync not configured")
        return service.sync_controller.trigger()

    @app.websocket("/ws/stream")
    async def stream(ws: WebSocket, token: str = Query(default="")):
        try:
            _verify(token)
        except HTTPException:
            await ws.close(code=4401)
            return
        await ws.accept()
        q = service.subscribe()
        try:
            while True:
                try:
                    message = q.get_nowait()
                except queue.Empty:
                    await asyncio.sleep(0.02)
                    continue
                await ws.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            service.unsubscribe(q)

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app
