"""HTTP/WebSocket service around the room state machine.

The transport owns three jobs and nothing else: move bytes, serialize
each room's events into one total order (an asyncio lock per room), and
host scene bytes plus static viewer assets. All protocol semantics live
in the pure machine in ``session``.

Scene rebuilds triggered by mapping changes run off the event path in a
worker thread, at most one in flight per room; newer mappings queue
latest-wins. Navigator viewpoint fan-out is rate limited per room,
keeping only the newest pending viewpoint.
"""

from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .catalog import Catalog
from .index import build_index, decimate
from .links import LinkTemplate, resolve_link
from .mapping import ChannelMapping, build_scene, validate_mapping
from .scene_io import write_scene_bytes
from .session import (
    ERR_BAD_PAYLOAD,
    ERR_NOT_IN_ROOM,
    ProtocolMessage,
    SessionState,
    ViewpointThrottle,
    decode_message,
    handle_message,
    initial_state,
)

logger = logging.getLogger("hyperviz.server")

MAPPING_VERSION_HEADER = "X-Mapping-Version"
_STATIC_DIR = Path(__file__).parent / "static"


@dataclass
class ServeConfig:
    """Everything the service needs besides the event loop."""

    catalog: Catalog
    host: str = "127.0.0.1"
    port: int = 8000
    link_template: Optional[LinkTemplate] = None
    budget: int = 200_000
    max_viewpoint_rate: float = 30.0
    default_mapping: ChannelMapping = field(default_factory=ChannelMapping)
    assets_dir: Optional[Path] = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.link_template is not None:
            self.link_template.validate(self.catalog)
        validate_mapping(self.catalog, self.default_mapping)


class Room:
    """Runtime shell for one room: authoritative state, sockets, the
    published scene, and the rebuild/fan-out throttles."""

    def __init__(self, room_id: str, config: ServeConfig):
        self.room_id = room_id
        self.config = config
        self.state: SessionState = initial_state(room_id, config.default_mapping)
        self.lock = asyncio.Lock()
        self.sockets: dict[str, WebSocket] = {}
        self.throttle = ViewpointThrottle(config.max_viewpoint_rate)
        self.flush_task: Optional[asyncio.Task] = None
        self.rebuild_task: Optional[asyncio.Task] = None
        self.pending_mapping: Optional[ChannelMapping] = None
        self.scene_bytes: bytes = b""
        self.scene_version: int = -1

    def build_scene_bytes(self, mapping: ChannelMapping) -> bytes:
        scene = build_scene(self.config.catalog, mapping)
        if scene.count > self.config.budget:
            scene = decimate(scene, self.config.budget, build_index(scene))
        return write_scene_bytes(scene)

    def ensure_scene(self) -> None:
        if self.scene_version < 0:
            self.scene_bytes = self.build_scene_bytes(self.state.mapping)
            self.scene_version = self.state.mapping_version


def build_app(config: ServeConfig) -> FastAPI:
    app = FastAPI(title="hyperviz")
    rooms: dict[str, Room] = {}
    registry_lock = asyncio.Lock()
    app.state.rooms = rooms
    app.state.config = config

    async def get_room(room_id: str) -> Room:
        async with registry_lock:
            room = rooms.get(room_id)
            if room is None:
                room = Room(room_id, config)
                rooms[room_id] = room
                logger.info("room=%s event=created", room_id)
            return room

    def link_resolver(row_id: int) -> str:
        if config.link_template is None:
            return ""
        return resolve_link(config.link_template, config.catalog, row_id)

    def mapping_validator(mapping: ChannelMapping) -> None:
        validate_mapping(config.catalog, mapping)

    async def deliver(room: Room, events) -> None:
        for recipients, msg in events:
            text = msg.to_wire()
            for uid in recipients:
                ws = room.sockets.get(uid)
                if ws is None:
                    continue
                try:
                    await ws.send_text(text)
                except Exception:
                    # The receiver's own handler cleans up on disconnect.
                    pass

    async def flush_viewpoints(room: Room) -> None:
        await asyncio.sleep(room.throttle.interval)
        async with room.lock:
            room.flush_task = None
            await deliver(room, room.throttle.flush(time.monotonic()))

    async def rebuild_loop(room: Room) -> None:
        while True:
            async with room.lock:
                mapping = room.pending_mapping
                room.pending_mapping = None
                if mapping is None:
                    room.rebuild_task = None
                    return
            data = await asyncio.to_thread(room.build_scene_bytes, mapping)
            async with room.lock:
                if mapping.version >= room.scene_version:
                    room.scene_bytes = data
                    room.scene_version = mapping.version
                    logger.info(
                        "room=%s event=scene_rebuilt version=%d bytes=%d",
                        room.room_id,
                        mapping.version,
                        len(data),
                    )

    async def process(room: Room, sender: str, msg: ProtocolMessage) -> None:
        """Apply one event under the room lock and route the output."""
        async with room.lock:
            state, events = handle_message(
                room.state,
                sender,
                msg,
                link_resolver=link_resolver,
                mapping_validator=mapping_validator,
            )
            mapping_changed = state.mapping is not room.state.mapping
            room.state = state
            logger.info(
                "room=%s event=%s sender=%s emits=%s",
                room.room_id,
                msg.type,
                sender,
                ",".join(m.type for _, m in events) or "-",
            )
            immediate = []
            for ev in events:
                if ev[1].type == "viewpoint_bcast":
                    immediate.extend(room.throttle.submit(time.monotonic(), ev))
                    if room.throttle.pending is not None and room.flush_task is None:
                        room.flush_task = asyncio.create_task(flush_viewpoints(room))
                else:
                    immediate.append(ev)
            await deliver(room, immediate)
            if mapping_changed:
                room.pending_mapping = state.mapping
                if room.rebuild_task is None:
                    room.rebuild_task = asyncio.create_task(rebuild_loop(room))

    @app.websocket("/ws/{room_id}")
    async def ws_endpoint(ws: WebSocket, room_id: str):
        await ws.accept()
        room = await get_room(room_id)
        user: Optional[str] = None
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = decode_message(text)
                except ValueError as exc:
                    await ws.send_text(
                        _transport_error(room, ERR_BAD_PAYLOAD, str(exc))
                    )
                    continue
                if user is None:
                    if msg.type != "join":
                        await ws.send_text(
                            _transport_error(
                                room, ERR_NOT_IN_ROOM, "join before anything else"
                            )
                        )
                        continue
                    uid = msg.payload.get("user")
                    if not isinstance(uid, str) or not uid:
                        await ws.send_text(
                            _transport_error(
                                room, ERR_BAD_PAYLOAD, "join needs a 'user' string"
                            )
                        )
                        continue
                    if uid in room.sockets:
                        await ws.send_text(
                            _transport_error(
                                room, ERR_BAD_PAYLOAD, f"user {uid!r} already connected"
                            )
                        )
                        continue
                    user = uid
                    room.sockets[user] = ws
                await process(room, user, msg)
        except WebSocketDisconnect:
            pass
        finally:
            if user is not None and room.sockets.get(user) is ws:
                del room.sockets[user]
                # The handler task may already be cancelled here (client
                # teardown, server shutdown), which would kill an await
                # in this block; run the departure in its own task so
                # the room still sees the leave.
                cleanup = asyncio.create_task(_leave_on_disconnect(room, user))
                try:
                    await asyncio.shield(cleanup)
                except asyncio.CancelledError:
                    pass

    async def _leave_on_disconnect(room: Room, user: str) -> None:
        async with room.lock:
            in_room = user in room.state.users
        if in_room:
            await process(room, user, ProtocolMessage("leave", 0, {}))

    @app.get("/scene/{room_id}")
    async def scene_endpoint(room_id: str):
        room = await get_room(room_id)
        async with room.lock:
            if room.scene_version < 0:
                await asyncio.to_thread(room.ensure_scene)
            data, version = room.scene_bytes, room.scene_version
        return Response(
            content=data,
            media_type="application/octet-stream",
            headers={MAPPING_VERSION_HEADER: str(version)},
        )

    assets = config.assets_dir or _STATIC_DIR
    if assets.is_dir():
        app.mount("/", StaticFiles(directory=assets, html=True), name="assets")
    else:

        @app.get("/")
        async def index_fallback():
            return PlainTextResponse("hyperviz server (no viewer assets found)")

    return app


def _transport_error(room: Room, code: str, detail: str) -> str:
    """Errors raised before a message can enter the room's event
    sequence; they still advance the server seq and carry the version."""
    state = room.state
    msg = ProtocolMessage(
        "error",
        state.next_out_seq,
        {"code": code, "detail": detail, "mapping_version": state.mapping_version},
    )
    room.state = SessionState(
        room_id=state.room_id,
        users=state.users,
        mapping=state.mapping,
        annotations=state.annotations,
        broadcast_navigator=state.broadcast_navigator,
        next_out_seq=state.next_out_seq + 1,
    )
    return msg.to_wire()


def run_server(config: ServeConfig) -> None:
    """Blocking entry point used by the command line."""
    import uvicorn

    app = build_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
