"""Collaborative room protocol: an authoritative, pure state machine.

All events for a room pass through ``handle_message`` in one total
order (server receipt order); the function is side-effect free and
returns the successor state plus the messages to deliver, so the whole
protocol is testable without sockets. Transports only move bytes and
serialize hand-off into the room's event sequence.

Room semantics:

* every user keeps an independent viewpoint; the server stores the
  latest one it saw per user
* at most one broadcast navigator exists per room; while broadcasting,
  the navigator's viewpoint updates are relayed to everyone else
* mapping changes are last-writer-wins in receipt order and bump the
  mapping version by exactly 1
* annotations get a strictly increasing per-room sequence number

Every server-to-client payload carries the room's current
``mapping_version``. Wire encoding is one JSON object per message with
envelope fields ``type``, ``seq``, ``payload``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import HypervizError
from .mapping import ChannelMapping

ERR_NOT_IN_ROOM = "NOT_IN_ROOM"
ERR_BUSY = "BUSY"
ERR_NOT_NAVIGATOR = "NOT_NAVIGATOR"
ERR_BAD_PAYLOAD = "BAD_PAYLOAD"

CLIENT_TYPES = (
    "join",
    "leave",
    "set_mapping",
    "viewpoint",
    "broadcast_start",
    "broadcast_stop",
    "annotate",
    "pick_link",
)

SERVER_TYPES = (
    "welcome",
    "user_joined",
    "user_left",
    "mapping_changed",
    "viewpoint_bcast",
    "broadcast_started",
    "broadcast_stopped",
    "annotation_added",
    "link",
    "error",
)

MAX_ANNOTATION_BYTES = 1024


@dataclass(frozen=True)
class Viewpoint:
    """Camera pose: position, unit quaternion (w, x, y, z), vertical
    field of view in degrees."""

    position: tuple[float, float, float] = (0.5, 0.5, 2.5)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    field_of_view: float = 60.0

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {norm} is not 1 within 1e-6")
        if not 10.0 < self.field_of_view < 170.0:
            raise ValueError("field_of_view must be in (10, 170)")

    def to_json(self) -> dict:
        return {
            "position": list(self.position),
            "orientation": list(self.orientation),
            "field_of_view": self.field_of_view,
        }

    @classmethod
    def from_json(cls, obj) -> "Viewpoint":
        if not isinstance(obj, dict):
            raise ValueError("viewpoint must be an object")
        pos = obj.get("position", (0.5, 0.5, 2.5))
        quat = obj.get("orientation", (1.0, 0.0, 0.0, 0.0))
        if len(pos) != 3 or len(quat) != 4:
            raise ValueError("viewpoint needs 3 position and 4 orientation floats")
        return cls(
            tuple(float(v) for v in pos),
            tuple(float(v) for v in quat),
            float(obj.get("field_of_view", 60.0)),
        )


@dataclass(frozen=True)
class Annotation:
    row_id: int
    author: str
    text: str
    server_seq: int

    def to_json(self) -> dict:
        return {
            "row_id": self.row_id,
            "author": self.author,
            "text": self.text,
            "server_seq": self.server_seq,
        }


@dataclass(frozen=True)
class ProtocolMessage:
    type: str
    seq: int
    payload: dict

    def to_wire(self) -> str:
        return json.dumps(
            {"type": self.type, "seq": self.seq, "payload": self.payload},
            separators=(",", ":"),
        )


def decode_message(text: str) -> ProtocolMessage:
    """Parse one wire message; unknown envelope fields are ignored.

    Raises ValueError when the envelope itself is malformed.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ValueError("message needs a string 'type' field")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise ValueError("'payload' must be an object")
    seq = obj.get("seq", 0)
    if not isinstance(seq, (int, float)):
        raise ValueError("'seq' must be a number")
    return ProtocolMessage(obj["type"], int(seq), payload)


@dataclass(frozen=True)
class SessionState:
    """Authoritative room state; treat as immutable."""

    room_id: str
    users: dict[str, Viewpoint] = field(default_factory=dict)
    mapping: ChannelMapping = ChannelMapping()
    annotations: tuple[Annotation, ...] = ()
    broadcast_navigator: Optional[str] = None
    next_out_seq: int = 0

    @property
    def mapping_version(self) -> int:
        return self.mapping.version


def initial_state(room_id: str, mapping: Optional[ChannelMapping] = None) -> SessionState:
    return SessionState(room_id=room_id, mapping=mapping or ChannelMapping())


Event = tuple[frozenset, ProtocolMessage]


def snapshot(state: SessionState) -> dict:
    """Welcome payload: everything a late joiner needs to reconstruct
    the room, including any active broadcast."""
    return {
        "room_id": state.room_id,
        "mapping": state.mapping.to_json(),
        "users": {uid: vp.to_json() for uid, vp in state.users.items()},
        "annotations": [a.to_json() for a in state.annotations],
        "broadcast_navigator": state.broadcast_navigator,
    }


class _Emitter:
    def __init__(self, start_seq: int):
        self.seq = start_seq
        self.events: list[Event] = []

    def emit(self, recipients, type: str, payload: dict, mapping_version: int):
        if recipients:
            self.events.append(
                (
                    frozenset(recipients),
                    ProtocolMessage(
                        type, self.seq, {**payload, "mapping_version": mapping_version}
                    ),
                )
            )
            self.seq += 1


def handle_message(
    state: SessionState,
    sender: str,
    msg: ProtocolMessage,
    link_resolver: Optional[Callable[[int], str]] = None,
    mapping_validator: Optional[Callable[[ChannelMapping], None]] = None,
) -> tuple[SessionState, list[Event]]:
    """Apply one client message; returns (new state, deliveries).

    Deterministic: the successor state and emitted messages depend only
    on the arguments. Deliveries are (recipient set, message) pairs.
    ``mapping_validator`` may reject a parsed mapping (raise) before it
    is accepted; rejected mappings do not bump the version.
    """
    out = _Emitter(state.next_out_seq)
    version = state.mapping_version

    def fail(code: str, detail: str) -> tuple[SessionState, list[Event]]:
        out.emit({sender}, "error", {"code": code, "detail": detail}, version)
        return replace(state, next_out_seq=out.seq), out.events

    if msg.type not in CLIENT_TYPES:
        return fail(ERR_BAD_PAYLOAD, f"unknown message type {msg.type!r}")

    members = set(state.users)

    if msg.type == "join":
        if sender in state.users:
            return fail(ERR_BAD_PAYLOAD, "already in room")
        try:
            vp = (
                Viewpoint.from_json(msg.payload["viewpoint"])
                if "viewpoint" in msg.payload
                else Viewpoint()
            )
        except ValueError as exc:
            return fail(ERR_BAD_PAYLOAD, str(exc))
        new = replace(state, users={**state.users, sender: vp})
        out.emit({sender}, "welcome", snapshot(new), version)
        out.emit(members, "user_joined", {"user": sender, "viewpoint": vp.to_json()}, version)
        return replace(new, next_out_seq=out.seq), out.events

    if sender not in state.users:
        return fail(ERR_NOT_IN_ROOM, f"{sender!r} has not joined")

    others = members - {sender}

    if msg.type == "leave":
        users = dict(state.users)
        del users[sender]
        remaining = others
        new = replace(state, users=users)
        if state.broadcast_navigator == sender:
            # Stop the broadcast before anything else observes the room,
            # so no replica ever sees a navigator who is not a member.
            new = replace(new, broadcast_navigator=None)
            out.emit(remaining, "broadcast_stopped", {"navigator": sender}, version)
        out.emit(remaining, "user_left", {"user": sender}, version)
        return replace(new, next_out_seq=out.seq), out.events

    if msg.type == "set_mapping":
        try:
            mapping = ChannelMapping.from_json(msg.payload.get("mapping"))
            if mapping_validator is not None:
                mapping_validator(mapping)
        except (ValueError, HypervizError) as exc:
            return fail(ERR_BAD_PAYLOAD, str(exc))
        mapping = mapping.with_version(version + 1)
        new = replace(state, mapping=mapping)
        out.emit(
            members,
            "mapping_changed",
            {"mapping": mapping.to_json(), "changed_by": sender},
            mapping.version,
        )
        return replace(new, next_out_seq=out.seq), out.events

    if msg.type == "viewpoint":
        try:
            vp = Viewpoint.from_json(msg.payload.get("viewpoint"))
        except ValueError as exc:
            return fail(ERR_BAD_PAYLOAD, str(exc))
        new = replace(state, users={**state.users, sender: vp})
        if state.broadcast_navigator == sender:
            out.emit(
                others,
                "viewpoint_bcast",
                {"user": sender, "viewpoint": vp.to_json(), "source_seq": msg.seq},
                version,
            )
        return replace(new, next_out_seq=out.seq), out.events

    if msg.type == "broadcast_start":
        if state.broadcast_navigator is not None:
            return fail(
                ERR_BUSY, f"{state.broadcast_navigator!r} is already broadcasting"
            )
        new = replace(state, broadcast_navigator=sender)
        out.emit(members, "broadcast_started", {"navigator": sender}, version)
        return replace(new, next_out_seq=out.seq), out.events

    if msg.type == "broadcast_stop":
        if state.broadcast_navigator != sender:
            return fail(ERR_NOT_NAVIGATOR, "only the navigator can stop a broadcast")
        new = replace(state, broadcast_navigator=None)
        out.emit(members, "broadcast_stopped", {"navigator": sender}, version)
        return replace(new, next_out_seq=out.seq), out.events

    if msg.type == "annotate":
        row_id = msg.payload.get("row_id")
        text = msg.payload.get("text")
        if not isinstance(row_id, int) or isinstance(row_id, bool) or row_id < 0:
            return fail(ERR_BAD_PAYLOAD, "annotate needs a non-negative row_id")
        if not isinstance(text, str) or len(text.encode("utf-8")) > MAX_ANNOTATION_BYTES:
            return fail(
                ERR_BAD_PAYLOAD, f"annotation text must be <= {MAX_ANNOTATION_BYTES} bytes"
            )
        ann = Annotation(row_id, sender, text, len(state.annotations) + 1)
        new = replace(state, annotations=state.annotations + (ann,))
        out.emit(members, "annotation_added", {"annotation": ann.to_json()}, version)
        return replace(new, next_out_seq=out.seq), out.events

    # pick_link
    row_id = msg.payload.get("row_id")
    if not isinstance(row_id, int) or isinstance(row_id, bool) or row_id < 0:
        return fail(ERR_BAD_PAYLOAD, "pick_link needs a non-negative row_id")
    url = ""
    if link_resolver is not None:
        try:
            url = link_resolver(row_id)
        except Exception as exc:
            return fail(ERR_BAD_PAYLOAD, f"link resolution failed: {exc}")
    out.emit({sender}, "link", {"row_id": row_id, "url": url}, version)
    return replace(state, next_out_seq=out.seq), out.events


class ClientReplica:
    """Client-side mirror of room state, fed by server messages.

    Never mutates authoritative state on its own; everything comes from
    applying received messages in order. While a broadcast is active and
    ``follow`` is set, ``displayed_viewpoint`` tracks the last received
    navigator viewpoint.
    """

    def __init__(self, user_id: str, follow: bool = True):
        self.user_id = user_id
        self.follow = follow
        self.joined = False
        self.users: set[str] = set()
        self.mapping: Optional[dict] = None
        self.mapping_version = 0
        self.annotations: list[dict] = []
        self.broadcast_navigator: Optional[str] = None
        self.local_viewpoint = Viewpoint()
        self.displayed_viewpoint: Optional[dict] = None
        self.last_bcast_seq: Optional[int] = None
        self.last_error: Optional[dict] = None
        self.links: list[dict] = []

    def apply(self, msg: ProtocolMessage) -> None:
        p = msg.payload
        if msg.type == "welcome":
            self.joined = True
            self.users = set(p["users"])
            self.mapping = p["mapping"]
            self.annotations = list(p["annotations"])
            self.broadcast_navigator = p["broadcast_navigator"]
            # A (re)joined session starts with no followed viewpoint; it
            # picks up the broadcast at the next forwarded update.
            self.displayed_viewpoint = None
            self.last_bcast_seq = None
        elif msg.type == "user_joined":
            self.users.add(p["user"])
        elif msg.type == "user_left":
            self.users.discard(p["user"])
        elif msg.type == "mapping_changed":
            self.mapping = p["mapping"]
        elif msg.type == "broadcast_started":
            self.broadcast_navigator = p["navigator"]
        elif msg.type == "broadcast_stopped":
            self.broadcast_navigator = None
            self.displayed_viewpoint = None
            self.last_bcast_seq = None
        elif msg.type == "annotation_added":
            self.annotations.append(p["annotation"])
        elif msg.type == "viewpoint_bcast":
            if self.follow:
                self.displayed_viewpoint = p["viewpoint"]
                self.last_bcast_seq = p["source_seq"]
        elif msg.type == "link":
            self.links.append(p)
        elif msg.type == "error":
            self.last_error = p
        self.mapping_version = p.get("mapping_version", self.mapping_version)

    def state_tuple(self):
        """The converging projection: mapping, version, annotations,
        navigator, membership."""
        return (
            self.mapping,
            self.mapping_version,
            tuple((a["server_seq"], a["row_id"], a["author"], a["text"]) for a in self.annotations),
            self.broadcast_navigator,
            frozenset(self.users),
        )


def server_state_tuple(state: SessionState):
    """Server-side projection matching ClientReplica.state_tuple."""
    return (
        state.mapping.to_json(),
        state.mapping_version,
        tuple((a.server_seq, a.row_id, a.author, a.text) for a in state.annotations),
        state.broadcast_navigator,
        frozenset(state.users),
    )


class ViewpointThrottle:
    """Per-room limiter on forwarded navigator viewpoints.

    At most one viewpoint broadcast per ``1 / max_per_second`` interval
    leaves the room; newer viewpoints arriving inside the window replace
    the pending one (only the latest matters), and ``flush`` releases it
    once the window has passed. Time is an explicit argument so the
    policy is deterministic and testable.
    """

    def __init__(self, max_per_second: float = 30.0):
        if max_per_second <= 0:
            raise ValueError("max_per_second must be positive")
        self.interval = 1.0 / max_per_second
        self._last_emit: Optional[float] = None
        self._pending: Optional[Event] = None

    def submit(self, now: float, event: Event) -> list[Event]:
        if self._last_emit is None or now - self._last_emit >= self.interval:
            self._last_emit = now
            self._pending = None
            return [event]
        self._pending = event
        return []

    def flush(self, now: float) -> list[Event]:
        if self._pending is None:
            return []
        if self._last_emit is None or now - self._last_emit >= self.interval:
            event, self._pending = self._pending, None
            self._last_emit = now
            return [event]
        return []

    @property
    def pending(self) -> Optional[Event]:
        return self._pending
