"""Wire message vocabulary and the transport-free session hub.

Every message is one JSON object per line (or per WebSocket text frame).
Client messages:

    {"type": "create_session", "scenario": str, "seed": int?, "session_id": str?}
    {"type": "subscribe", "session_id": str, "since_seq": int?}
    {"type": "control", "session_id": str, "command": str, "payload": str?}
    {"type": "list_scenarios"}

Server messages (``created``, ``state``, ``telemetry``, and session-scoped
``error`` all carry the session id and a per-session sequence number that
increases by one per message):

    {"type": "created", "session_id", "seq", "scenario", "seed", "state", "laser_on"}
    {"type": "state", "session_id", "seq", "state", "laser_on", "command", "detail"}
    {"type": "telemetry", "session_id", "seq", "record": {...}}
    {"type": "error", "session_id": str|null, "seq", "code", "message"}
    {"type": "scenarios", "session_id": null, "seq": 0, "scenarios": [str]}

Sequence-numbered messages are kept per session, so a client that lost its
connection can subscribe with ``since_seq`` set to the last number it saw
and receive exactly the messages it missed, duplicates excluded.

The hub below applies client messages to sessions and produces server
messages; it does no I/O and is deterministic, which keeps the protocol
testable without sockets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Mapping

from .errors import NotFoundError, PamonError, StateError
from .scenarios import ScenarioConfig, builtin_scenarios
from .session import (CommandKind, ControlCommand, Session, SessionState,
                      create_session, handle_control, record, tick)

__all__ = ["ProtocolError", "SessionHub", "encode", "decode"]

_MAX_MESSAGE_BYTES = 1 << 20


class ProtocolError(PamonError):
    """A client message that cannot be applied; carries a wire error code."""

    def __init__(self, message: str, code: str = "bad-message"):
        super().__init__(message)
        self.code = code


def encode(message: Mapping[str, Any]) -> str:
    return json.dumps(message, separators=(",", ":"))


def decode(line: str) -> dict[str, Any]:
    if len(line) > _MAX_MESSAGE_BYTES:
        raise ProtocolError("message too large")
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("type"), str):
        raise ProtocolError("message must be an object with a string 'type'")
    return data


@dataclass
class _Entry:
    session: Session
    seq: int = 0
    history: list[dict[str, Any]] = field(default_factory=list)
    sink: IO[str] | None = None


class SessionHub:
    """All live sessions plus their numbered message history.

    ``record_dir`` turns on automatic session files, one per session.  The
    hub is single-threaded by design: the service serializes all calls
    through one event loop, which is what makes the per-session sequence
    numbering and history consistent for every subscriber.
    """

    def __init__(self, registry: Mapping[str, ScenarioConfig] | None = None,
                 record_dir: str | Path | None = None):
        self.registry = dict(registry) if registry is not None else builtin_scenarios()
        self.record_dir = Path(record_dir) if record_dir is not None else None
        self._entries: dict[str, _Entry] = {}

    # -- session access ----------------------------------------------------

    def session(self, session_id: str) -> Session:
        try:
            return self._entries[session_id].session
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}") from None

    def session_ids(self) -> list[str]:
        return list(self._entries)

    def running_session_ids(self) -> list[str]:
        return [sid for sid, e in self._entries.items()
                if e.session.state is SessionState.RUNNING]

    def scenario_names(self) -> list[str]:
        return sorted(self.registry)

    # -- numbered session messages ------------------------------------------

    def _push(self, session_id: str, message: dict[str, Any]) -> dict[str, Any]:
        entry = self._entries[session_id]
        entry.seq += 1
        message["session_id"] = session_id
        message["seq"] = entry.seq
        entry.history.append(message)
        return message

    def history_since(self, session_id: str, since_seq: int = 0) -> list[dict[str, Any]]:
        entry = self._entries.get(session_id)
        if entry is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return [m for m in entry.history if m["seq"] > since_seq]

    # -- client actions ------------------------------------------------------

    def create(self, scenario: str, seed: int | None = None,
               session_id: str | None = None) -> dict[str, Any]:
        session = create_session(scenario, self.registry, seed, session_id)
        if session.id in self._entries:
            raise ProtocolError(f"session id {session.id!r} already exists",
                                code="duplicate-session")
        entry = _Entry(session=session)
        self._entries[session.id] = entry
        if self.record_dir is not None:
            self.record_dir.mkdir(parents=True, exist_ok=True)
            entry.sink = open(self.record_dir / f"{session.id}.jsonl", "w",
                              encoding="utf-8")
            record(session, entry.sink)
        return self._push(session.id, {
            "type": "created",
            "scenario": session.scenario.name,
            "seed": session.seed,
            "state": session.state.value,
            "laser_on": session.laser_on,
        })

    def control(self, session_id: str, command: str,
                payload: str | None = None) -> dict[str, Any]:
        session = self.session(session_id)
        try:
            kind = CommandKind(command)
        except ValueError:
            raise ProtocolError(f"unknown command {command!r}",
                                code="unknown-command") from None
        ack = handle_control(session, ControlCommand(kind, payload))
        message = self._push(session_id, {
            "type": "state",
            "state": ack.state.value,
            "laser_on": ack.laser_on,
            "command": ack.command.value,
            "detail": ack.detail,
        })
        if kind is CommandKind.END_SESSION:
            self._close_sink(session_id)
        return message

    def tick(self, session_id: str, wall_dt: float) -> list[dict[str, Any]]:
        session = self.session(session_id)
        records = tick(session, wall_dt)
        return [self._push(session_id, {"type": "telemetry", "record": r.to_dict()})
                for r in records]

    def error_event(self, session_id: str, code: str, message: str) -> dict[str, Any]:
        """Record a rejected session action so every subscriber sees it."""
        if session_id not in self._entries:
            return {"type": "error", "session_id": None, "seq": 0,
                    "code": code, "message": message}
        return self._push(session_id, {"type": "error", "code": code,
                                       "message": message})

    def apply(self, message: dict[str, Any]) -> list[dict[str, Any]]:
        """Apply one decoded client message; return the produced messages.

        ``subscribe`` is transport-level (the service tracks who listens),
        so the hub only validates it and returns the missed history.
        Failures raise ``ProtocolError``, ``NotFoundError``, or
        ``StateError``; the caller turns those into error messages.
        """
        mtype = message["type"]
        if mtype == "create_session":
            scenario = message.get("scenario")
            if not isinstance(scenario, str):
                raise ProtocolError("create_session requires a scenario name")
            seed = message.get("seed")
            if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
                raise ProtocolError("seed must be an integer")
            session_id = message.get("session_id")
            if session_id is not None and not isinstance(session_id, str):
                raise ProtocolError("session_id must be a string")
            return [self.create(scenario, seed, session_id)]
        if mtype == "control":
            sid = message.get("session_id")
            if not isinstance(sid, str):
                raise ProtocolError("control requires a session_id")
            command = message.get("command")
            if not isinstance(command, str):
                raise ProtocolError("control requires a command")
            return [self.control(sid, command, message.get("payload"))]
        if mtype == "subscribe":
            sid = message.get("session_id")
            if not isinstance(sid, str):
                raise ProtocolError("subscribe requires a session_id")
            since = message.get("since_seq", 0)
            if isinstance(since, bool) or not isinstance(since, int) or since < 0:
                raise ProtocolError("since_seq must be a non-negative integer")
            return self.history_since(sid, since)
        if mtype == "list_scenarios":
            return [{"type": "scenarios", "session_id": None, "seq": 0,
                     "scenarios": self.scenario_names()}]
        raise ProtocolError(f"unknown message type {mtype!r}")

    # -- lifecycle -----------------------------------------------------------

    def _close_sink(self, session_id: str) -> None:
        entry = self._entries.get(session_id)
        if entry is not None and entry.sink is not None:
            entry.sink.close()
            entry.sink = None

    def close(self) -> None:
        for sid, entry in self._entries.items():
            if entry.session.state is not SessionState.STOPPED:
                try:
                    handle_control(entry.session,
                                   ControlCommand(CommandKind.END_SESSION))
                except StateError:  # pragma: no cover - defensive
                    pass
            self._close_sink(sid)
