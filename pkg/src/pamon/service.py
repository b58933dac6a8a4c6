"""Long-running telemetry service over TCP, with WebSocket upgrades.

One asyncio event loop owns everything: the listener, every client
connection, and one clock task per running session that advances the
simulation in real time and fans telemetry out to subscribers.  Both
transports carry the same JSON messages: plain connections use one JSON
object per line; connections that open with an HTTP GET are upgraded to
WebSocket and use one JSON object per text frame.

Configuration comes from flags or environment variables (flag wins):
``--listen``/``PAMON_LISTEN`` (host:port), ``--scenarios``/``PAMON_SCENARIOS``
(extra scenario registry JSON), ``--record-dir``/``PAMON_RECORD_DIR``
(directory for automatic per-session files).
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import os
import sys
from pathlib import Path
from typing import Any, Mapping

from . import ws as wsproto
from .errors import (ConfigurationError, InvalidArgumentError, NotFoundError,
                     PamonError, StateError)
from .protocol import ProtocolError, SessionHub, decode, encode
from .scenarios import ScenarioConfig, load_scenarios
from .session import SessionState

__all__ = ["TelemetryService", "DEFAULT_LISTEN", "main", "parse_listen"]

DEFAULT_LISTEN = "127.0.0.1:8777"


def parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise ConfigurationError(f"listen address must be host:port, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigurationError(f"bad port in listen address {value!r}") from None


class _Conn:
    """One client connection; hides the framing difference."""

    def __init__(self, kind: str, writer: asyncio.StreamWriter):
        self.kind = kind
        self.writer = writer
        self.subscriptions: set[str] = set()

    async def send(self, text: str) -> None:
        if self.kind == "ws":
            self.writer.write(wsproto.encode_frame(text.encode("utf-8")))
        else:
            self.writer.write(text.encode("utf-8") + b"\n")
        await self.writer.drain()


class TelemetryService:
    """Serve sessions to any number of concurrent subscribers."""

    def __init__(self, registry: Mapping[str, ScenarioConfig] | None = None,
                 record_dir: str | Path | None = None):
        self.hub = SessionHub(registry, record_dir)
        self._conns: set[_Conn] = set()
        self._clocks: dict[str, asyncio.Task] = {}
        self._server: asyncio.base_events.Server | None = None

    # -- lifecycle -----------------------------------------------------------

    async def start(self, host: str, port: int) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, host, port)
        sock = self._server.sockets[0]
        actual = sock.getsockname()
        return actual[0], actual[1]

    async def stop(self) -> None:
        for task in list(self._clocks.values()):
            task.cancel()
        for task in list(self._clocks.values()):
            with contextlib.suppress(asyncio.CancelledError):
                await task
        self._clocks.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        for conn in list(self._conns):
            await self._drop(conn)
        self.hub.close()

    async def serve_forever(self) -> None:
        assert self._server is not None
        await self._server.serve_forever()

    # -- connection handling ---------------------------------------------------

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        conn: _Conn | None = None
        try:
            first = await reader.readline()
            if not first:
                return
            if first.startswith(b"GET "):
                conn = await self._upgrade(first, reader, writer)
                if conn is None:
                    return
                await self._ws_loop(conn, reader, writer)
            else:
                conn = _Conn("tcp", writer)
                self._conns.add(conn)
                line = first
                while line:
                    text = line.decode("utf-8").strip()
                    if text:
                        await self._dispatch(conn, text)
                    line = await reader.readline()
        except (asyncio.IncompleteReadError, ConnectionError, UnicodeDecodeError,
                wsproto.WsError):
            pass
        finally:
            if conn is not None:
                await self._drop(conn)
            else:
                writer.close()
                with contextlib.suppress(ConnectionError, OSError):
                    await writer.wait_closed()

    async def _upgrade(self, first: bytes, reader: asyncio.StreamReader,
                       writer: asyncio.StreamWriter) -> _Conn | None:
        raw = bytearray(first)
        while True:
            line = await reader.readline()
            if not line:
                return None
            raw += line
            if line in (b"\r\n", b"\n"):
                break
        writer.write(wsproto.handshake_response(bytes(raw)))
        await writer.drain()
        conn = _Conn("ws", writer)
        self._conns.add(conn)
        return conn

    async def _ws_loop(self, conn: _Conn, reader: asyncio.StreamReader,
                       writer: asyncio.StreamWriter) -> None:
        while True:
            opcode, payload = await wsproto.read_frame(reader)
            if opcode == wsproto.OP_CLOSE:
                with contextlib.suppress(ConnectionError, OSError):
                    writer.write(wsproto.encode_close())
                    await writer.drain()
                return
            if opcode == wsproto.OP_PING:
                writer.write(wsproto.encode_frame(payload, wsproto.OP_PONG))
                await writer.drain()
                continue
            if opcode == wsproto.OP_TEXT:
                await self._dispatch(conn, payload.decode("utf-8"))

    async def _drop(self, conn: _Conn) -> None:
        self._conns.discard(conn)
        conn.writer.close()
        with contextlib.suppress(ConnectionError, OSError):
            await conn.writer.wait_closed()

    # -- message dispatch --------------------------------------------------------

    async def _dispatch(self, conn: _Conn, text: str) -> None:
        session_id: str | None = None
        try:
            message = decode(text)
            session_id = message.get("session_id") if isinstance(
                message.get("session_id"), str) else None
            produced = self.hub.apply(message)
        except ProtocolError as exc:
            await self._error(conn, session_id, exc.code, str(exc))
            return
        except NotFoundError as exc:
            await self._error(conn, session_id, "not-found", str(exc.args[0]))
            return
        except StateError as exc:
            await self._error(conn, session_id, exc.code, str(exc))
            return
        except InvalidArgumentError as exc:
            await self._error(conn, session_id, "invalid-argument", str(exc))
            return

        mtype = message["type"]
        if mtype == "create_session":
            sid = produced[0]["session_id"]
            conn.subscriptions.add(sid)
            for msg in produced:
                await self._safe_send(conn, encode(msg))
        elif mtype == "subscribe":
            conn.subscriptions.add(message["session_id"])
            for msg in produced:
                await self._safe_send(conn, encode(msg))
        elif mtype == "control":
            sid = message["session_id"]
            await self._broadcast(sid, produced, ensure=conn)
            self._sync_clock(sid)
        else:
            for msg in produced:
                await self._safe_send(conn, encode(msg))

    async def _error(self, conn: _Conn, session_id: str | None, code: str,
                     message: str) -> None:
        await self._safe_send(conn, encode({
            "type": "error", "session_id": session_id, "seq": 0,
            "code": code, "message": message,
        }))

    async def _safe_send(self, conn: _Conn, text: str) -> None:
        try:
            await conn.send(text)
        except (ConnectionError, OSError):
            await self._drop(conn)

    async def _broadcast(self, session_id: str, messages: list[dict[str, Any]],
                         ensure: _Conn | None = None) -> None:
        targets = [c for c in self._conns if session_id in c.subscriptions]
        if ensure is not None and ensure not in targets:
            targets.append(ensure)
        for msg in messages:
            text = encode(msg)
            for conn in list(targets):
                await self._safe_send(conn, text)

    # -- simulation clock -------------------------------------------------------

    def _sync_clock(self, session_id: str) -> None:
        session = self.hub.session(session_id)
        running = session.state is SessionState.RUNNING
        task = self._clocks.get(session_id)
        if running and (task is None or task.done()):
            self._clocks[session_id] = asyncio.get_running_loop().create_task(
                self._clock(session_id))

    async def _clock(self, session_id: str) -> None:
        """Advance one session in real time while it stays Running."""
        loop = asyncio.get_running_loop()
        last = loop.time()
        try:
            while True:
                session = self.hub.session(session_id)
                if session.state is not SessionState.RUNNING:
                    return
                await asyncio.sleep(session.scenario.laser.pulse_period_s)
                now = loop.time()
                messages = self.hub.tick(session_id, now - last)
                last = now
                if messages:
                    await self._broadcast(session_id, messages)
        except (NotFoundError, StateError):
            return
        finally:
            self._clocks.pop(session_id, None)


async def _run(host: str, port: int,
               registry: Mapping[str, ScenarioConfig] | None,
               record_dir: str | None) -> None:
    service = TelemetryService(registry, record_dir)
    bound_host, bound_port = await service.start(host, port)
    print(f"listening on {bound_host}:{bound_port}", flush=True)
    try:
        await service.serve_forever()
    except asyncio.CancelledError:
        pass
    finally:
        await service.stop()


def add_serve_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--listen", default=None,
                        help="host:port to listen on (env PAMON_LISTEN, "
                             f"default {DEFAULT_LISTEN})")
    parser.add_argument("--scenarios", default=None,
                        help="extra scenario registry JSON (env PAMON_SCENARIOS)")
    parser.add_argument("--record-dir", default=None,
                        help="write one session file per session here "
                             "(env PAMON_RECORD_DIR)")


def serve_from_args(args: argparse.Namespace) -> int:
    listen = args.listen or os.environ.get("PAMON_LISTEN") or DEFAULT_LISTEN
    scen_path = args.scenarios or os.environ.get("PAMON_SCENARIOS")
    record_dir = args.record_dir or os.environ.get("PAMON_RECORD_DIR")
    host, port = parse_listen(listen)
    registry = load_scenarios(scen_path) if scen_path else None
    try:
        asyncio.run(_run(host, port, registry, record_dir))
    except KeyboardInterrupt:
        pass
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pamon-serve",
                                     description=__doc__.splitlines()[0])
    add_serve_arguments(parser)
    args = parser.parse_args(argv)
    try:
        return serve_from_args(args)
    except PamonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
