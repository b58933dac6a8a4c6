"""Minimal server-side WebSocket support (text frames only).

The service speaks newline-delimited JSON over plain TCP; browsers need the
same messages wrapped in WebSocket frames.  This implements just enough of
the protocol for that: the upgrade handshake, masked client text frames,
unmasked server text frames, and close/ping control frames.  Fragmented
messages and extensions are rejected; every JSON message travels as one
text frame.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib

from .errors import PamonError

__all__ = [
    "WsError",
    "OP_TEXT",
    "OP_CLOSE",
    "OP_PING",
    "OP_PONG",
    "handshake_response",
    "encode_frame",
    "encode_close",
    "read_frame",
]

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_FRAME_BYTES = 1 << 20

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsError(PamonError):
    """Malformed handshake or frame; the connection must be dropped."""


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake_response(request: bytes) -> bytes:
    """HTTP 101 response for an upgrade request (bytes up to the blank line)."""
    try:
        head = request.decode("latin-1")
    except UnicodeDecodeError as exc:  # pragma: no cover - latin-1 never fails
        raise WsError("undecodable handshake") from exc
    lines = head.split("\r\n")
    if not lines or not lines[0].startswith("GET "):
        raise WsError("handshake must be an HTTP GET")
    headers = {}
    for line in lines[1:]:
        if not line:
            continue
        name, sep, value = line.partition(":")
        if not sep:
            raise WsError(f"malformed header line {line!r}")
        headers[name.strip().lower()] = value.strip()
    if "websocket" not in headers.get("upgrade", "").lower():
        raise WsError("missing 'Upgrade: websocket'")
    key = headers.get("sec-websocket-key")
    if not key:
        raise WsError("missing Sec-WebSocket-Key")
    return ("HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
            "\r\n").encode("ascii")


def encode_frame(payload: bytes, opcode: int = OP_TEXT) -> bytes:
    """One unmasked final frame, as servers send them."""
    if len(payload) > _MAX_FRAME_BYTES:
        raise WsError("frame too large")
    head = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < 1 << 16:
        head.append(126)
        head += n.to_bytes(2, "big")
    else:
        head.append(127)
        head += n.to_bytes(8, "big")
    return bytes(head) + payload


def encode_close(code: int = 1000) -> bytes:
    return encode_frame(code.to_bytes(2, "big"), OP_CLOSE)


def _unmask(payload: bytes, mask: bytes) -> bytes:
    # xor with the mask repeated over the payload length
    repeated = (mask * (len(payload) // 4 + 1))[:len(payload)]
    return bytes(a ^ b for a, b in zip(payload, repeated))


async def read_frame(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """Next client frame as (opcode, payload); EOF raises IncompleteReadError.

    Client frames must be masked and final; anything else is a WsError.
    """
    head = await reader.readexactly(2)
    fin = head[0] & 0x80
    opcode = head[0] & 0x0F
    if not fin or opcode == 0:
        raise WsError("fragmented frames are not supported")
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        length = int.from_bytes(await reader.readexactly(2), "big")
    elif length == 127:
        length = int.from_bytes(await reader.readexactly(8), "big")
    if length > _MAX_FRAME_BYTES:
        raise WsError("frame too large")
    if not masked:
        raise WsError("client frames must be masked")
    mask = await reader.readexactly(4)
    payload = await reader.readexactly(length) if length else b""
    return opcode, _unmask(payload, mask)
