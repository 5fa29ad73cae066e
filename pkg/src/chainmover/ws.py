"""Minimal WebSocket (RFC 6455) framing over blocking sockets.

Text frames only; handles masking, fragmentation, ping/pong, and close. Enough
for the session bridge and its loopback test clients; not a general server.
"""
from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsClosed(Exception):
    """Peer closed the connection."""


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WsClosed("socket closed")
        buf += chunk
    return buf


def _read_until(sock: socket.socket, marker: bytes) -> bytes:
    buf = b""
    while marker not in buf:
        chunk = sock.recv(4096)
        if not chunk:
            raise WsClosed("socket closed during handshake")
        buf += chunk
        if len(buf) > 65536:
            raise ValueError("handshake request too large")
    return buf


def accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def server_handshake(sock: socket.socket) -> None:
    """Read the client's HTTP upgrade request and reply with 101."""
    request = _read_until(sock, b"\r\n\r\n").decode("latin-1")
    key = None
    for line in request.split("\r\n"):
        if ":" in line:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
    if key is None:
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        raise ValueError("missing Sec-WebSocket-Key")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n"
    )
    sock.sendall(response.encode("latin-1"))


def client_handshake(sock: socket.socket, host: str, port: int, path: str = "/") -> None:
    key = base64.b64encode(os.urandom(16)).decode()
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n\r\n"
    )
    sock.sendall(request.encode("latin-1"))
    response = _read_until(sock, b"\r\n\r\n").decode("latin-1")
    status = response.split("\r\n", 1)[0]
    if "101" not in status:
        raise ValueError(f"handshake rejected: {status}")
    expected = accept_key(key)
    for line in response.split("\r\n"):
        if ":" in line:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-accept":
                if value.strip() != expected:
                    raise ValueError("bad Sec-WebSocket-Accept")
                return
    raise ValueError("missing Sec-WebSocket-Accept")


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 65536:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        body = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + body
    return head + payload


def send_frame(sock: socket.socket, opcode: int, payload: bytes, mask: bool) -> None:
    sock.sendall(_encode_frame(opcode, payload, mask))


def send_text(sock: socket.socket, text: str, mask: bool = False) -> None:
    send_frame(sock, OP_TEXT, text.encode(), mask)


def send_close(sock: socket.socket, mask: bool = False) -> None:
    send_frame(sock, OP_CLOSE, b"", mask)


def _read_frame(sock: socket.socket) -> tuple[bool, int, bytes]:
    b0, b1 = _recv_exact(sock, 2)
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    n = b1 & 0x7F
    if n == 126:
        n = struct.unpack(">H", _recv_exact(sock, 2))[0]
    elif n == 127:
        n = struct.unpack(">Q", _recv_exact(sock, 8))[0]
    key = _recv_exact(sock, 4) if masked else None
    payload = _recv_exact(sock, n) if n else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return fin, opcode, payload


def recv_text(sock: socket.socket, reply_mask: bool = False) -> str:
    """Next complete text message; answers pings transparently.

    Raises WsClosed when the peer closes.
    """
    parts: list[bytes] = []
    while True:
        fin, opcode, payload = _read_frame(sock)
        if opcode == OP_CLOSE:
            try:
                send_frame(sock, OP_CLOSE, b"", reply_mask)
            except OSError:
                pass
            raise WsClosed("close frame received")
        if opcode == OP_PING:
            send_frame(sock, OP_PONG, payload, reply_mask)
            continue
        if opcode == OP_PONG:
            continue
        if opcode in (OP_TEXT, OP_CONT):
            parts.append(payload)
            if fin:
                return b"".join(parts).decode()
            continue
        raise ValueError(f"unsupported opcode {opcode}")
