"""
Loopback TCP mode for demos.

Carries the normative frame layout over a real socket. Timings on this path
are wall-clock and never used by the calibrated model.
"""
import logging
from typing import Callable, Optional, Tuple

from gevent import socket
from gevent.pool import Pool
from gevent.server import StreamServer

from transport.channel import DisconnectError
from transport.frame import HEADER_SIZE, Frame, FrameError, encode_frame, parse_header

logger = logging.getLogger(__name__)

FrameHandler = Callable[[Frame, str], Frame]


def parse_address(value: str) -> Tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {value!r}")
    return host or "127.0.0.1", int(port)


def _read_exact(sock, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise DisconnectError("peer closed the connection")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock) -> Frame:
    length, kind = parse_header(_read_exact(sock, HEADER_SIZE))
    return Frame(kind, _read_exact(sock, length) if length else b"")


def write_frame(sock, frame: Frame) -> None:
    sock.sendall(encode_frame(frame))


class LoopbackServer:
    """
    Serves one session at a time: each connection sends request frames and
    receives the handler's response frame for each.
    """

    def __init__(self, address: Tuple[str, int], handler: FrameHandler):
        self.handler = handler
        self._server = StreamServer(address, self._handle, spawn=Pool(1))

    @property
    def address(self) -> Tuple[str, int]:
        return self._server.address

    def _handle(self, sock, peer) -> None:
        source = f"{peer[0]}:{peer[1]}"
        logger.info("Session opened from %s", source)
        try:
            while True:
                request = read_frame(sock)
                write_frame(sock, self.handler(request, source))
        except DisconnectError:
            logger.info("Session from %s closed", source)
        except FrameError as e:
            logger.warning("Dropping session from %s: %s", source, e)
        finally:
            sock.close()

    def start(self) -> None:
        self._server.start()
        logger.info("Listening on %s:%d", *self.address)

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.stop()


def exchange(address: Tuple[str, int], frame: Frame, timeout: Optional[float] = 10.0) -> Frame:
    """Sends one frame to a loopback server and returns its reply."""
    sock = socket.create_connection(address, timeout=timeout)
    try:
        write_frame(sock, frame)
        return read_frame(sock)
    finally:
        sock.close()
