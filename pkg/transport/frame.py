import enum
import struct
from dataclasses import dataclass

MAX_PAYLOAD = 16 * 1024 * 1024
_HEADER = struct.Struct(">IB")
HEADER_SIZE = _HEADER.size


class FrameError(ValueError):
    """Raised for frames that violate the wire layout."""


class FrameKind(enum.IntEnum):
    PAIR_REQ = 1
    PAIR_RSP = 2
    PAIR_CONFIRM = 3
    PAIR_RANDOM = 4
    KEY_DIST = 5
    STEGO_IMAGE = 6
    PLAINTEXT_UNLOCK = 7
    SIGNED_DATA = 8
    UNLOCK_RESULT = 9
    # modeled public-key exchange that precedes a session
    PUBLIC_KEY = 10
    BOX_DATA = 11


SMP_KINDS = frozenset({FrameKind.PAIR_REQ, FrameKind.PAIR_RSP, FrameKind.PAIR_CONFIRM,
                       FrameKind.PAIR_RANDOM, FrameKind.KEY_DIST})


@dataclass(frozen=True)
class Frame:
    """A typed protocol message. Wire layout: length (4) || kind (1) || payload."""

    kind: FrameKind
    payload: bytes = b""

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", FrameKind(self.kind))
        except ValueError as e:
            raise FrameError(f"unknown frame kind {self.kind!r}") from e
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameError(f"payload of {len(self.payload)} bytes exceeds 16 MiB")
        object.__setattr__(self, "payload", bytes(self.payload))

    @property
    def size(self) -> int:
        """Bytes this frame occupies on the wire."""
        return HEADER_SIZE + len(self.payload)

    def __repr__(self) -> str:
        return f"Frame({self.kind.name}, {len(self.payload)} bytes)"


def encode_frame(frame: Frame) -> bytes:
    return _HEADER.pack(len(frame.payload), frame.kind) + frame.payload


def decode_frame(data: bytes) -> Frame:
    """Decodes exactly one frame; trailing bytes are an error."""
    if len(data) < HEADER_SIZE:
        raise FrameError(f"truncated frame header: {len(data)} bytes")
    length, kind = _HEADER.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared payload of {length} bytes exceeds 16 MiB")
    if len(data) != HEADER_SIZE + length:
        raise FrameError(f"frame declares {length} payload bytes but carries {len(data) - HEADER_SIZE}")
    return Frame(kind, data[HEADER_SIZE:])


def parse_header(header: bytes) -> tuple:
    """Returns (payload_length, kind) from a 5-byte header read off a stream."""
    if len(header) != HEADER_SIZE:
        raise FrameError("frame header must be 5 bytes")
    length, kind = _HEADER.unpack(header)
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared payload of {length} bytes exceeds 16 MiB")
    try:
        return length, FrameKind(kind)
    except ValueError as e:
        raise FrameError(f"unknown frame kind {kind}") from e
