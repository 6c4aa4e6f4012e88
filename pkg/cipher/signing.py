import enum
import logging
import struct
from dataclasses import dataclass

from Crypto.Cipher import AES
from nacl.bindings import sodium_memcmp

from cipher.aes import BLOCK_SIZE, SecretKey128, check_counter
from cipher.errors import InvalidInputError

logger = logging.getLogger(__name__)

SIGNATURE_SIZE = 8
_PREFIX = struct.Struct(">QI")


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    FORGERY = "forgery"
    REPLAY = "replay"


@dataclass(frozen=True)
class SignedMessage:
    """A plaintext payload authenticated with a counter-bound 8-byte signature."""

    counter: int
    payload: bytes
    signature: bytes

    def __post_init__(self):
        check_counter(self.counter)
        if len(self.signature) != SIGNATURE_SIZE:
            raise InvalidInputError(f"signature must be exactly {SIGNATURE_SIZE} bytes")


def _cbc_mac(key: SecretKey128, counter: int, payload: bytes) -> bytes:
    # counter || payload length || payload, zero-padded to the block size
    message = _PREFIX.pack(counter, len(payload)) + bytes(payload)
    remainder = len(message) % BLOCK_SIZE
    if remainder:
        message += bytes(BLOCK_SIZE - remainder)
    chained = AES.new(key.raw, AES.MODE_CBC, iv=bytes(BLOCK_SIZE)).encrypt(message)
    return chained[-BLOCK_SIZE:][:SIGNATURE_SIZE]


def sign_counter(key: SecretKey128, counter: int, payload: bytes) -> SignedMessage:
    """Signs ``payload`` at ``counter`` with a truncated AES-128 CBC-MAC."""
    check_counter(counter)
    return SignedMessage(counter=counter, payload=bytes(payload),
                         signature=_cbc_mac(key, counter, payload))


def verify_counter(key: SecretKey128, msg: SignedMessage, last_seen_counter: int) -> Verdict:
    """
    Checks the signature first, then freshness of the counter.

    Returns:
        Verdict.ACCEPT for a valid signature on a counter above ``last_seen_counter``,
        Verdict.REPLAY for a valid signature on a stale counter, Verdict.FORGERY otherwise.
    """
    expected = _cbc_mac(key, msg.counter, msg.payload)
    if not sodium_memcmp(expected, msg.signature):
        logger.warning("Signature forgery detected at counter %d", msg.counter)
        return Verdict.FORGERY
    if msg.counter <= last_seen_counter:
        logger.warning("Replay detected: counter %d <= last seen %d", msg.counter, last_seen_counter)
        return Verdict.REPLAY
    return Verdict.ACCEPT


def encode_signed(msg: SignedMessage) -> bytes:
    """Wire layout: counter (8) || payload length (4) || payload || signature (8)."""
    return _PREFIX.pack(msg.counter, len(msg.payload)) + msg.payload + msg.signature


def decode_signed(data: bytes) -> SignedMessage:
    if len(data) < _PREFIX.size + SIGNATURE_SIZE:
        raise InvalidInputError(f"signed message too short: {len(data)} bytes")
    counter, length = _PREFIX.unpack_from(data)
    if len(data) != _PREFIX.size + length + SIGNATURE_SIZE:
        raise InvalidInputError("signed message length does not match its header")
    body = data[_PREFIX.size:]
    return SignedMessage(counter=counter, payload=bytes(body[:length]), signature=bytes(body[length:]))
