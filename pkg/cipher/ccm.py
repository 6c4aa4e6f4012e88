import logging
import struct
from dataclasses import dataclass

from Crypto.Cipher import AES

from cipher.aes import SecretKey128, check_counter
from cipher.errors import (AuthenticationError, CapacityError,
                           InvalidInputError, MalformedEnvelopeError)

logger = logging.getLogger(__name__)

MIC_SIZE = 4
MAX_PLAINTEXT = 65535
# counter + mic; the wire form adds a 2-byte length
ENVELOPE_OVERHEAD = 12
WIRE_OVERHEAD = 14
_NONCE_PAD = bytes(5)
_HEADER = struct.Struct(">QH")


@dataclass(frozen=True)
class CipherEnvelope:
    """
    An AES-128/CCM sealed message: sender counter, ciphertext and a 4-byte MIC.

    Wire layout: counter (8, big-endian) || ciphertext length (2, big-endian)
    || ciphertext || mic (4).
    """

    counter: int
    ciphertext: bytes
    mic: bytes

    def __post_init__(self):
        check_counter(self.counter)
        if len(self.mic) != MIC_SIZE:
            raise InvalidInputError(f"mic must be exactly {MIC_SIZE} bytes")
        if len(self.ciphertext) > MAX_PLAINTEXT:
            raise InvalidInputError("ciphertext longer than 65535 bytes")

    def to_bytes(self) -> bytes:
        return _HEADER.pack(self.counter, len(self.ciphertext)) + self.ciphertext + self.mic

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherEnvelope":
        if len(data) < _HEADER.size + MIC_SIZE:
            raise MalformedEnvelopeError(f"envelope too short: {len(data)} bytes")
        counter, length = _HEADER.unpack_from(data)
        expected = _HEADER.size + length + MIC_SIZE
        if len(data) != expected:
            raise MalformedEnvelopeError(
                f"envelope declares {length} ciphertext bytes, size {len(data)} != {expected}")
        body = data[_HEADER.size:]
        return cls(counter=counter, ciphertext=bytes(body[:length]), mic=bytes(body[length:]))


def envelope_size(plaintext_length: int) -> int:
    """Serialized size of an envelope around a plaintext of the given length."""
    return plaintext_length + WIRE_OVERHEAD


def _nonce(counter: int) -> bytes:
    # 13-byte nonce leaves L=2, i.e. messages up to 65535 bytes
    return _NONCE_PAD + counter.to_bytes(8, "big")


def _ccm(key: SecretKey128, counter: int, length: int):
    return AES.new(key.raw, AES.MODE_CCM, nonce=_nonce(counter), mac_len=MIC_SIZE,
                   msg_len=length, assoc_len=0)


def ccm_seal(key: SecretKey128, counter: int, plaintext: bytes) -> CipherEnvelope:
    """
    Encrypts and authenticates ``plaintext`` under ``key`` at ``counter``.

    The caller owns counter uniqueness per key; the lock client enforces it.

    Raises:
        CapacityError: plaintext empty or longer than 65535 bytes.
    """
    check_counter(counter)
    if not plaintext:
        raise CapacityError("plaintext must not be empty")
    if len(plaintext) > MAX_PLAINTEXT:
        raise CapacityError(f"plaintext of {len(plaintext)} bytes exceeds {MAX_PLAINTEXT}")
    ciphertext, mic = _ccm(key, counter, len(plaintext)).encrypt_and_digest(bytes(plaintext))
    return CipherEnvelope(counter=counter, ciphertext=ciphertext, mic=mic)


def ccm_open(key: SecretKey128, env: CipherEnvelope) -> bytes:
    """
    Verifies the MIC and returns the plaintext.

    Raises:
        AuthenticationError: the MIC does not verify under ``key``.
    """
    if not env.ciphertext:
        raise MalformedEnvelopeError("envelope carries no ciphertext")
    try:
        return _ccm(key, env.counter, len(env.ciphertext)).decrypt_and_verify(env.ciphertext, env.mic)
    except ValueError:
        logger.debug("MIC check failed for counter %d", env.counter)
        raise AuthenticationError("MIC verification failed") from None
