import secrets
from dataclasses import dataclass
from random import Random
from typing import Optional

from Crypto.Cipher import AES

from cipher.errors import InvalidInputError

BLOCK_SIZE = 16
KEY_SIZE = 16
COUNTER_MAX = 2**64 - 1


@dataclass(frozen=True)
class SecretKey128:
    """
    A 128-bit symmetric key.

    The same type is used for the pre-shared application key and for every
    pairing key (TK, STK, LTK, CSRK, IRK).
    """

    raw: bytes

    def __post_init__(self):
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != KEY_SIZE:
            raise InvalidInputError(f"key must be exactly {KEY_SIZE} bytes")
        object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def from_hex(cls, value: str) -> "SecretKey128":
        try:
            return cls(bytes.fromhex(value))
        except ValueError as e:
            raise InvalidInputError(f"invalid key hex: {e}") from e

    @classmethod
    def generate(cls, rng: Optional[Random] = None) -> "SecretKey128":
        """Draws a key from ``rng`` when given (simulation), otherwise from the OS."""
        if rng is None:
            return cls(secrets.token_bytes(KEY_SIZE))
        return cls(rng.randbytes(KEY_SIZE))

    def hex(self) -> str:
        return self.raw.hex()

    def __repr__(self) -> str:
        return "SecretKey128(<redacted>)"


def _check_block(block: bytes) -> None:
    if len(block) != BLOCK_SIZE:
        raise InvalidInputError(f"block must be exactly {BLOCK_SIZE} bytes, got {len(block)}")


def aes128_encrypt_block(key: SecretKey128, block: bytes) -> bytes:
    """Forward AES-128 transform of a single 16-byte block."""
    _check_block(block)
    return AES.new(key.raw, AES.MODE_ECB).encrypt(bytes(block))


def aes128_decrypt_block(key: SecretKey128, block: bytes) -> bytes:
    """Inverse AES-128 transform of a single 16-byte block."""
    _check_block(block)
    return AES.new(key.raw, AES.MODE_ECB).decrypt(bytes(block))


def check_counter(counter: int) -> None:
    if not isinstance(counter, int) or counter < 0 or counter > COUNTER_MAX:
        raise InvalidInputError("counter must be an unsigned 64-bit integer")
