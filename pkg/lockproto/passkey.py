import enum
from dataclasses import dataclass
from typing import Union

from nacl.bindings import sodium_memcmp
from nacl.encoding import RawEncoder
from nacl.hash import sha256

PASSKEY_MIN = 4
PASSKEY_MAX = 64


class InvalidPasskeyError(ValueError):
    """Raised for passkeys outside 4..64 UTF-8 bytes."""


class ProtocolMode(str, enum.Enum):
    PLAINTEXT = "plaintext"
    CRYPTO_ONLY = "crypto-only"
    STEGO_ONLY = "stego-only"
    STEGO_CRYPTO = "stego-crypto"

    @property
    def uses_stego(self) -> bool:
        return self in (ProtocolMode.STEGO_ONLY, ProtocolMode.STEGO_CRYPTO)

    @property
    def uses_cipher(self) -> bool:
        return self in (ProtocolMode.CRYPTO_ONLY, ProtocolMode.STEGO_CRYPTO)


class KeySource(str, enum.Enum):
    ENROLLMENT = "enrollment"
    PAIRING_LTK = "pairing-ltk"


@dataclass(frozen=True)
class Passkey:
    """The secret a keyholder types into the app."""

    text: str

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise InvalidPasskeyError("passkey must be text")
        size = len(self.text.encode("utf-8"))
        if not PASSKEY_MIN <= size <= PASSKEY_MAX:
            raise InvalidPasskeyError(f"passkey must be {PASSKEY_MIN}..{PASSKEY_MAX} UTF-8 bytes, got {size}")

    def encode(self) -> bytes:
        return self.text.encode("utf-8")

    def __repr__(self) -> str:
        return "Passkey(<redacted>)"


def passkey_digest(passkey: Union[Passkey, bytes]) -> bytes:
    """32-byte SHA-256 digest; the lock stores this, never the passkey."""
    data = passkey.encode() if isinstance(passkey, Passkey) else bytes(passkey)
    return sha256(data, encoder=RawEncoder)


def digests_match(candidate: bytes, stored_digest: bytes) -> bool:
    """Constant-time, full-length comparison of the candidate's digest with the stored one."""
    return sodium_memcmp(passkey_digest(candidate), stored_digest)
