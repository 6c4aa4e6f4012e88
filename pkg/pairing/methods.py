import enum
import logging
from dataclasses import dataclass
from typing import Optional

from cipher.aes import SecretKey128, aes128_encrypt_block
from cipher.errors import InvalidInputError

logger = logging.getLogger(__name__)

RANDOM_SIZE = 16
PASSKEY_MAX = 999999


class IoCapability(enum.IntEnum):
    NO_INPUT_NO_OUTPUT = 0
    DISPLAY_ONLY = 1
    KEYBOARD_ONLY = 2
    KEYBOARD_DISPLAY = 3

    @property
    def has_keyboard(self) -> bool:
        return self in (IoCapability.KEYBOARD_ONLY, IoCapability.KEYBOARD_DISPLAY)

    @property
    def can_display(self) -> bool:
        return self in (IoCapability.DISPLAY_ONLY, IoCapability.KEYBOARD_DISPLAY)


class PairingMethod(str, enum.Enum):
    JUST_WORKS = "just-works"
    PASSKEY_ENTRY = "passkey-entry"
    OUT_OF_BAND = "out-of-band"


@dataclass(frozen=True)
class SessionKeys:
    stk: SecretKey128
    ltk: SecretKey128
    csrk: SecretKey128
    irk: SecretKey128

    def to_dict(self) -> dict:
        return {"stk": self.stk.hex(), "ltk": self.ltk.hex(), "csrk": self.csrk.hex(), "irk": self.irk.hex()}


def select_method(initiator: IoCapability, responder: IoCapability, oob_available: bool) -> PairingMethod:
    """
    Legacy-pairing method selection.

    Out of band wins when both sides have OOB data; passkey entry needs a
    keyboard on one side and a display on the other; everything else falls
    back to JustWorks.
    """
    if oob_available:
        return PairingMethod.OUT_OF_BAND
    if (initiator.has_keyboard and responder.can_display) or (responder.has_keyboard and initiator.can_display):
        return PairingMethod.PASSKEY_ENTRY
    return PairingMethod.JUST_WORKS


def derive_tk(method: PairingMethod, passkey: Optional[int] = None, oob_value: Optional[bytes] = None) -> SecretKey128:
    """
    Temporary key for the chosen method.

    Raises:
        InvalidInputError: passkey missing or outside 0..999999, or OOB value missing.
    """
    if method is PairingMethod.JUST_WORKS:
        return SecretKey128(bytes(16))
    if method is PairingMethod.PASSKEY_ENTRY:
        if passkey is None or isinstance(passkey, bool) or not 0 <= passkey <= PASSKEY_MAX:
            raise InvalidInputError("passkey entry requires a passkey in 0..999999")
        return SecretKey128(passkey.to_bytes(16, "big"))
    if oob_value is None:
        raise InvalidInputError("out-of-band pairing requires a 16-byte OOB value")
    return SecretKey128(oob_value)


def _check_random(value: bytes) -> None:
    if len(value) != RANDOM_SIZE:
        raise InvalidInputError(f"pairing random must be {RANDOM_SIZE} bytes")


def confirm_value(tk: SecretKey128, rand: bytes) -> bytes:
    """Commitment to ``rand`` published before the random itself is revealed."""
    _check_random(rand)
    return aes128_encrypt_block(tk, rand)


def derive_stk(tk: SecretKey128, mrand: bytes, srand: bytes) -> SecretKey128:
    """STK = AES-128_TK(low 8 bytes of srand || low 8 bytes of mrand)."""
    _check_random(mrand)
    _check_random(srand)
    return SecretKey128(aes128_encrypt_block(tk, srand[8:] + mrand[8:]))


def private_address(irk: SecretKey128, public_address: bytes) -> str:
    """IRK-derived private address, used for logging only."""
    if len(public_address) != 6:
        raise InvalidInputError("public address must be 6 bytes")
    digest = aes128_encrypt_block(irk, public_address + bytes(10))
    return ":".join(f"{b:02x}" for b in digest[-6:])
