import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from cipher.aes import COUNTER_MAX, SecretKey128
from cipher.ccm import ccm_seal
from cipher.errors import AuthenticationError, CounterExhaustedError, InvalidInputError
from cipher.signing import Verdict, decode_signed, verify_counter
from lockproto.audit import AuditKind
from lockproto.passkey import Passkey, ProtocolMode
from stego.errors import CapacityError
from stego.image import RgbImage, to_png_bytes
from stego.lsb import capacity, embed
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)


def client_unlock(passkey: Union[Passkey, str], cover: Optional[RgbImage], mode: ProtocolMode,
                  key: Optional[SecretKey128], counter: Optional[int]) -> Frame:
    """
    Builds the unlock request for ``mode``: the passkey is encrypted first
    and the ciphertext is then hidden in the cover image.

    Raises:
        CapacityError: the cover cannot hold the payload; nothing is sent.
        InvalidInputError: a cipher mode without key or counter, or a stego mode without cover.
    """
    if not isinstance(passkey, Passkey):
        passkey = Passkey(passkey)
    mode = ProtocolMode(mode)
    secret = passkey.encode()

    if mode is ProtocolMode.PLAINTEXT:
        return Frame(FrameKind.PLAINTEXT_UNLOCK, secret)

    if mode.uses_cipher:
        if key is None or counter is None:
            raise InvalidInputError(f"{mode.value} needs a key and a counter")
        payload = ccm_seal(key, counter, secret).to_bytes()
    else:
        payload = secret

    if not mode.uses_stego:
        return Frame(FrameKind.SIGNED_DATA, payload)

    if cover is None:
        raise InvalidInputError(f"{mode.value} needs a cover image")
    if len(payload) > capacity(cover):
        raise CapacityError(required=len(payload), available=capacity(cover))
    stego = embed(cover, payload)
    logger.debug("Embedded %d byte payload in %dx%d cover", len(payload), cover.width, cover.height)
    return Frame(FrameKind.STEGO_IMAGE, to_png_bytes(stego))


def read_result(frame: Frame, key: Optional[SecretKey128], last_seen: int = 0) -> Tuple[bool, AuditKind, int]:
    """
    Verifies the lock's signed UNLOCK_RESULT.

    Returns:
        (granted, audit kind, result counter)

    Raises:
        AuthenticationError: forged or replayed result.
    """
    if frame.kind is not FrameKind.UNLOCK_RESULT:
        raise InvalidInputError(f"expected UNLOCK_RESULT, got {frame.kind.name}")
    if key is None:
        body, counter = frame.payload, 0
    else:
        msg = decode_signed(frame.payload)
        verdict = verify_counter(key, msg, last_seen)
        if verdict is not Verdict.ACCEPT:
            raise AuthenticationError(f"unlock result rejected: {verdict.value}")
        body, counter = msg.payload, msg.counter
    if not body:
        raise InvalidInputError("empty unlock result")
    return bool(body[0]), AuditKind(body[1:].decode("utf-8")), counter


@dataclass
class KeyholderClient:
    """
    The keyholder's app: owns the application key and the sender counter.

    The counter starts at 1 and strictly increases; it never wraps.
    """

    mode: ProtocolMode
    key: Optional[SecretKey128]
    counter: int = 0
    last_result_counter: int = 0

    def next_counter(self) -> int:
        if self.counter >= COUNTER_MAX:
            raise CounterExhaustedError("sender counter exhausted")
        self.counter += 1
        return self.counter

    def unlock(self, passkey: Union[Passkey, str], cover: Optional[RgbImage] = None) -> Frame:
        counter = self.next_counter() if self.mode.uses_cipher else None
        return client_unlock(passkey, cover, self.mode, self.key, counter)

    def accept_result(self, frame: Frame) -> Tuple[bool, AuditKind]:
        granted, kind, counter = read_result(frame, self.key, self.last_result_counter)
        self.last_result_counter = max(self.last_result_counter, counter)
        return granted, kind
