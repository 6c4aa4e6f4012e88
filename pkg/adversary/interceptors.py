import logging
from random import Random
from typing import List, Optional, Sequence

from nacl.exceptions import CryptoError
from nacl.public import Box, PrivateKey, PublicKey

from cipher.aes import SecretKey128
from cipher.ccm import CipherEnvelope, ccm_open, ccm_seal
from cipher.errors import AuthenticationError, InvalidInputError, MalformedEnvelopeError
from stego.errors import InvalidImageError, MalformedStegoError
from stego.image import RgbImage, from_png_bytes, to_png_bytes
from stego.lsb import HEADER_BITS, embed, extract
from transport.channel import Direction
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)

UNLOCK_KINDS = frozenset({FrameKind.STEGO_IMAGE, FrameKind.SIGNED_DATA, FrameKind.PLAINTEXT_UNLOCK})


class IdentityRelay:
    """Forwards every frame untouched."""

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        return [frame]


class DropAll:
    """Swallows every frame."""

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        logger.debug("Dropping %r", frame)
        return []


class Chain:
    """Runs interceptors in order; each one sees what the previous one let through."""

    def __init__(self, *interceptors):
        self.interceptors = interceptors

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        frames = [frame]
        for interceptor in self.interceptors:
            frames = [out for f in frames for out in interceptor.intercept(direction, f)]
        return frames


class Eavesdropper:
    """Passive observer: records every frame in both directions and forwards it."""

    def __init__(self):
        self.captured: List[tuple] = []

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        self.captured.append((direction, frame))
        return [frame]

    def frames(self, direction: Optional[Direction] = None, kinds=None) -> List[Frame]:
        return [f for d, f in self.captured
                if (direction is None or d is direction) and (kinds is None or f.kind in kinds)]


def _flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(out)


def tamper_frame(frame: Frame, rng: Random) -> Frame:
    """
    Flips one bit of what an unlock frame carries.

    For a carrier image the flipped bit is an LSB inside the embedded region
    (header plus payload as the public extractor sees it), so the picture
    stays visually identical.
    """
    if frame.kind is FrameKind.STEGO_IMAGE:
        try:
            image = from_png_bytes(frame.payload)
        except InvalidImageError:
            return Frame(frame.kind, _flip_bit(frame.payload, rng.randrange(len(frame.payload) * 8)))
        try:
            region = HEADER_BITS + 8 * len(extract(image))
        except MalformedStegoError:
            region = HEADER_BITS
        flat = image.pixels.reshape(-1).copy()
        flat[rng.randrange(min(region, flat.size))] ^= 1
        return Frame(frame.kind, to_png_bytes(RgbImage(flat.reshape(image.pixels.shape))))
    if not frame.payload:
        return Frame(frame.kind, b"\x00")
    return Frame(frame.kind, _flip_bit(frame.payload, rng.randrange(len(frame.payload) * 8)))


class TamperInterceptor:
    """
    Replaces the first unlock frame toward the lock with ``trials`` single-bit
    tampered copies of it; everything else is forwarded.
    """

    def __init__(self, trials: int, rng: Random):
        self.trials = trials
        self.rng = rng
        self.original: Optional[Frame] = None
        self.injected = 0

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        if self.original is not None or direction is not Direction.TO_PERIPHERAL or frame.kind not in UNLOCK_KINDS:
            return [frame]
        self.original = frame
        tampered = [tamper_frame(frame, self.rng) for _ in range(self.trials)]
        self.injected = len(tampered)
        logger.info("Replacing %r with %d tampered copies", frame, self.injected)
        return tampered


class KeySubstitutionRelay:
    """
    Active man in the middle of a modeled public-key exchange.

    Both PUBLIC_KEY frames are replaced with the attacker's own key. BOX_DATA
    from victim 1 is opened with the attacker's private key and re-encrypted
    for victim 2. Unlock frames are treated the same way: the attacker tries
    to open what it sees with the key it believes the victims agreed on, then
    re-seals its version and forwards that.
    """

    def __init__(self, rng: Random, replacement: Optional[bytes] = None):
        self.rng = rng
        self.private_key = PrivateKey.from_seed(rng.randbytes(32))
        self.replacement = replacement
        self.victim_keys = {}
        self.read: List[bytes] = []
        self.relayed = 0

    @property
    def public_key(self) -> bytes:
        return bytes(self.private_key.public_key)

    def _box(self, peer_public: bytes):
        return Box(self.private_key, PublicKey(peer_public))

    def session_key(self) -> SecretKey128:
        """The 128-bit application key the attacker shares with victim 1."""
        peer = self.victim_keys.get(Direction.TO_PERIPHERAL, self.public_key)
        return SecretKey128(self._box(peer).shared_key()[:16])

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        if frame.kind is FrameKind.PUBLIC_KEY:
            self.victim_keys[direction] = frame.payload
            logger.info("Substituting public key on %s", direction.value)
            return [Frame(FrameKind.PUBLIC_KEY, self.public_key)]
        if frame.kind is FrameKind.BOX_DATA and direction is Direction.TO_PERIPHERAL:
            return [self._relay_box(frame)]
        if frame.kind in UNLOCK_KINDS and direction is Direction.TO_PERIPHERAL:
            return [self._relay_unlock(frame)]
        return [frame]

    def _relay_box(self, frame: Frame) -> Frame:
        try:
            message = self._box(self.victim_keys[Direction.TO_PERIPHERAL]).decrypt(frame.payload)
        except (CryptoError, KeyError) as e:
            logger.warning("Could not open victim 1's box: %s", e)
            return frame
        self.read.append(message)
        outgoing = self.replacement if self.replacement is not None else message
        nonce = self.rng.randbytes(24)
        self.relayed += 1
        return Frame(FrameKind.BOX_DATA, bytes(self._box(self.victim_keys[Direction.TO_CENTRAL]).encrypt(outgoing, nonce)))

    def _relay_unlock(self, frame: Frame) -> Frame:
        if frame.kind is FrameKind.PLAINTEXT_UNLOCK:
            self.read.append(frame.payload)
            return frame

        image: Optional[RgbImage] = None
        carried = frame.payload
        if frame.kind is FrameKind.STEGO_IMAGE:
            try:
                image = from_png_bytes(frame.payload)
                carried = extract(image)
            except (InvalidImageError, MalformedStegoError):
                return frame

        try:
            env = CipherEnvelope.from_bytes(carried)
        except (MalformedEnvelopeError, InvalidInputError):
            # no cipher layer: the carried bytes are the secret
            self.read.append(carried)
            return frame

        key = self.session_key()
        try:
            plaintext = ccm_open(key, env)
            self.read.append(plaintext)
        except AuthenticationError:
            logger.info("Envelope does not open under the substituted key")
            plaintext = self.replacement or env.ciphertext
        forged = ccm_seal(key, env.counter, plaintext).to_bytes()
        self.relayed += 1
        if image is None:
            return Frame(frame.kind, forged)
        try:
            return Frame(frame.kind, to_png_bytes(embed(image, forged)))
        except ValueError:
            return frame
