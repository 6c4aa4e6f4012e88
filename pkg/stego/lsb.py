import logging
import math
from dataclasses import dataclass

import numpy as np

from stego.errors import CapacityError, InvalidImageError, MalformedStegoError
from stego.image import RgbImage

logger = logging.getLogger(__name__)

HEADER_BYTES = 4
HEADER_BITS = HEADER_BYTES * 8


@dataclass(frozen=True)
class StegoStats:
    changed_subpixels: int
    max_channel_delta: int
    psnr_db: float


def capacity(image: RgbImage) -> int:
    """Payload bytes the image can carry after the 4-byte length header."""
    return max(image.subpixels // 8 - HEADER_BYTES, 0)


def embed(cover: RgbImage, payload: bytes) -> RgbImage:
    """
    Hides ``payload`` in the least-significant bits of ``cover``.

    The first 32 bits carry the payload length (big-endian), followed by the
    payload bits MSB-first, one bit per subpixel in row-major r, g, b order.
    Subpixels past the payload keep their original LSB.

    Raises:
        CapacityError: the payload is larger than ``capacity(cover)``, or the
            cover is too small for the length header.
    """
    available = capacity(cover)
    if len(payload) > available or HEADER_BITS + 8 * len(payload) > cover.subpixels:
        raise CapacityError(required=len(payload), available=available)

    message = len(payload).to_bytes(HEADER_BYTES, "big") + bytes(payload)
    bits = np.unpackbits(np.frombuffer(message, dtype=np.uint8))
    flat = cover.pixels.reshape(-1).copy()
    flat[:bits.size] = (flat[:bits.size] & 0xFE) | bits
    logger.debug("Embedded %d payload bytes into %dx%d cover", len(payload), cover.width, cover.height)
    return RgbImage(flat.reshape(cover.pixels.shape))


def extract(stego: RgbImage) -> bytes:
    """
    Reads a length-prefixed payload back out of the LSB plane.

    Raises:
        MalformedStegoError: the image is too small for a header, or the
            declared length exceeds the image capacity.
    """
    flat = stego.pixels.reshape(-1)
    if flat.size < HEADER_BITS:
        raise MalformedStegoError("image too small to carry a length header")
    lsb = flat & 1
    length = int.from_bytes(np.packbits(lsb[:HEADER_BITS]).tobytes(), "big")
    available = capacity(stego)
    if length > available:
        raise MalformedStegoError(f"declared payload of {length} bytes exceeds capacity {available}")
    return np.packbits(lsb[HEADER_BITS:HEADER_BITS + length * 8]).tobytes()


def measure(cover: RgbImage, stego: RgbImage) -> StegoStats:
    """Per-subpixel distortion between a cover and its stego image."""
    if cover.pixels.shape != stego.pixels.shape:
        raise InvalidImageError(
            f"dimension mismatch: {cover.width}x{cover.height} vs {stego.width}x{stego.height}")
    diff = np.abs(cover.pixels.astype(np.int16) - stego.pixels.astype(np.int16))
    changed = int(np.count_nonzero(diff))
    if changed == 0:
        return StegoStats(changed_subpixels=0, max_channel_delta=0, psnr_db=math.inf)
    mse = float(np.sum(diff.astype(np.float64) ** 2)) / diff.size
    return StegoStats(changed_subpixels=changed, max_channel_delta=int(diff.max()),
                      psnr_db=10.0 * math.log10(255.0 ** 2 / mse))
