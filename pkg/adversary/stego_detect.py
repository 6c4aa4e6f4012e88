import logging
from dataclasses import dataclass

from stego.errors import InvalidImageError, MalformedStegoError
from stego.image import from_png_bytes
from stego.lsb import extract
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StegDetection:
    detected: bool
    payload: bytes = b""


def steg_detect(frame: Frame) -> StegDetection:
    """
    Runs the public LSB extractor on a captured STEGO_IMAGE frame.

    An image whose length header does not fit its capacity is treated as
    carrying nothing.
    """
    if frame.kind is not FrameKind.STEGO_IMAGE:
        return StegDetection(False)
    try:
        hidden = extract(from_png_bytes(frame.payload))
    except (InvalidImageError, MalformedStegoError) as e:
        logger.debug("No hidden payload: %s", e)
        return StegDetection(False)
    logger.info("Hidden payload of %d bytes found in carrier", len(hidden))
    return StegDetection(len(hidden) > 0, hidden)
