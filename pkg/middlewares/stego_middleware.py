import logging
from typing import Optional

from lockproto.audit import AuditKind
from lockproto.decision import Rejection, UnlockRequest
from stego.errors import InvalidImageError, MalformedStegoError
from stego.image import from_png_bytes
from stego.lsb import extract

logger = logging.getLogger(__name__)


class StegoMiddleware:
    """
    The stego-layer: decodes the PNG carried by a STEGO_IMAGE frame and
    replaces the request payload with the bytes hidden in its LSB plane.
    """

    def invoke(self, request: UnlockRequest) -> Optional[Rejection]:
        """
        Extract the hidden payload.

        Returns:
            A malformed rejection when the carrier is not a PNG or carries
            no well-formed payload, otherwise None.
        """
        try:
            image = from_png_bytes(request.payload)
            hidden = extract(image)
        except (InvalidImageError, MalformedStegoError) as e:
            logger.warning("Stego extraction failed: %s", e)
            return Rejection(AuditKind.MALFORMED, str(e))

        logger.debug("Extracted %d hidden bytes from %dx%d carrier", len(hidden), image.width, image.height)
        request.payload = hidden
        return None
