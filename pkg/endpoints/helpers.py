import logging
from typing import Literal, Mapping, Optional

from cipher.aes import SecretKey128
from lockproto.audit import AuditKind
from lockproto.decision import Rejection, UnlockRequest
from lockproto.enrollment import EnrollmentRecord
from lockproto.passkey import ProtocolMode, digests_match
from middlewares.default_middleware import DefaultMiddleware
from middlewares.envelope_middleware import EnvelopeMiddleware
from middlewares.stego_middleware import StegoMiddleware
from transport.frame import FrameKind

logger = logging.getLogger(__name__)

UnlockRoute = Literal["plaintext", "envelope", "stego"]

_ROUTES = {
    ProtocolMode.PLAINTEXT: (FrameKind.PLAINTEXT_UNLOCK, "plaintext"),
    ProtocolMode.CRYPTO_ONLY: (FrameKind.SIGNED_DATA, "envelope"),
    ProtocolMode.STEGO_ONLY: (FrameKind.STEGO_IMAGE, "stego"),
    ProtocolMode.STEGO_CRYPTO: (FrameKind.STEGO_IMAGE, "stego"),
}


def determine_route(kind: FrameKind, mode: ProtocolMode) -> Optional[UnlockRoute]:
    """
    Determines the decode route for a frame kind under the configured mode.

    Returns:
        The route name, or None if the lock does not accept this kind in this mode
    """
    expected_kind, route = _ROUTES[ProtocolMode(mode)]
    return route if kind is expected_kind else None


def apply_middleware(request: UnlockRequest, settings: Mapping, key: Optional[SecretKey128],
                     last_seen_counter: int) -> Optional[Rejection]:
    """
    Runs the decode layers the configured mode requires.

    :param request: The request travelling through the layers
    :param settings: Controller settings
    :param key: Application key, required by the cipher modes
    :param last_seen_counter: Highest counter accepted so far
    :return: A Rejection if a layer refused the request, otherwise None
    """
    mode = ProtocolMode(settings.get("mode", ProtocolMode.STEGO_CRYPTO))
    try:
        if mode.uses_stego:
            rejection = StegoMiddleware().invoke(request)
            if rejection:
                return rejection
        if mode.uses_cipher:
            rejection = EnvelopeMiddleware(key, last_seen_counter).invoke(request)
            if rejection:
                return rejection
    except (ValueError, TypeError) as e:
        logger.error("Middleware error: %s", e)
        return Rejection(AuditKind.MALFORMED, f"Middleware error: {e}")
    except Exception as e:
        logger.exception("Unexpected error while decoding a frame from %s", request.source)
        return Rejection(AuditKind.MALFORMED, f"Undecodable frame: {type(e).__name__}")

    return DefaultMiddleware().invoke(request)


def validate_passkey(candidate: bytes, enrollment: EnrollmentRecord) -> Optional[Rejection]:
    """
    Compares the candidate with the enrolled passkey digest in constant time.

    :return: A Rejection if the passkey does not match, otherwise None
    """
    if not digests_match(candidate, enrollment.digest):
        return Rejection(AuditKind.UNLOCK_DENIED, "Invalid passkey")
    return None
