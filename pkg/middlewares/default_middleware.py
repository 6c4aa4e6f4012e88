import logging
from typing import Optional

from lockproto.audit import AuditKind
from lockproto.decision import Rejection, UnlockRequest
from lockproto.passkey import PASSKEY_MAX, PASSKEY_MIN

logger = logging.getLogger(__name__)


class DefaultMiddleware:
    """
    The last decode layer every request passes through: whatever the earlier
    layers left in ``payload`` is the candidate passkey, and it has to have
    the shape of one.
    """

    def invoke(self, request: UnlockRequest) -> Optional[Rejection]:
        """
        Check the candidate passkey length after the mode-specific layers ran.

        A candidate that came out of an authenticated envelope is a wrong
        passkey; anything else of the wrong size is a malformed frame.
        """
        size = len(request.payload)
        logger.debug("Candidate passkey of %d bytes from %s", size, request.source)
        if PASSKEY_MIN <= size <= PASSKEY_MAX:
            return None
        if request.counter is not None:
            logger.warning("Authenticated candidate of %d bytes is not the passkey", size)
            return Rejection(AuditKind.UNLOCK_DENIED, f"candidate passkey of {size} bytes")
        logger.warning("Candidate of %d bytes is not a passkey", size)
        return Rejection(AuditKind.MALFORMED, f"candidate passkey of {size} bytes")
