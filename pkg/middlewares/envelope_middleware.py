import logging
from typing import Optional

from cipher.aes import SecretKey128
from cipher.ccm import CipherEnvelope, ccm_open
from cipher.errors import AuthenticationError, InvalidInputError, MalformedEnvelopeError
from lockproto.audit import AuditKind
from lockproto.decision import Rejection, UnlockRequest

logger = logging.getLogger(__name__)


class EnvelopeMiddleware:
    """
    Opens the CCM envelope carried by a request and enforces counter freshness.

    Authentication is checked before freshness, so a forged envelope is
    reported as an auth failure even when its counter is stale.
    """

    def __init__(self, key: Optional[SecretKey128], last_seen_counter: int):
        """
        Args:
            key: The application key shared with the keyholder.
            last_seen_counter: Highest counter accepted so far.

        Raises:
            ValueError: If key is None.
        """
        if key is None:
            logger.error("Application key is required")
            raise ValueError("key is required")
        self.key = key
        self.last_seen_counter = last_seen_counter

    def invoke(self, request: UnlockRequest) -> Optional[Rejection]:
        try:
            env = CipherEnvelope.from_bytes(request.payload)
        except (MalformedEnvelopeError, InvalidInputError) as e:
            logger.warning("Malformed envelope: %s", e)
            return Rejection(AuditKind.MALFORMED, str(e))

        try:
            plaintext = ccm_open(self.key, env)
        except AuthenticationError as e:
            logger.warning("Envelope at counter %d failed authentication", env.counter)
            return Rejection(AuditKind.AUTH_FAILURE, str(e))
        except MalformedEnvelopeError as e:
            return Rejection(AuditKind.MALFORMED, str(e))

        request.counter = env.counter

        if env.counter <= self.last_seen_counter:
            logger.warning("Replay: counter %d <= last seen %d", env.counter, self.last_seen_counter)
            return Rejection(AuditKind.REPLAY, f"counter {env.counter} is not fresh")

        logger.info("Envelope verified at counter %d", env.counter)
        request.payload = plaintext
        return None
