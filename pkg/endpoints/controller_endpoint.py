import logging
from typing import Callable, List, Mapping, Optional

from cipher.aes import SecretKey128
from cipher.signing import encode_signed, sign_counter
from endpoints.helpers import apply_middleware, determine_route, validate_passkey
from lockproto.audit import AuditEntry, AuditKind, AuditLog
from lockproto.decision import Rejection, UnlockDecision, UnlockRequest
from lockproto.enrollment import EnrollmentRecord
from lockproto.lock_state import LockState, LockStatus
from lockproto.passkey import KeySource, ProtocolMode
from transport.channel import ChannelEndpoint
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)


class LockControllerEndpoint:
    """
    The lock side of the protocol: every frame that reaches the lock goes
    through ``handle``.

    The decode route depends on the configured mode:
    - PLAINTEXT accepts PLAINTEXT_UNLOCK frames carrying the passkey
    - CRYPTO_ONLY accepts SIGNED_DATA frames carrying a CCM envelope
    - STEGO_ONLY accepts STEGO_IMAGE frames with the passkey in the LSB plane
    - STEGO_CRYPTO accepts STEGO_IMAGE frames with an envelope in the LSB plane

    A grant needs authentication (cipher modes), a fresh counter (cipher
    modes) and a matching passkey digest. Every handled frame appends exactly
    one audit entry; the relock timer appends its own.

    Settings:
    - `mode`: the ProtocolMode the lock accepts
    - `relock_after`: simulated seconds before the lock re-latches
    - `key_source`: `enrollment` uses the pre-shared key, `pairing-ltk` the key passed in
    """

    def __init__(self, settings: Mapping, enrollment: Optional[EnrollmentRecord], audit: AuditLog,
                 clock: Callable[[], float], key: Optional[SecretKey128] = None):
        self.settings = settings
        self.enrollment = enrollment
        self.audit = audit
        self.clock = clock
        self.mode = ProtocolMode(settings.get("mode", ProtocolMode.STEGO_CRYPTO))
        self.key = self._select_key(key)
        self.last_seen_counter = 0
        self.state = LockState(relock_after=float(settings.get("relock_after", 5.0)))
        self.handled = 0
        self._result_counter = 0

    def _select_key(self, key: Optional[SecretKey128]) -> Optional[SecretKey128]:
        source = KeySource(self.settings.get("key_source", KeySource.ENROLLMENT))
        if source is KeySource.PAIRING_LTK:
            if key is None:
                raise ValueError("key_source pairing-ltk needs the pairing LTK")
            return key
        return self.enrollment.key if self.enrollment else None

    def handle(self, frame: Frame, source: str = "central") -> UnlockDecision:
        """
        Decides on one frame and records the outcome.
        """
        self.handled += 1
        logger.info("Received %r from %s", frame, source)

        if self.enrollment is None:
            return self._deny(Rejection(AuditKind.NOT_ENROLLED, "lock is not enrolled"), source, None)

        route = determine_route(frame.kind, self.mode)
        if not route:
            logger.error("Frame kind %s not accepted in %s mode", frame.kind.name, self.mode.value)
            return self._deny(Rejection(AuditKind.MALFORMED, f"{frame.kind.name} not accepted"), source, None)
        logger.debug("Decode route: %s", route)

        request = UnlockRequest(frame=frame, source=source, payload=frame.payload)
        rejection = apply_middleware(request, self.settings, self.key, self.last_seen_counter)
        # an authenticated, fresh counter is spent even when a later check fails
        if request.counter is not None and request.counter > self.last_seen_counter:
            self.last_seen_counter = request.counter
        if rejection:
            return self._deny(rejection, source, request.counter)

        rejection = validate_passkey(request.payload, self.enrollment)
        if rejection:
            return self._deny(rejection, source, request.counter)

        now = self.clock()
        self.state = self.state.unlocked(now)
        entry = self._record(AuditKind.UNLOCK_GRANTED, source, request.counter, now)
        logger.info("Unlock granted at t=%.3f, relock at t=%.3f", now, self.state.relock_deadline)
        return UnlockDecision(granted=True, kind=AuditKind.UNLOCK_GRANTED, reason="ok", entry=entry)

    def _deny(self, rejection: Rejection, source: str, counter: Optional[int]) -> UnlockDecision:
        logger.warning("Unlock denied (%s): %s", rejection.kind.value, rejection.reason)
        entry = self._record(rejection.kind, source, counter, self.clock())
        return UnlockDecision(granted=False, kind=rejection.kind, reason=rejection.reason, entry=entry)

    def _record(self, kind: AuditKind, source: str, counter: Optional[int], now: float) -> AuditEntry:
        last = self.audit.last_timestamp
        if last is not None and now < last:
            logger.debug("Clamping audit time %.3f to %.3f", now, last)
            now = last
        return self.audit.append(AuditEntry(timestamp=now, kind=kind, counter=counter,
                                            mode=self.mode, source=source))

    def relock_tick(self, now: float) -> LockState:
        """Re-latches the lock once the relock deadline has passed."""
        deadline = self.state.relock_deadline
        if deadline is not None and now >= deadline:
            self.state = self.state.locked()
            self._record(AuditKind.RELOCK, "relock-timer", None, now)
            logger.info("Relocked at t=%.3f", now)
        return self.state

    @property
    def locked(self) -> bool:
        return self.state.state is LockStatus.LOCKED

    def result_frame(self, decision: UnlockDecision) -> Frame:
        """UNLOCK_RESULT reply: granted flag and audit kind, signed with the application key."""
        body = bytes([int(decision.granted)]) + decision.kind.value.encode("utf-8")
        if self.key is None:
            return Frame(FrameKind.UNLOCK_RESULT, body)
        self._result_counter += 1
        return Frame(FrameKind.UNLOCK_RESULT, encode_signed(sign_counter(self.key, self._result_counter, body)))

    def serve(self, endpoint: ChannelEndpoint, peer: str = "central") -> List[UnlockDecision]:
        """Handles every frame waiting on ``endpoint``, replying to each one."""
        decisions = []
        while endpoint.pending():
            decision = self.handle(endpoint.recv(), peer)
            endpoint.send(self.result_frame(decision))
            decisions.append(decision)
        return decisions
