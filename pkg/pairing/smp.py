import enum
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from random import Random
from typing import Dict, Iterable, List, Optional, Tuple

from cipher.aes import SecretKey128
from cipher.ccm import CipherEnvelope, ccm_open, ccm_seal
from cipher.errors import AuthenticationError, InvalidInputError, MalformedEnvelopeError
from pairing.methods import (IoCapability, PairingMethod, SessionKeys, confirm_value,
                             derive_stk, derive_tk, private_address, select_method)
from transport.channel import ChannelEndpoint, DisconnectError, SimulatedChannel
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)

MAX_KEY_SIZE = 16
KEY_DIST_ALL = 0b111
_FEATURES = struct.Struct(">BBBB")


class Role(str, enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class KeyId(enum.IntEnum):
    LTK = 1
    CSRK = 2
    IRK = 3


class PairingFailedError(Exception):
    """Pairing aborted; ``reason`` tells which check failed."""

    CONFIRM_MISMATCH = "confirm-mismatch"
    MIC_FAILURE = "mic-failure"
    OUT_OF_ORDER = "out-of-order"
    DISCONNECTED = "disconnected"
    INVALID_FRAME = "invalid-frame"

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"pairing failed ({reason}){': ' + detail if detail else ''}")
        self.reason = reason


@dataclass
class PairingConfig:
    io_capability: IoCapability = IoCapability.NO_INPUT_NO_OUTPUT
    passkey: Optional[int] = None
    oob_data: Optional[bytes] = None
    seed: int = 0
    public_address: bytes = bytes(6)


@dataclass(frozen=True)
class PairingFeatures:
    """PAIR_REQ / PAIR_RSP payload: io capability, oob flag, max key size, key distribution."""

    io_capability: IoCapability
    oob: bool
    max_key_size: int = MAX_KEY_SIZE
    key_distribution: int = KEY_DIST_ALL

    def to_bytes(self) -> bytes:
        return _FEATURES.pack(self.io_capability, int(self.oob), self.max_key_size, self.key_distribution)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PairingFeatures":
        if len(data) != _FEATURES.size:
            raise InvalidInputError(f"pairing features must be {_FEATURES.size} bytes")
        io, oob, size, dist = _FEATURES.unpack(data)
        if size != MAX_KEY_SIZE:
            raise InvalidInputError(f"unsupported key size {size}")
        return cls(IoCapability(io), bool(oob), size, dist)


def encode_key_dist(key_id: KeyId, env: CipherEnvelope) -> bytes:
    return bytes([key_id]) + env.to_bytes()


def decode_key_dist(data: bytes) -> Tuple[KeyId, CipherEnvelope]:
    if not data:
        raise InvalidInputError("empty KEY_DIST payload")
    return KeyId(data[0]), CipherEnvelope.from_bytes(data[1:])


@dataclass
class PairingTranscript:
    """The SMP frames of one pairing, as an observer on the link saw them."""

    request: Optional[PairingFeatures] = None
    response: Optional[PairingFeatures] = None
    confirms: List[bytes] = field(default_factory=list)
    randoms: List[bytes] = field(default_factory=list)
    key_dist: List[Tuple[KeyId, CipherEnvelope]] = field(default_factory=list)

    @classmethod
    def from_frames(cls, frames: Iterable[Frame]) -> "PairingTranscript":
        transcript = cls()
        for frame in frames:
            try:
                transcript.record(frame)
            except (InvalidInputError, MalformedEnvelopeError, ValueError) as e:
                logger.debug("Skipping unparsable %r: %s", frame, e)
        return transcript

    def record(self, frame: Frame) -> None:
        if frame.kind is FrameKind.PAIR_REQ:
            self.request = PairingFeatures.from_bytes(frame.payload)
        elif frame.kind is FrameKind.PAIR_RSP:
            self.response = PairingFeatures.from_bytes(frame.payload)
        elif frame.kind is FrameKind.PAIR_CONFIRM:
            self.confirms.append(frame.payload)
        elif frame.kind is FrameKind.PAIR_RANDOM:
            self.randoms.append(frame.payload)
        elif frame.kind is FrameKind.KEY_DIST:
            self.key_dist.append(decode_key_dist(frame.payload))

    @property
    def method(self) -> Optional[PairingMethod]:
        if self.request is None or self.response is None:
            return None
        return select_method(self.request.io_capability, self.response.io_capability,
                             self.request.oob and self.response.oob)


class _Session:
    """Single-threaded SMP state machine for one side of one connection."""

    def __init__(self, endpoint: ChannelEndpoint, role: Role, config: PairingConfig):
        self.endpoint = endpoint
        self.role = role
        self.config = config
        self.rng = Random(config.seed)

    def fail(self, reason: str, detail: str = "") -> PairingFailedError:
        logger.error("Pairing failed on %s side: %s %s", self.role.value, reason, detail)
        self.endpoint.close()
        return PairingFailedError(reason, detail)

    def expect(self, kind: FrameKind) -> Frame:
        try:
            frame = self.endpoint.recv()
        except DisconnectError as e:
            raise self.fail(PairingFailedError.DISCONNECTED, str(e)) from e
        if frame.kind is not kind:
            raise self.fail(PairingFailedError.OUT_OF_ORDER, f"expected {kind.name}, got {frame.kind.name}")
        return frame

    def send(self, kind: FrameKind, payload: bytes) -> None:
        try:
            self.endpoint.send(Frame(kind, payload))
        except DisconnectError as e:
            raise self.fail(PairingFailedError.DISCONNECTED, str(e)) from e

    def features(self) -> PairingFeatures:
        return PairingFeatures(self.config.io_capability, self.config.oob_data is not None)

    def peer_features(self, frame: Frame) -> PairingFeatures:
        try:
            return PairingFeatures.from_bytes(frame.payload)
        except (InvalidInputError, ValueError) as e:
            raise self.fail(PairingFailedError.INVALID_FRAME, str(e)) from e

    def temporary_key(self, initiator: PairingFeatures, responder: PairingFeatures) -> SecretKey128:
        method = select_method(initiator.io_capability, responder.io_capability, initiator.oob and responder.oob)
        logger.info("Phase 1 complete on %s side: method %s", self.role.value, method.value)
        try:
            return derive_tk(method, self.config.passkey, self.config.oob_data)
        except InvalidInputError as e:
            raise self.fail(PairingFailedError.INVALID_FRAME, str(e)) from e

    def check_confirm(self, tk: SecretKey128, confirm: bytes, rand: bytes) -> None:
        if len(rand) != 16 or confirm_value(tk, rand) != confirm:
            raise self.fail(PairingFailedError.CONFIRM_MISMATCH)

    def run(self) -> SessionKeys:
        if self.role is Role.INITIATOR:
            return self._run_initiator()
        return self._run_responder()

    def _run_initiator(self) -> SessionKeys:
        ours = self.features()
        self.send(FrameKind.PAIR_REQ, ours.to_bytes())
        theirs = self.peer_features(self.expect(FrameKind.PAIR_RSP))
        tk = self.temporary_key(ours, theirs)

        mrand = self.rng.randbytes(16)
        self.send(FrameKind.PAIR_CONFIRM, confirm_value(tk, mrand))
        sconfirm = self.expect(FrameKind.PAIR_CONFIRM).payload
        self.send(FrameKind.PAIR_RANDOM, mrand)
        srand = self.expect(FrameKind.PAIR_RANDOM).payload
        self.check_confirm(tk, sconfirm, srand)
        stk = derive_stk(tk, mrand, srand)
        logger.info("Phase 2 complete on initiator side")

        keys: Dict[KeyId, SecretKey128] = {}
        last_counter = 0
        for _ in KeyId:
            frame = self.expect(FrameKind.KEY_DIST)
            try:
                key_id, env = decode_key_dist(frame.payload)
                if env.counter <= last_counter or key_id in keys:
                    raise self.fail(PairingFailedError.OUT_OF_ORDER, "stale or duplicate key distribution")
                keys[key_id] = SecretKey128(ccm_open(stk, env))
                last_counter = env.counter
            except AuthenticationError as e:
                raise self.fail(PairingFailedError.MIC_FAILURE, "key distribution frame rejected") from e
            except (InvalidInputError, ValueError) as e:
                raise self.fail(PairingFailedError.INVALID_FRAME, str(e)) from e
        logger.info("Phase 3 complete on initiator side")
        return SessionKeys(stk=stk, ltk=keys[KeyId.LTK], csrk=keys[KeyId.CSRK], irk=keys[KeyId.IRK])

    def _run_responder(self) -> SessionKeys:
        theirs = self.peer_features(self.expect(FrameKind.PAIR_REQ))
        ours = self.features()
        self.send(FrameKind.PAIR_RSP, ours.to_bytes())
        tk = self.temporary_key(theirs, ours)

        mconfirm = self.expect(FrameKind.PAIR_CONFIRM).payload
        srand = self.rng.randbytes(16)
        self.send(FrameKind.PAIR_CONFIRM, confirm_value(tk, srand))
        mrand = self.expect(FrameKind.PAIR_RANDOM).payload
        self.check_confirm(tk, mconfirm, mrand)
        self.send(FrameKind.PAIR_RANDOM, srand)
        stk = derive_stk(tk, mrand, srand)
        logger.info("Phase 2 complete on responder side")

        distributed = self._generate_keys()
        for counter, key_id in enumerate(KeyId, start=1):
            env = ccm_seal(stk, counter, distributed[key_id].raw)
            self.send(FrameKind.KEY_DIST, encode_key_dist(key_id, env))
        logger.info("Phase 3 complete on responder side, private address %s",
                    private_address(distributed[KeyId.IRK], self.config.public_address))
        return SessionKeys(stk=stk, ltk=distributed[KeyId.LTK], csrk=distributed[KeyId.CSRK],
                           irk=distributed[KeyId.IRK])

    def _generate_keys(self) -> Dict[KeyId, SecretKey128]:
        keys: Dict[KeyId, SecretKey128] = {}
        seen = set()
        for key_id in KeyId:
            key = SecretKey128.generate(self.rng)
            while key.raw in seen:
                key = SecretKey128.generate(self.rng)
            seen.add(key.raw)
            keys[key_id] = key
        return keys


def run_pairing(endpoint: ChannelEndpoint, role: Role, config: PairingConfig) -> SessionKeys:
    """
    Runs the three pairing phases for one side over ``endpoint``.

    Raises:
        PairingFailedError: confirm mismatch, MIC failure during key
            distribution, an out-of-order SMP frame, or a lost peer.
    """
    logger.info("Starting pairing as %s", role.value)
    return _Session(endpoint, role, config).run()


def pair_devices(channel: SimulatedChannel, initiator: PairingConfig,
                 responder: PairingConfig) -> Tuple[SessionKeys, SessionKeys]:
    """
    Pairs the central (initiator) with the peripheral (responder), one thread each.

    Raises:
        PairingFailedError: either side aborted; the first non-disconnect reason wins.
    """
    with ThreadPoolExecutor(max_workers=2, thread_name_prefix="smp") as pool:
        futures = [pool.submit(run_pairing, channel.central, Role.INITIATOR, initiator),
                   pool.submit(run_pairing, channel.peripheral, Role.RESPONDER, responder)]
        errors = [f.exception() for f in futures]
    failures = [e for e in errors if e is not None]
    if failures:
        failures.sort(key=lambda e: getattr(e, "reason", "") == PairingFailedError.DISCONNECTED)
        raise failures[0]
    return futures[0].result(), futures[1].result()
