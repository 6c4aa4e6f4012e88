import enum
import logging
from random import Random
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from adversary.interceptors import UNLOCK_KINDS, Chain, Eavesdropper, KeySubstitutionRelay, TamperInterceptor
from adversary.key_exchange import baseline_key_exchange
from adversary.stego_detect import steg_detect
from cipher.aes import SecretKey128
from cipher.ccm import CipherEnvelope, ccm_open
from cipher.errors import AuthenticationError, InvalidInputError, MalformedEnvelopeError
from lockproto.client import client_unlock
from lockproto.decision import UnlockDecision
from lockproto.passkey import InvalidPasskeyError, Passkey, ProtocolMode
from lockproto.session import LockDeployment
from stego.errors import CapacityError
from stego.image import synthetic_cover
from transport.channel import Direction, SimulatedChannel
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)

KEY_EXCHANGE_MESSAGE = b"session hello from victim 1"


class AttackScenario(str, enum.Enum):
    PASSIVE_EAVESDROP = "passive"
    ACTIVE_KEY_SUBSTITUTION = "key-substitution"
    TAMPER = "tamper"
    REPLAY = "replay"


class AttackReport(BaseModel):
    """Ground-truth outcome of one attack run."""

    model_config = ConfigDict(frozen=True, use_enum_values=True)

    scenario: AttackScenario
    protocol_mode: ProtocolMode
    passkey_recovered: bool
    unlock_granted_to_attacker: bool
    tampers_attempted: int = 0
    tampers_detected: int = 0
    stego_detected: bool
    audit_kinds: List[str] = []

    @model_validator(mode="after")
    def _detected_within_attempted(self):
        if not 0 <= self.tampers_detected <= self.tampers_attempted:
            raise ValueError("tampers_detected must lie between 0 and tampers_attempted")
        return self

    @property
    def breached(self) -> bool:
        return self.passkey_recovered or self.unlock_granted_to_attacker


def key_substitution_relay(channel: SimulatedChannel, seed: int = 0,
                           replacement: Optional[bytes] = None) -> KeySubstitutionRelay:
    """Attaches a key-substitution relay to ``channel`` and returns it."""
    relay = KeySubstitutionRelay(Random(seed), replacement)
    channel.attach_interceptor(relay)
    return relay


def recover_passkey(frame: Frame, mode: ProtocolMode, leaked_key: Optional[SecretKey128] = None) -> Optional[bytes]:
    """
    What an observer of ``frame`` learns about the passkey, knowing the
    protocol mode but not the application key (unless it leaked).
    """
    mode = ProtocolMode(mode)
    if frame.kind is FrameKind.PLAINTEXT_UNLOCK:
        return frame.payload
    carried = frame.payload
    if frame.kind is FrameKind.STEGO_IMAGE:
        detection = steg_detect(frame)
        if not detection.detected:
            return None
        carried = detection.payload
    if not mode.uses_cipher:
        return carried
    if leaked_key is None:
        logger.info("Secret in transit but sealed; no key to open it")
        return None
    try:
        return ccm_open(leaked_key, CipherEnvelope.from_bytes(carried))
    except (AuthenticationError, InvalidInputError, MalformedEnvelopeError) as e:
        logger.debug("Leaked key does not open the envelope: %s", e)
        return None


def _observed_counter(frame: Frame) -> int:
    carried = frame.payload
    if frame.kind is FrameKind.STEGO_IMAGE:
        carried = steg_detect(frame).payload
    try:
        return CipherEnvelope.from_bytes(carried).counter
    except (InvalidInputError, MalformedEnvelopeError):
        return 0


def _forge_unlock(deployment: LockDeployment, secret: bytes, seen: Frame, mode: ProtocolMode,
                  leaked_key: Optional[SecretKey128], seed: int) -> List[UnlockDecision]:
    """The attacker's own unlock attempt with a recovered passkey."""
    if mode.uses_cipher and leaked_key is None:
        return []
    try:
        passkey = Passkey(secret.decode("utf-8"))
    except (UnicodeDecodeError, InvalidPasskeyError):
        return []
    counter = _observed_counter(seen) + 1 if mode.uses_cipher else None
    cover = synthetic_cover(deployment.cover.width, deployment.cover.height, seed=seed + 1)
    try:
        frame = client_unlock(passkey, cover, mode, leaked_key, counter)
    except CapacityError:
        return []
    logger.info("Attacker submits its own %s frame", frame.kind.name)
    return deployment.submit(frame)


def run_attack(scenario: AttackScenario, mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO, seed: int = 0,
               tamper_trials: int = 1000, key_leak: bool = False) -> AttackReport:
    """
    Runs one attack scenario against a fresh keyholder/lock pair.

    Every scenario records what crossed the link toward the lock; the report
    compares what the attacker got against the enrolled passkey. With
    ``key_leak`` the attacker is handed the application key.
    """
    scenario = AttackScenario(scenario)
    mode = ProtocolMode(mode)
    deployment = LockDeployment.build(mode=mode, seed=seed)
    channel = deployment.channel
    leaked_key = deployment.client.key if key_leak and mode.uses_cipher else None
    rng = Random(seed)
    recorder = Eavesdropper()
    secret = deployment.passkey.encode()

    tamper: Optional[TamperInterceptor] = None
    relay: Optional[KeySubstitutionRelay] = None
    if scenario is AttackScenario.TAMPER:
        tamper = TamperInterceptor(tamper_trials, rng)
        channel.attach_interceptor(Chain(recorder, tamper))
    elif scenario is AttackScenario.ACTIVE_KEY_SUBSTITUTION:
        relay = KeySubstitutionRelay(rng)
        channel.attach_interceptor(Chain(recorder, relay))
        exchange = baseline_key_exchange(channel, KEY_EXCHANGE_MESSAGE, seed=seed)
        logger.info("Key exchange relayed; victim 2 decrypted: %s", exchange.victim2_decrypted)
    else:
        channel.attach_interceptor(recorder)

    attacker_granted = False
    relayed_before = relay.relayed if relay else 0
    honest = deployment.submit(deployment.client.unlock(deployment.passkey, deployment.cover))
    if relay is not None and relay.relayed > relayed_before:
        attacker_granted = any(d.granted for d in honest)

    captured = recorder.frames(Direction.TO_PERIPHERAL, UNLOCK_KINDS)
    recovered = None
    for frame in captured:
        recovered = recover_passkey(frame, mode, leaked_key)
        if recovered == secret:
            break
    if relay is not None and secret in relay.read:
        recovered = secret
    passkey_recovered = recovered == secret

    if scenario is AttackScenario.REPLAY and captured:
        deployment.advance(deployment.controller.state.relock_after + 1.0)
        replayed = deployment.submit(captured[0])
        attacker_granted = any(d.granted for d in replayed)
    elif scenario is AttackScenario.TAMPER:
        attacker_granted = any(d.granted for d in honest)
    elif passkey_recovered and captured:
        forged = _forge_unlock(deployment, secret, captured[0], mode, leaked_key, seed)
        attacker_granted = attacker_granted or any(d.granted for d in forged)

    stego_detected = any(steg_detect(f).detected for f in captured if f.kind is FrameKind.STEGO_IMAGE)
    attempted = tamper.injected if tamper else 0
    detected = sum(1 for d in honest if not d.granted) if tamper else 0

    report = AttackReport(scenario=scenario, protocol_mode=mode, passkey_recovered=passkey_recovered,
                          unlock_granted_to_attacker=attacker_granted, tampers_attempted=attempted,
                          tampers_detected=detected, stego_detected=stego_detected,
                          audit_kinds=[e.kind for e in deployment.audit.entries])
    logger.info("Attack %s against %s: recovered=%s granted=%s", scenario.value, mode.value,
                report.passkey_recovered, report.unlock_granted_to_attacker)
    return report


def run_matrix(seed: int = 0, tamper_trials: int = 1000) -> List[AttackReport]:
    """Every scenario against every mode."""
    return [run_attack(s, m, seed, tamper_trials) for s in AttackScenario for m in ProtocolMode]
