import logging
from dataclasses import dataclass
from typing import List, Optional, Union

from cipher.aes import SecretKey128
from cipher.errors import AuthenticationError, InvalidInputError
from endpoints.controller_endpoint import LockControllerEndpoint
from lockproto.audit import AuditLog
from lockproto.client import KeyholderClient
from lockproto.decision import UnlockDecision
from lockproto.enrollment import EnrollmentRecord, enroll
from lockproto.passkey import KeySource, Passkey, ProtocolMode
from lockproto.settings import LockSettings
from pairing.methods import SessionKeys
from pairing.smp import PairingConfig, pair_devices
from stego.image import RgbImage, synthetic_cover
from transport.channel import DisconnectError, SimulatedChannel
from transport.frame import Frame
from transport.model import ChannelModel

logger = logging.getLogger(__name__)

DEFAULT_PASSKEY = "open-sesame-2024"


@dataclass
class LockDeployment:
    """A keyholder and a lock joined by one simulated channel."""

    channel: SimulatedChannel
    client: KeyholderClient
    controller: LockControllerEndpoint
    audit: AuditLog
    enrollment: Optional[EnrollmentRecord]
    passkey: Passkey
    cover: RgbImage
    pairing_keys: Optional[SessionKeys] = None

    @classmethod
    def build(cls, mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO, seed: int = 0,
              passkey: Union[Passkey, str] = DEFAULT_PASSKEY, cover: Optional[RgbImage] = None,
              model: Optional[ChannelModel] = None, settings: Optional[LockSettings] = None,
              enrollment: Optional[EnrollmentRecord] = None, enrolled: bool = True,
              audit: Optional[AuditLog] = None) -> "LockDeployment":
        """
        Wires up a deployment. With ``key_source`` set to ``pairing-ltk`` the
        two sides first pair over the channel and use the distributed LTK.
        """
        passkey = passkey if isinstance(passkey, Passkey) else Passkey(passkey)
        mode = ProtocolMode(mode)
        settings = settings or LockSettings(mode=mode, _env_file=None)
        if settings.mode is not mode:
            settings = settings.model_copy(update={"mode": mode})
        channel = SimulatedChannel(model, recv_timeout=settings.recv_timeout)
        if enrolled and enrollment is None:
            enrollment = enroll(passkey, seed=seed, mode=mode, relock_after=settings.relock_after)
        if not enrolled:
            enrollment = None

        pairing_keys = None
        client_key: Optional[SecretKey128] = enrollment.key if enrollment else SecretKey128(bytes(16))
        controller_key = None
        if settings.key_source is KeySource.PAIRING_LTK:
            central_keys, peripheral_keys = pair_devices(channel, PairingConfig(seed=seed),
                                                         PairingConfig(seed=seed + 1))
            client_key, controller_key = central_keys.ltk, peripheral_keys.ltk
            pairing_keys = central_keys

        audit = audit if audit is not None else AuditLog(settings.audit_path)
        controller = LockControllerEndpoint(settings.model_dump(), enrollment, audit,
                                            channel.clock.now, key=controller_key)
        client = KeyholderClient(mode=mode, key=client_key)
        return cls(channel=channel, client=client, controller=controller, audit=audit,
                   enrollment=enrollment, passkey=passkey,
                   cover=cover if cover is not None else synthetic_cover(64, 64, seed=seed),
                   pairing_keys=pairing_keys)

    def submit(self, frame: Frame) -> List[UnlockDecision]:
        """
        Sends ``frame`` from the keyholder side and lets the lock handle
        whatever arrives (an interceptor may have dropped or multiplied it).
        """
        self.channel.central.send(frame)
        decisions = self.controller.serve(self.channel.peripheral)
        while self.channel.central.pending():
            try:
                self.client.accept_result(self.channel.central.recv())
            except (AuthenticationError, InvalidInputError, ValueError) as e:
                logger.warning("Discarding unlock result: %s", e)
            except DisconnectError:
                break
        return decisions

    def unlock(self, passkey: Union[Passkey, str, None] = None) -> Optional[UnlockDecision]:
        """Runs one honest unlock; returns the lock's decision on the last frame it saw."""
        frame = self.client.unlock(passkey or self.passkey, self.cover)
        decisions = self.submit(frame)
        return decisions[-1] if decisions else None

    def advance(self, seconds: float):
        """Moves simulated time forward and lets the relock timer run."""
        now = self.channel.clock.advance(seconds)
        return self.controller.relock_tick(now)
