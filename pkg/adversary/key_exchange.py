"""
The unauthenticated public-key exchange an active relay defeats.

Victim 1 (central) and victim 2 (peripheral) swap Curve25519 public keys in
PUBLIC_KEY frames, then victim 1 sends a BOX_DATA message to victim 2.
"""
import logging
from dataclasses import dataclass
from random import Random
from typing import Optional, Tuple

from nacl.exceptions import CryptoError
from nacl.public import Box, PrivateKey, PublicKey

from transport.channel import SimulatedChannel
from transport.frame import Frame, FrameKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExchangeOutcome:
    sent: bytes
    received: Optional[bytes]
    victim2_decrypted: bool


def exchange_public_keys(channel: SimulatedChannel, rng: Random) -> Tuple[PrivateKey, PublicKey, PrivateKey, PublicKey]:
    """
    Swaps public keys over ``channel``.

    Returns:
        (victim 1 private key, public key victim 1 received,
         victim 2 private key, public key victim 2 received)
    """
    victim1 = PrivateKey.from_seed(rng.randbytes(32))
    victim2 = PrivateKey.from_seed(rng.randbytes(32))
    channel.central.send(Frame(FrameKind.PUBLIC_KEY, bytes(victim1.public_key)))
    seen_by_2 = PublicKey(channel.peripheral.recv().payload)
    channel.peripheral.send(Frame(FrameKind.PUBLIC_KEY, bytes(victim2.public_key)))
    seen_by_1 = PublicKey(channel.central.recv().payload)
    return victim1, seen_by_1, victim2, seen_by_2


def baseline_key_exchange(channel: SimulatedChannel, message: bytes, seed: int = 0) -> ExchangeOutcome:
    """
    Runs the exchange and one message from victim 1 to victim 2.

    With a key-substitution relay attached, the relay reads the message and
    victim 2 still decrypts successfully, so neither victim notices.
    """
    rng = Random(seed)
    victim1, seen_by_1, victim2, seen_by_2 = exchange_public_keys(channel, rng)
    encrypted = Box(victim1, seen_by_1).encrypt(message, rng.randbytes(Box.NONCE_SIZE))
    channel.central.send(Frame(FrameKind.BOX_DATA, bytes(encrypted)))
    delivered = channel.peripheral.recv()
    try:
        received = Box(victim2, seen_by_2).decrypt(delivered.payload)
    except CryptoError as e:
        logger.warning("Victim 2 could not decrypt: %s", e)
        return ExchangeOutcome(sent=message, received=None, victim2_decrypted=False)
    return ExchangeOutcome(sent=message, received=received, victim2_decrypted=True)
