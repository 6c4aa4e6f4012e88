import logging
from dataclasses import dataclass
from typing import Dict, Optional

from cipher.aes import SecretKey128
from cipher.ccm import ccm_open
from cipher.errors import AuthenticationError, InvalidInputError, MalformedEnvelopeError
from pairing.methods import PASSKEY_MAX, PairingMethod, confirm_value, derive_stk, derive_tk
from pairing.smp import KeyId, PairingTranscript

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecoveredStk:
    stk: SecretKey128
    tk: SecretKey128
    passkey: Optional[int] = None
    candidates_tried: int = 0


def recover_stk(transcript: PairingTranscript, max_candidates: int = PASSKEY_MAX + 1) -> Optional[RecoveredStk]:
    """
    Recomputes the STK a passive observer can get from a legacy pairing.

    JustWorks uses a public all-zero TK. Passkey entry falls to a search over
    at most 10**6 TK candidates checked against the initiator's confirm value.
    Out-of-band pairings are not recoverable.
    """
    method = transcript.method
    if method is None or not transcript.confirms or len(transcript.randoms) < 2:
        logger.info("Transcript incomplete, nothing to recover")
        return None
    mconfirm, mrand, srand = transcript.confirms[0], transcript.randoms[0], transcript.randoms[1]

    if method is PairingMethod.JUST_WORKS:
        tk = derive_tk(method)
        if confirm_value(tk, mrand) != mconfirm:
            return None
        logger.info("JustWorks transcript: STK recomputed from the zero TK")
        return RecoveredStk(derive_stk(tk, mrand, srand), tk, candidates_tried=1)

    if method is PairingMethod.PASSKEY_ENTRY:
        for candidate in range(min(max_candidates, PASSKEY_MAX + 1)):
            tk = derive_tk(method, candidate)
            if confirm_value(tk, mrand) == mconfirm:
                logger.info("Passkey %06d found after %d candidates", candidate, candidate + 1)
                return RecoveredStk(derive_stk(tk, mrand, srand), tk, candidate, candidate + 1)
        logger.info("Passkey search exhausted %d candidates", max_candidates)
        return None

    logger.info("Out-of-band pairing: TK never crossed the link")
    return None


def recover_session_keys(transcript: PairingTranscript, stk: SecretKey128) -> Dict[KeyId, SecretKey128]:
    """Opens the captured key-distribution envelopes with a recovered STK."""
    keys = {}
    for key_id, env in transcript.key_dist:
        try:
            keys[key_id] = SecretKey128(ccm_open(stk, env))
        except (AuthenticationError, InvalidInputError, MalformedEnvelopeError) as e:
            logger.debug("Could not open %s: %s", key_id.name, e)
    return keys
