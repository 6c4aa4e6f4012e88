import logging
from pathlib import Path
from random import Random
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from cipher.aes import SecretKey128
from lockproto.passkey import Passkey, ProtocolMode, passkey_digest

logger = logging.getLogger(__name__)


class NotEnrolledError(RuntimeError):
    """Raised when an operation needs an enrollment record that does not exist."""


class EnrollmentRecord(BaseModel):
    """The secret state a lock shares with its keyholder, stored as one JSON document."""

    model_config = ConfigDict(frozen=True)

    shared_key: str = Field(pattern=r"^[0-9a-f]{32}$")
    passkey_digest: str = Field(pattern=r"^[0-9a-f]{64}$")
    mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO
    relock_after: float = Field(default=5.0, gt=0)

    @property
    def key(self) -> SecretKey128:
        return SecretKey128.from_hex(self.shared_key)

    @property
    def digest(self) -> bytes:
        return bytes.fromhex(self.passkey_digest)


def enroll(passkey: Union[Passkey, str], seed: Optional[int] = None,
           mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO, relock_after: float = 5.0) -> EnrollmentRecord:
    """
    Generates the pre-shared key and the passkey digest for a new keyholder.

    A ``seed`` makes the key reproducible for simulation; without one the key
    comes from the OS.

    Raises:
        InvalidPasskeyError: the passkey is outside 4..64 UTF-8 bytes.
    """
    if not isinstance(passkey, Passkey):
        passkey = Passkey(passkey)
    key = SecretKey128.generate(Random(seed) if seed is not None else None)
    logger.info("Enrolled keyholder in %s mode", mode.value)
    return EnrollmentRecord(shared_key=key.hex(), passkey_digest=passkey_digest(passkey).hex(),
                            mode=mode, relock_after=relock_after)


def save_enrollment(record: EnrollmentRecord, path: Union[str, Path]) -> None:
    Path(path).write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("Enrollment written to %s", path)


def load_enrollment(path: Optional[Union[str, Path]]) -> Optional[EnrollmentRecord]:
    """Returns None when there is no enrollment file, so the lock denies everything."""
    if path is None or not Path(path).is_file():
        logger.warning("No enrollment file at %s", path)
        return None
    try:
        return EnrollmentRecord.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ValueError(f"invalid enrollment file {path}: {e}") from e


def require_enrollment(path: Optional[Union[str, Path]]) -> EnrollmentRecord:
    """Like :func:`load_enrollment`, for callers that cannot run without the shared key."""
    if path is None:
        raise NotEnrolledError("no enrollment file configured")
    record = load_enrollment(path)
    if record is None:
        raise NotEnrolledError(f"no enrollment file at {path}")
    return record
