from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from lockproto.passkey import KeySource, ProtocolMode


class LockSettings(BaseSettings):
    """
    Lock controller configuration.

    Values come from keyword arguments, ``STEGOLOCK_*`` environment variables
    or a ``.env`` file, in that order of precedence.
    """

    model_config = SettingsConfigDict(env_prefix="STEGOLOCK_", env_file=".env", extra="ignore")

    mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO
    relock_after: float = Field(default=5.0, gt=0)
    key_source: KeySource = KeySource.ENROLLMENT
    enrollment_path: Optional[str] = None
    audit_path: Optional[str] = None
    recv_timeout: float = Field(default=2.0, gt=0)
