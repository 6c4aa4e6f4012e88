from dataclasses import dataclass
from typing import Optional

from lockproto.audit import AuditEntry, AuditKind
from transport.frame import Frame


@dataclass
class UnlockRequest:
    """
    A frame travelling through the controller's decode layers.

    Each layer replaces ``payload`` with what it decoded (image -> hidden
    bytes -> plaintext); the envelope layer also fills in ``counter``.
    """

    frame: Frame
    source: str
    payload: bytes
    counter: Optional[int] = None


@dataclass(frozen=True)
class Rejection:
    kind: AuditKind
    reason: str


@dataclass(frozen=True)
class UnlockDecision:
    granted: bool
    kind: AuditKind
    reason: str
    entry: AuditEntry

    @property
    def counter(self) -> Optional[int]:
        return self.entry.counter
