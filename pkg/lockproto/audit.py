import enum
import logging
import threading
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict

from lockproto.passkey import ProtocolMode

logger = logging.getLogger(__name__)


class AuditKind(str, enum.Enum):
    UNLOCK_GRANTED = "unlock-granted"
    UNLOCK_DENIED = "unlock-denied"
    AUTH_FAILURE = "auth-failure"
    REPLAY = "replay"
    MALFORMED = "malformed"
    NOT_ENROLLED = "not-enrolled"
    RELOCK = "relock"


class AuditEntry(BaseModel):
    """One line of the audit log; field names are a stable format."""

    model_config = ConfigDict(frozen=True, use_enum_values=True)

    timestamp: float
    kind: AuditKind
    counter: Optional[int] = None
    mode: ProtocolMode
    source: str


class AuditLog:
    """
    Append-only audit sink with monotone timestamps.

    Entries are kept in memory and, when ``path`` is set, appended to a
    JSON-lines file. One writer; readers use ``read_audit``.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._entries: List[AuditEntry] = []
        self._lock = threading.Lock()

    @property
    def entries(self) -> List[AuditEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def last_timestamp(self) -> Optional[float]:
        with self._lock:
            return self._entries[-1].timestamp if self._entries else None

    def append(self, entry: AuditEntry) -> AuditEntry:
        with self._lock:
            if self._entries and entry.timestamp < self._entries[-1].timestamp:
                raise ValueError("audit timestamps must not decrease")
            self._entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(entry.model_dump_json() + "\n")
        logger.info("Audit: %s counter=%s mode=%s source=%s", entry.kind, entry.counter, entry.mode, entry.source)
        return entry

    def count(self, kind: AuditKind) -> int:
        return sum(1 for e in self.entries if e.kind == kind.value)

    def dumps(self) -> bytes:
        """The log as JSON-lines bytes, identical to the file contents."""
        return "".join(e.model_dump_json() + "\n" for e in self.entries).encode("utf-8")


def read_audit(path: Union[str, Path]) -> List[AuditEntry]:
    with Path(path).open(encoding="utf-8") as fh:
        return [AuditEntry.model_validate_json(line) for line in fh if line.strip()]
