import enum
from dataclasses import dataclass, replace
from typing import Optional


class LockStatus(str, enum.Enum):
    LOCKED = "locked"
    UNLOCKED = "unlocked"


@dataclass(frozen=True)
class LockState:
    """Simulated actuator state; UNLOCKED always carries ``unlocked_at``."""

    state: LockStatus = LockStatus.LOCKED
    unlocked_at: Optional[float] = None
    relock_after: float = 5.0

    def __post_init__(self):
        if self.state is LockStatus.UNLOCKED and self.unlocked_at is None:
            raise ValueError("an unlocked state needs unlocked_at")

    @property
    def relock_deadline(self) -> Optional[float]:
        if self.state is LockStatus.LOCKED:
            return None
        return self.unlocked_at + self.relock_after

    def unlocked(self, now: float) -> "LockState":
        return replace(self, state=LockStatus.UNLOCKED, unlocked_at=now)

    def locked(self) -> "LockState":
        return replace(self, state=LockStatus.LOCKED, unlocked_at=None)
