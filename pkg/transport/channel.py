import enum
import logging
import threading
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Sequence

from transport.frame import Frame
from transport.model import KB, ChannelModel, simulated_transfer_time

logger = logging.getLogger(__name__)

DEFAULT_RECV_TIMEOUT = 2.0


class DisconnectError(ConnectionError):
    """Raised when an endpoint is closed or a receive times out."""


class Direction(str, enum.Enum):
    TO_PERIPHERAL = "central->peripheral"
    TO_CENTRAL = "peripheral->central"


class Interceptor(Protocol):
    """
    Sees every frame before delivery.

    Return ``[frame]`` to forward, ``[other]`` to modify, ``[]`` to drop, or
    several frames to inject; they are delivered in list order.
    """

    def intercept(self, direction: Direction, frame: Frame) -> Sequence[Frame]:
        ...


@dataclass(frozen=True)
class Delivery:
    direction: Direction
    frame: Frame
    delivered_at: float


class SimClock:
    """Monotonic simulated clock in seconds."""

    def __init__(self, start: float = 0.0):
        self._now = start
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("the simulated clock never runs backwards")
        with self._lock:
            self._now += seconds
            return self._now


class ChannelEndpoint:
    """One side of a simulated channel, owned by a single session at a time."""

    def __init__(self, channel: "SimulatedChannel", name: str, outbound: Direction, inbound: Direction):
        self.channel = channel
        self.name = name
        self._outbound = outbound
        self._inbound = inbound

    def send(self, frame: Frame) -> None:
        self.channel._transmit(self._outbound, frame)

    def recv(self, timeout: Optional[float] = None) -> Frame:
        return self.channel._receive(self._inbound, timeout)

    def pending(self) -> int:
        return self.channel._pending(self._inbound)

    def close(self) -> None:
        self.channel.close()

    @property
    def clock(self) -> SimClock:
        return self.channel.clock


class SimulatedChannel:
    """
    In-process BLE link between a ``central`` (keyholder) and a ``peripheral``
    (lock) with per-direction FIFO delivery and a simulated clock.

    Each delivered frame advances the clock by ``latency + size / bandwidth``.
    An attached interceptor sees every frame in both directions.
    """

    def __init__(self, model: Optional[ChannelModel] = None, recv_timeout: float = DEFAULT_RECV_TIMEOUT):
        self.model = model or ChannelModel()
        self.recv_timeout = recv_timeout
        self.clock = SimClock()
        self.transcript: List[Delivery] = []
        self.bytes_sent: Dict[Direction, int] = {d: 0 for d in Direction}
        self.bytes_delivered: Dict[Direction, int] = {d: 0 for d in Direction}
        self._queues: Dict[Direction, deque] = {d: deque() for d in Direction}
        self._cond = threading.Condition()
        self._interceptor: Optional[Interceptor] = None
        self._closed = False
        self.central = ChannelEndpoint(self, "central", Direction.TO_PERIPHERAL, Direction.TO_CENTRAL)
        self.peripheral = ChannelEndpoint(self, "peripheral", Direction.TO_CENTRAL, Direction.TO_PERIPHERAL)

    @property
    def closed(self) -> bool:
        return self._closed

    def attach_interceptor(self, interceptor: Interceptor) -> None:
        if self._closed:
            raise DisconnectError("channel is closed")
        logger.info("Interceptor %s attached", type(interceptor).__name__)
        self._interceptor = interceptor

    def close(self) -> None:
        with self._cond:
            if not self._closed:
                logger.debug("Channel closed at t=%.3f", self.clock.now())
            self._closed = True
            self._cond.notify_all()

    def transfer_time(self, frame: Frame) -> float:
        return simulated_transfer_time(frame.size / KB, self.model)

    def _transmit(self, direction: Direction, frame: Frame) -> None:
        with self._cond:
            if self._closed:
                raise DisconnectError("channel is closed")
            self.bytes_sent[direction] += frame.size
            frames = [frame] if self._interceptor is None else list(self._interceptor.intercept(direction, frame))
            if not frames:
                logger.debug("Frame %r dropped on %s", frame, direction.value)
            for delivered in frames:
                at = self.clock.advance(self.transfer_time(delivered))
                self.bytes_delivered[direction] += delivered.size
                self.transcript.append(Delivery(direction, delivered, at))
                self._queues[direction].append(delivered)
                logger.debug("Delivered %r on %s at t=%.3f", delivered, direction.value, at)
            self._cond.notify_all()

    def _receive(self, direction: Direction, timeout: Optional[float]) -> Frame:
        wait = self.recv_timeout if timeout is None else timeout
        with self._cond:
            self._cond.wait_for(lambda: self._queues[direction] or self._closed, timeout=wait)
            if self._closed:
                raise DisconnectError("channel is closed")
            if not self._queues[direction]:
                raise DisconnectError(f"no frame on {direction.value} within {wait}s")
            return self._queues[direction].popleft()

    def _pending(self, direction: Direction) -> int:
        with self._cond:
            return len(self._queues[direction])
