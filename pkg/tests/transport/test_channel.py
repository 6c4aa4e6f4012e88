import threading
import time
import unittest

import pytest

from transport.channel import DisconnectError, Direction, SimClock, SimulatedChannel
from transport.frame import Frame, FrameKind
from transport.model import ChannelModel


class Inject:
    def __init__(self, extra: Frame):
        self.extra = extra

    def intercept(self, direction, frame):
        return [frame, self.extra] if direction is Direction.TO_PERIPHERAL else [frame]


class Drop:
    def intercept(self, direction, frame):
        return []


class Identity:
    def intercept(self, direction, frame):
        return [frame]


class TestSimulatedChannel(unittest.TestCase):
    def setUp(self):
        self.channel = SimulatedChannel(recv_timeout=0.2)

    def test_fifo_both_directions(self):
        frames = [Frame(FrameKind.PLAINTEXT_UNLOCK, bytes([i]) * 4) for i in range(5)]
        for frame in frames:
            self.channel.central.send(frame)
        self.channel.peripheral.send(Frame(FrameKind.UNLOCK_RESULT, b"\x01"))
        self.assertEqual([self.channel.peripheral.recv() for _ in frames], frames)
        self.assertEqual(self.channel.central.recv(), Frame(FrameKind.UNLOCK_RESULT, b"\x01"))

    def test_clock_advances_by_model(self):
        """
        A 43 KB frame costs latency plus 43 KB over the bandwidth.
        """
        model = ChannelModel()
        frame = Frame(FrameKind.STEGO_IMAGE, bytes(43_000 - 5))
        self.channel.central.send(frame)
        self.assertAlmostEqual(self.channel.clock.now(), model.latency_s + 43 / model.bandwidth_kbps)
        self.assertEqual(self.channel.transcript[0].delivered_at, self.channel.clock.now())

    def test_drop_times_out(self):
        self.channel.attach_interceptor(Drop())
        self.channel.central.send(Frame(FrameKind.PLAINTEXT_UNLOCK, b"pass"))
        with self.assertRaises(DisconnectError):
            self.channel.peripheral.recv()
        self.assertEqual(self.channel.clock.now(), 0.0)

    def test_inject_adds_one_frame(self):
        extra = Frame(FrameKind.SIGNED_DATA, b"injected")
        self.channel.attach_interceptor(Inject(extra))
        sent = Frame(FrameKind.SIGNED_DATA, b"honest")
        self.channel.central.send(sent)
        self.assertEqual(self.channel.peripheral.pending(), 2)
        self.assertEqual(self.channel.peripheral.recv(), sent)
        self.assertEqual(self.channel.peripheral.recv(), extra)

    def test_identity_conserves_bytes(self):
        self.channel.attach_interceptor(Identity())
        self.channel.central.send(Frame(FrameKind.STEGO_IMAGE, bytes(100)))
        self.channel.peripheral.send(Frame(FrameKind.UNLOCK_RESULT, bytes(3)))
        for direction in Direction:
            self.assertEqual(self.channel.bytes_sent[direction], self.channel.bytes_delivered[direction])

    def test_closed_channel(self):
        self.channel.close()
        with self.assertRaises(DisconnectError):
            self.channel.peripheral.recv()
        with self.assertRaises(DisconnectError):
            self.channel.central.send(Frame(FrameKind.PLAINTEXT_UNLOCK, b"pass"))

    def test_blocking_receive_across_threads(self):
        frame = Frame(FrameKind.PAIR_REQ, b"\x00\x00\x10\x07")

        def later():
            time.sleep(0.05)
            self.channel.central.send(frame)

        thread = threading.Thread(target=later)
        thread.start()
        self.assertEqual(self.channel.peripheral.recv(timeout=2.0), frame)
        thread.join()

    def test_deterministic_transcripts(self):
        def run():
            channel = SimulatedChannel(ChannelModel(bandwidth_kbps=5, latency_s=1.5, seed=3))
            for size in (10, 2000, 30):
                channel.central.send(Frame(FrameKind.SIGNED_DATA, bytes(size)))
            return [(d.direction, d.frame, d.delivered_at) for d in channel.transcript]

        self.assertEqual(run(), run())


def test_clock_never_runs_backwards():
    clock = SimClock()
    assert clock.advance(1.5) == 1.5
    with pytest.raises(ValueError):
        clock.advance(-0.1)
    assert clock.now() == 1.5
