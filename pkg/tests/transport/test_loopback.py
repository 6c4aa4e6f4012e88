import unittest

from transport.frame import Frame, FrameKind
from transport.loopback import LoopbackServer, exchange, parse_address


class TestLoopback(unittest.TestCase):
    def setUp(self):
        self.seen = []

        def handler(frame, source):
            self.seen.append(source)
            return Frame(FrameKind.UNLOCK_RESULT, frame.payload[::-1])

        self.server = LoopbackServer(("127.0.0.1", 0), handler)
        self.server.start()

    def tearDown(self):
        self.server.stop()

    def test_request_reply(self):
        reply = exchange(self.server.address, Frame(FrameKind.PLAINTEXT_UNLOCK, b"pass"), timeout=5)
        self.assertEqual(reply, Frame(FrameKind.UNLOCK_RESULT, b"ssap"))
        self.assertTrue(self.seen[0].startswith("127.0.0.1:"))

    def test_parse_address(self):
        self.assertEqual(parse_address("localhost:7431"), ("localhost", 7431))
        self.assertEqual(parse_address(":80"), ("127.0.0.1", 80))
        with self.assertRaises(ValueError):
            parse_address("localhost")
