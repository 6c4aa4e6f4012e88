import unittest

from hypothesis import given
from hypothesis import strategies as st

from transport.frame import HEADER_SIZE, Frame, FrameError, FrameKind, decode_frame, encode_frame, parse_header


class TestFrame(unittest.TestCase):
    def test_wire_layout(self):
        wire = encode_frame(Frame(FrameKind.STEGO_IMAGE, b"abc"))
        self.assertEqual(wire, b"\x00\x00\x00\x03\x06abc")
        self.assertEqual(Frame(FrameKind.STEGO_IMAGE, b"abc").size, HEADER_SIZE + 3)

    def test_kinds_numbered_in_order(self):
        self.assertEqual(FrameKind.PAIR_REQ, 1)
        self.assertEqual(FrameKind.UNLOCK_RESULT, 9)
        self.assertEqual(FrameKind.BOX_DATA, 11)

    def test_unknown_kind(self):
        with self.assertRaises(FrameError):
            decode_frame(b"\x00\x00\x00\x00\x63")
        with self.assertRaises(FrameError):
            parse_header(b"\x00\x00\x00\x00\x00")

    def test_truncated(self):
        with self.assertRaises(FrameError):
            decode_frame(b"\x00\x00")
        with self.assertRaises(FrameError):
            decode_frame(b"\x00\x00\x00\x05\x07abc")

    def test_oversize_declared_length(self):
        with self.assertRaises(FrameError):
            parse_header(b"\x7f\xff\xff\xff\x07")

    @given(st.sampled_from(list(FrameKind)), st.binary(max_size=300))
    def test_decode_inverts_encode(self, kind, payload):
        self.assertEqual(decode_frame(encode_frame(Frame(kind, payload))), Frame(kind, payload))
