import unittest

from cipher.aes import COUNTER_MAX, SecretKey128
from cipher.ccm import CipherEnvelope, ccm_open
from cipher.errors import AuthenticationError, CounterExhaustedError, InvalidInputError
from cipher.signing import encode_signed, sign_counter
from lockproto.audit import AuditKind
from lockproto.client import KeyholderClient, client_unlock, read_result
from lockproto.passkey import ProtocolMode
from stego.errors import CapacityError
from stego.image import RgbImage, from_png_bytes, synthetic_cover
from stego.lsb import extract, measure
from transport.frame import Frame, FrameKind

KEY = SecretKey128(bytes(range(16)))
PASSKEY = "open-sesame-2024"


class TestClientUnlock(unittest.TestCase):
    def setUp(self):
        self.cover = synthetic_cover(32, 32, seed=1)

    def test_stego_crypto_changes_only_lsbs(self):
        frame = client_unlock(PASSKEY, self.cover, ProtocolMode.STEGO_CRYPTO, KEY, 1)
        self.assertIs(frame.kind, FrameKind.STEGO_IMAGE)
        stego = from_png_bytes(frame.payload)
        self.assertLessEqual(measure(self.cover, stego).max_channel_delta, 1)
        env = CipherEnvelope.from_bytes(extract(stego))
        self.assertEqual(env.counter, 1)
        self.assertEqual(ccm_open(KEY, env), PASSKEY.encode())

    def test_crypto_only_sends_bare_envelope(self):
        frame = client_unlock(PASSKEY, None, ProtocolMode.CRYPTO_ONLY, KEY, 3)
        self.assertIs(frame.kind, FrameKind.SIGNED_DATA)
        self.assertEqual(len(frame.payload), len(PASSKEY) + 14)

    def test_stego_only_hides_plain_passkey(self):
        frame = client_unlock(PASSKEY, self.cover, ProtocolMode.STEGO_ONLY, None, None)
        self.assertEqual(extract(from_png_bytes(frame.payload)), PASSKEY.encode())

    def test_plaintext(self):
        self.assertEqual(client_unlock(PASSKEY, None, ProtocolMode.PLAINTEXT, None, None),
                         Frame(FrameKind.PLAINTEXT_UNLOCK, PASSKEY.encode()))

    def test_cover_too_small(self):
        with self.assertRaises(CapacityError):
            client_unlock(PASSKEY, RgbImage.blank(8, 8), ProtocolMode.STEGO_CRYPTO, KEY, 1)

    def test_cipher_mode_needs_key(self):
        with self.assertRaises(InvalidInputError):
            client_unlock(PASSKEY, self.cover, ProtocolMode.STEGO_CRYPTO, None, 1)
        with self.assertRaises(InvalidInputError):
            client_unlock(PASSKEY, None, ProtocolMode.STEGO_ONLY, None, None)


class TestKeyholderClient(unittest.TestCase):
    def test_counter_strictly_increases(self):
        client = KeyholderClient(ProtocolMode.CRYPTO_ONLY, KEY)
        counters = [CipherEnvelope.from_bytes(client.unlock(PASSKEY).payload).counter for _ in range(3)]
        self.assertEqual(counters, [1, 2, 3])

    def test_counter_exhaustion(self):
        client = KeyholderClient(ProtocolMode.CRYPTO_ONLY, KEY, counter=COUNTER_MAX)
        with self.assertRaises(CounterExhaustedError):
            client.unlock(PASSKEY)

    def test_unsigned_modes_have_no_counter(self):
        client = KeyholderClient(ProtocolMode.PLAINTEXT, None)
        client.unlock(PASSKEY)
        self.assertEqual(client.counter, 0)


class TestReadResult(unittest.TestCase):
    def _result(self, counter, granted=True, kind=AuditKind.UNLOCK_GRANTED):
        body = bytes([int(granted)]) + kind.value.encode()
        return Frame(FrameKind.UNLOCK_RESULT, encode_signed(sign_counter(KEY, counter, body)))

    def test_signed_result(self):
        self.assertEqual(read_result(self._result(4), KEY, 3), (True, AuditKind.UNLOCK_GRANTED, 4))

    def test_replayed_result(self):
        with self.assertRaises(AuthenticationError):
            read_result(self._result(4), KEY, 4)

    def test_forged_result(self):
        with self.assertRaises(AuthenticationError):
            read_result(self._result(1), SecretKey128(bytes(16)), 0)

    def test_unsigned_result(self):
        frame = Frame(FrameKind.UNLOCK_RESULT, b"\x00replay")
        self.assertEqual(read_result(frame, None), (False, AuditKind.REPLAY, 0))

    def test_accept_result_tracks_counter(self):
        client = KeyholderClient(ProtocolMode.STEGO_CRYPTO, KEY)
        self.assertEqual(client.accept_result(self._result(1, False, AuditKind.UNLOCK_DENIED)),
                         (False, AuditKind.UNLOCK_DENIED))
        with self.assertRaises(AuthenticationError):
            client.accept_result(self._result(1))
