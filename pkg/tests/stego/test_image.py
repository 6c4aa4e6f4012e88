import io
import struct
import tempfile
import unittest
import zlib
from pathlib import Path

import numpy as np
from PIL import Image

from stego.errors import InvalidImageError
from stego.image import (MAX_CARRIER_PIXELS, RgbImage, from_png_bytes, load_png, save_png, synthetic_cover,
                         to_png_bytes)


def _chunk(kind: bytes, data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", zlib.crc32(kind + data))


def declared_png(width: int, height: int) -> bytes:
    """A few dozen bytes of PNG whose header declares width x height RGB pixels."""
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", header) + _chunk(b"IDAT", b"\x00") + _chunk(b"IEND", b"")


class TestRgbImage(unittest.TestCase):
    def test_png_is_lossless(self):
        image = synthetic_cover(40, 30, seed=1)
        decoded = from_png_bytes(to_png_bytes(image))
        self.assertEqual(decoded, image)
        self.assertEqual((decoded.width, decoded.height), (40, 30))

    def test_pixels_are_read_only(self):
        image = RgbImage.blank(4, 4)
        with self.assertRaises(ValueError):
            image.pixels[0, 0, 0] = 1

    def test_rejects_bad_shapes(self):
        with self.assertRaises(InvalidImageError):
            RgbImage(np.zeros((4, 4), dtype=np.uint8))
        with self.assertRaises(InvalidImageError):
            RgbImage(np.zeros((4, 4, 3), dtype=np.int32))

    def test_rejects_non_png(self):
        buffer = io.BytesIO()
        Image.new("RGB", (8, 8)).save(buffer, format="BMP")
        with self.assertRaises(InvalidImageError):
            from_png_bytes(buffer.getvalue())
        with self.assertRaises(InvalidImageError):
            from_png_bytes(b"not an image at all")

    def test_rejects_decompression_bombs(self):
        with self.assertRaises(InvalidImageError):
            from_png_bytes(declared_png(20000, 20000))

    def test_rejects_carriers_over_the_pixel_bound(self):
        self.assertGreater(5000 * 5000, MAX_CARRIER_PIXELS)
        with self.assertRaises(InvalidImageError) as ctx:
            from_png_bytes(declared_png(5000, 5000))
        self.assertIn("5000x5000", str(ctx.exception))

    def test_alpha_is_dropped(self):
        buffer = io.BytesIO()
        Image.new("RGBA", (3, 2), (10, 20, 30, 40)).save(buffer, format="PNG")
        image = from_png_bytes(buffer.getvalue())
        self.assertEqual(image.pixels.shape, (2, 3, 3))
        self.assertEqual(tuple(image.pixels[0, 0]), (10, 20, 30))

    def test_save_and_load(self):
        image = synthetic_cover(16, 16, seed=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "cover.png"
            size = save_png(image, path)
            self.assertEqual(size, path.stat().st_size)
            self.assertEqual(load_png(path), image)


class TestSyntheticCover(unittest.TestCase):
    def test_deterministic(self):
        self.assertEqual(synthetic_cover(20, 10, seed=4), synthetic_cover(20, 10, seed=4))
        self.assertNotEqual(synthetic_cover(20, 10, seed=4), synthetic_cover(20, 10, seed=5))

    def test_detail_grows_file_size(self):
        plain = len(to_png_bytes(synthetic_cover(128, 128, detail=0)))
        noisy = len(to_png_bytes(synthetic_cover(128, 128, detail=128)))
        self.assertGreater(noisy, plain)
