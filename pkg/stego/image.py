import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from stego.errors import InvalidImageError

logger = logging.getLogger(__name__)

# decoding bound for untrusted carriers; the largest measured carrier is 1200x1200
MAX_CARRIER_PIXELS = 4096 * 4096


@dataclass(frozen=True, eq=False)
class RgbImage:
    """
    An 8-bit RGB pixel grid.

    ``pixels`` has shape (height, width, 3), is row-major and read-only, so a
    flattened view walks pixels row by row with channels in r, g, b order.
    """

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise InvalidImageError(f"expected (height, width, 3) pixels, got {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise InvalidImageError("width and height must be at least 1")
        if pixels.dtype != np.uint8:
            raise InvalidImageError(f"expected uint8 pixels, got {pixels.dtype}")
        pixels = np.ascontiguousarray(pixels).copy()
        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def subpixels(self) -> int:
        return self.pixels.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    @classmethod
    def blank(cls, width: int, height: int, value: int = 0) -> "RgbImage":
        return cls(np.full((height, width, 3), value, dtype=np.uint8))


def from_png_bytes(data: bytes) -> RgbImage:
    """Decodes a PNG carrier; alpha is stripped, palettes and greyscale are expanded."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format != "PNG":
                raise InvalidImageError(f"unsupported carrier format {img.format}, PNG required")
            width, height = img.size
            if width * height > MAX_CARRIER_PIXELS:
                raise InvalidImageError(f"carrier of {width}x{height} exceeds {MAX_CARRIER_PIXELS} pixels")
            return RgbImage(np.array(img.convert("RGB"), dtype=np.uint8))
    except (UnidentifiedImageError, OSError, SyntaxError, EOFError, Image.DecompressionBombError) as e:
        raise InvalidImageError(f"cannot decode image: {e}") from e


def to_png_bytes(image: RgbImage) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(image.pixels).save(buffer, format="PNG")
    return buffer.getvalue()


def load_png(path: Union[str, Path]) -> RgbImage:
    logger.debug("Loading carrier %s", path)
    return from_png_bytes(Path(path).read_bytes())


def save_png(image: RgbImage, path: Union[str, Path]) -> int:
    """Writes ``image`` as PNG and returns the file size in bytes."""
    data = to_png_bytes(image)
    Path(path).write_bytes(data)
    logger.debug("Wrote %d bytes to %s", len(data), path)
    return len(data)


def synthetic_cover(width: int, height: int, seed: int = 0, detail: int = 16) -> RgbImage:
    """
    A deterministic cover image: smooth gradients plus seeded noise.

    Larger ``detail`` means more noise and therefore a larger PNG file.
    """
    if width < 1 or height < 1:
        raise InvalidImageError("width and height must be at least 1")
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    base = np.stack([x * 255 // max(width - 1, 1),
                     y * 255 // max(height - 1, 1),
                     (x + y) * 255 // max(width + height - 2, 1)], axis=-1)
    noise = rng.integers(0, max(detail, 0) + 1, size=(height, width, 3))
    return RgbImage(((base + noise) % 256).astype(np.uint8))
