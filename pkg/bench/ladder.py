import csv
import io
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

from bench.calibration import Calibration
from lockproto.passkey import ProtocolMode
from lockproto.session import LockDeployment
from stego.errors import CapacityError, InvalidImageError
from stego.image import RgbImage, load_png, synthetic_cover
from transport.model import KB

logger = logging.getLogger(__name__)

CSV_HEADER = ("dimensions", "size_kb", "encode_s", "transfer_s", "decode_s", "total_s")

# (width, height, detail) of the generated carriers; detail controls the PNG size
DEFAULT_LADDER: Tuple[Tuple[int, int, int], ...] = (
    (225, 400, 2),
    (225, 400, 24),
    (720, 1280, 0),
    (720, 1280, 2),
    (720, 1280, 8),
    (720, 1280, 32),
    (720, 1280, 128),
    (1200, 1200, 128),
)

Timer = Callable[[], float]
LadderImage = Union[str, Path, RgbImage]


@dataclass(frozen=True)
class BenchRow:
    dimensions: str
    file_size_kb: float
    encode_s: float
    transfer_s: float
    decode_s: float

    @property
    def total_s(self) -> float:
        return self.encode_s + self.transfer_s + self.decode_s


@dataclass(frozen=True)
class SkippedImage:
    source: str
    reason: str


@dataclass
class LadderResult:
    rows: List[BenchRow] = field(default_factory=list)
    skipped: List[SkippedImage] = field(default_factory=list)

    def points(self) -> List[Tuple[float, float]]:
        """(file_size_kb, transfer_s) pairs, ready for ``calibrate``."""
        return [(r.file_size_kb, r.transfer_s) for r in self.rows]


def default_ladder(seed: int = 0) -> List[RgbImage]:
    return [synthetic_cover(w, h, seed=seed + i, detail=d) for i, (w, h, d) in enumerate(DEFAULT_LADDER)]


def _load(image: LadderImage) -> Tuple[str, RgbImage]:
    if isinstance(image, RgbImage):
        return f"{image.width}x{image.height}", image
    return str(image), load_png(image)


def _run_one(cover: RgbImage, calibration: Calibration, mode: ProtocolMode, seed: int, timer: Timer) -> BenchRow:
    deployment = LockDeployment.build(mode=mode, seed=seed, cover=cover, model=calibration.channel_model(seed))
    channel = deployment.channel

    start = timer()
    frame = deployment.client.unlock(deployment.passkey, cover)
    encode_s = timer() - start

    sent_at = channel.clock.now()
    channel.central.send(frame)
    transfer_s = channel.clock.now() - sent_at

    delivered = channel.peripheral.recv()
    start = timer()
    decision = deployment.controller.handle(delivered)
    decode_s = timer() - start
    if not decision.granted:
        logger.error("Ladder unlock for %dx%d denied: %s", cover.width, cover.height, decision.reason)

    return BenchRow(dimensions=f"{cover.width}x{cover.height}", file_size_kb=len(frame.payload) / KB,
                    encode_s=encode_s, transfer_s=transfer_s, decode_s=decode_s)


def run_ladder(images: Sequence[LadderImage], calibration: Calibration,
               mode: ProtocolMode = ProtocolMode.STEGO_CRYPTO, seed: int = 0,
               timer: Optional[Timer] = None) -> LadderResult:
    """
    Runs the full unlock pipeline once per carrier over a channel modeled
    from ``calibration``.

    Transfer times come from the simulated clock; encode and decode are
    measured with ``timer`` (``time.perf_counter`` unless given). Rows are
    sorted by carrier size; images that cannot be read are skipped.
    """
    timer = timer or time.perf_counter
    result = LadderResult()
    for image in images:
        try:
            source, cover = _load(image)
        except (InvalidImageError, OSError) as e:
            logger.warning("Skipping %s: %s", image, e)
            result.skipped.append(SkippedImage(str(image), str(e)))
            continue
        try:
            row = _run_one(cover, calibration, ProtocolMode(mode), seed, timer)
        except CapacityError as e:
            logger.warning("Skipping %s: %s", source, e)
            result.skipped.append(SkippedImage(source, str(e)))
            continue
        logger.info("%s: %.2f KB, transfer %.3f s", row.dimensions, row.file_size_kb, row.transfer_s)
        result.rows.append(row)
    result.rows.sort(key=lambda r: (r.file_size_kb, r.dimensions))
    return result


def write_csv(result: LadderResult, out: Optional[Union[str, Path]] = None) -> str:
    """
    Renders the ladder as CSV and writes it to ``out`` if given. Skipped
    images follow the data rows as ``skipped:<source>`` rows with empty cells.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in result.rows:
        writer.writerow([row.dimensions, f"{row.file_size_kb:.3f}", f"{row.encode_s:.6f}",
                         f"{row.transfer_s:.6f}", f"{row.decode_s:.6f}", f"{row.total_s:.6f}"])
    for skipped in result.skipped:
        writer.writerow([f"skipped:{skipped.source}", "", "", "", "", ""])
    text = buffer.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def write_plot_data(result: LadderResult, directory: Union[str, Path]) -> List[Path]:
    """Two-column ``size_kb time_s`` files: end-to-end totals and transfer times."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    series = {
        "size_vs_total.dat": [(r.file_size_kb, r.total_s) for r in result.rows],
        "size_vs_transfer.dat": [(r.file_size_kb, r.transfer_s) for r in result.rows],
    }
    written = []
    for name, points in series.items():
        path = directory / name
        path.write_text("".join(f"{x:.3f} {y:.6f}\n" for x, y in points))
        written.append(path)
    return written
