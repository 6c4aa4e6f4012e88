import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cipher.errors import InvalidInputError
from transport.model import ChannelModel, simulated_transfer_time

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TableRow:
    dimensions: str
    size_kb: float
    total_s: float


# measured carrier sizes and end-to-end unlock times over BLE
TABLE1: Tuple[TableRow, ...] = (
    TableRow("225x400", 6.97, 19.8),
    TableRow("225x400", 21.85, 22.85),
    TableRow("720x1280", 43.0, 36.0),
    TableRow("720x1280", 79.7, 36.01),
    TableRow("720x1280", 224.0, 52.27),
    TableRow("720x1280", 557.0, 64.0),
    TableRow("720x1280", 1070.0, 120.7),
    TableRow("1200x1200", 1100.0, 137.0),
)


class Calibration(BaseModel):
    """Least-squares fit of time against size: slope is 1/bandwidth, intercept is latency."""

    model_config = ConfigDict(frozen=True)

    bandwidth_kbps: float = Field(gt=0)
    latency_s: float
    r_squared: float = Field(ge=0, le=1)

    def channel_model(self, seed: int = 0) -> ChannelModel:
        return ChannelModel(bandwidth_kbps=self.bandwidth_kbps, latency_s=max(self.latency_s, 0.0), seed=seed)

    def predict(self, size_kb: float) -> float:
        return simulated_transfer_time(size_kb, self.channel_model())


@dataclass(frozen=True)
class ModeledRow:
    dimensions: str
    size_kb: float
    measured_s: float
    modeled_s: float

    @property
    def relative_error(self) -> float:
        return (self.modeled_s - self.measured_s) / self.measured_s


def calibrate(points: Sequence[Tuple[float, float]]) -> Calibration:
    """
    Fits ``total_s = latency_s + size_kb / bandwidth_kbps`` to (size_kb, total_s) points.

    Raises:
        InvalidInputError: fewer than two distinct sizes, or a fit that does
            not grow with size.
    """
    if len({size for size, _ in points}) < 2:
        raise InvalidInputError("calibration needs at least two distinct sizes")
    sizes = np.array([p[0] for p in points], dtype=float)
    times = np.array([p[1] for p in points], dtype=float)
    slope, intercept = np.polyfit(sizes, times, 1)
    if slope <= 0:
        raise InvalidInputError(f"time does not grow with size (slope {slope:.6g})")

    residual = times - (slope * sizes + intercept)
    ss_tot = float(np.sum((times - times.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(residual ** 2)) / ss_tot
    calibration = Calibration(bandwidth_kbps=1.0 / slope, latency_s=float(intercept),
                              r_squared=min(max(r_squared, 0.0), 1.0))
    logger.info("Calibrated %d points: %.3f KB/s, %.3f s latency, r^2=%.4f", len(points),
                calibration.bandwidth_kbps, calibration.latency_s, calibration.r_squared)
    return calibration


def load_table_csv(path: Union[str, Path]) -> List[Tuple[float, float]]:
    """Reads ``size_kb,total_s`` rows; a header line is optional."""
    points = []
    with open(path, newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                points.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if line_no == 1:
                    continue
                raise InvalidInputError(f"{path}:{line_no}: expected size_kb,total_s") from None
    return points


def modeled_table(calibration: Calibration, table: Sequence[TableRow] = TABLE1) -> List[ModeledRow]:
    return [ModeledRow(row.dimensions, row.size_kb, row.total_s, calibration.predict(row.size_kb))
            for row in table]
