import logging
from pathlib import Path
from typing import Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

logger = logging.getLogger(__name__)

KB = 1000


class ChannelModel(BaseModel):
    """
    Linear time model of the BLE link: every delivered message costs a fixed
    ``latency_s`` plus its size over ``bandwidth_kbps``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    bandwidth_kbps: float = Field(default=10.65, gt=0)
    latency_s: float = Field(default=24.68, ge=0)
    seed: int = 0


def simulated_transfer_time(size_kb: float, model: ChannelModel) -> float:
    """Seconds on the simulated clock to move ``size_kb`` kilobytes."""
    if size_kb < 0:
        raise ValueError("size_kb must be >= 0")
    return model.latency_s + size_kb / model.bandwidth_kbps


def load_channel_config(path: Union[str, Path]) -> ChannelModel:
    """
    Reads a plain key=value file with ``bandwidth_kbps``, ``latency_s`` and ``seed``.

    Raises:
        ValueError: missing file, unknown keys, or out-of-range values.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"channel config {path} does not exist")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None}
    try:
        model = ChannelModel(**values)
    except ValidationError as e:
        raise ValueError(f"invalid channel config {path}: {e}") from e
    logger.info("Loaded channel model from %s: %s", path, model)
    return model
